#pragma once

namespace becaptcha {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace becaptcha
