#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "becaptcha/errors.hpp"

namespace becaptcha {

// Just enough TOML for config files: [sections], key = value with strings,
// booleans, numbers, and flat numeric arrays. Keys flatten to "section.key".
using TomlValue = std::variant<bool, double, std::string, std::vector<double>>;
using TomlTable = std::map<std::string, TomlValue>;

namespace toml_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline TomlValue parse_value(const std::string& raw, const std::string& where) {
  const std::string v = trim(raw);
  if (v.empty()) throw Error(ErrorKind::InvalidConfig, where + ": empty value");
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw Error(ErrorKind::InvalidConfig, where + ": unterminated string");
    return v.substr(1, v.size() - 2);
  }
  if (v.front() == '[') {
    if (v.back() != ']')
      throw Error(ErrorKind::InvalidConfig, where + ": unterminated array");
    std::vector<double> arr;
    std::string body = v.substr(1, v.size() - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t comma = body.find(',', pos);
      const std::string item = trim(body.substr(pos, comma - pos));
      if (!item.empty()) {
        try {
          arr.push_back(std::stod(item));
        } catch (...) {
          throw Error(ErrorKind::InvalidConfig, where + ": non-numeric array element");
        }
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return arr;
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size())
      throw Error(ErrorKind::InvalidConfig, where + ": trailing characters after number");
    return d;
  } catch (const Error&) {
    throw;
  } catch (...) {
    throw Error(ErrorKind::InvalidConfig, where + ": cannot parse value '" + v + "'");
  }
}

}  // namespace toml_detail

inline TomlTable parse_toml(std::istream& in, const std::string& name = "<config>") {
  TomlTable table;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = name + ":" + std::to_string(lineno);
    // strip comments outside of strings
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line = line.substr(0, i);
        break;
      }
    }
    const std::string t = toml_detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw Error(ErrorKind::InvalidConfig, where + ": bad section header");
      section = toml_detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidConfig, where + ": expected key = value");
    std::string key = toml_detail::trim(t.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::InvalidConfig, where + ": empty key");
    if (!section.empty()) key = section + "." + key;
    table[key] = toml_detail::parse_value(t.substr(eq + 1), where);
  }
  return table;
}

inline TomlTable parse_toml_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingPath, path.string());
  return parse_toml(in, path.string());
}

inline double toml_number(const TomlTable& t, const std::string& key, double fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (const double* d = std::get_if<double>(&it->second)) return *d;
  throw Error(ErrorKind::InvalidConfig, "config key '" + key + "' must be a number");
}

inline bool toml_bool(const TomlTable& t, const std::string& key, bool fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (const bool* b = std::get_if<bool>(&it->second)) return *b;
  throw Error(ErrorKind::InvalidConfig, "config key '" + key + "' must be a boolean");
}

inline std::string toml_string(const TomlTable& t, const std::string& key,
                               const std::string& fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
  throw Error(ErrorKind::InvalidConfig, "config key '" + key + "' must be a string");
}

inline std::vector<double> toml_array(const TomlTable& t, const std::string& key,
                                      const std::vector<double>& fallback) {
  auto it = t.find(key);
  if (it == t.end()) return fallback;
  if (const auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
  throw Error(ErrorKind::InvalidConfig, "config key '" + key + "' must be an array");
}

}  // namespace becaptcha
