#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "becaptcha/classify.hpp"
#include "becaptcha/errors.hpp"
#include "becaptcha/features.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

enum class FusionMode { FeatureConcat, ScoreMean };

inline const char* fusion_mode_string(FusionMode m) {
  return m == FusionMode::FeatureConcat ? "feature_concat" : "score_mean";
}

inline FusionMode parse_fusion_mode(const std::string& s) {
  if (s == "feature_concat" || s == "concat") return FusionMode::FeatureConcat;
  if (s == "score_mean" || s == "mean") return FusionMode::ScoreMean;
  throw Error(ErrorKind::InvalidConfig, "unknown fusion mode '" + s + "'");
}

// Deployable scorer: one fused-feature model, or a touch model plus a fused
// model whose bot scores are averaged, thresholded once at tau.
struct ModelBundle {
  FusionMode fusion_mode = FusionMode::FeatureConcat;
  double tau = 0.5;
  std::string model_version = "unversioned";
  std::optional<ClassifierModel> touch_model;  // 6-dim touch features
  std::optional<ClassifierModel> fused_model;  // 18-dim touch+accel features

  void validate() const {
    if (tau < 0.0 || tau > 1.0)
      throw Error(ErrorKind::InvalidConfig, "tau must lie in [0,1]");
    if (!touch_model && !fused_model)
      throw Error(ErrorKind::InvalidConfig, "bundle holds no model");
    if (fusion_mode == FusionMode::ScoreMean && (!touch_model || !fused_model))
      throw Error(ErrorKind::InvalidConfig, "score fusion needs both modality models");
    if (touch_model && touch_model->mode != FeatureMode::TouchOnly)
      throw Error(ErrorKind::ModeMismatch, "touch model must consume touch features");
    if (fused_model && fused_model->mode != FeatureMode::TouchAccel)
      throw Error(ErrorKind::ModeMismatch, "fused model must consume touch+accel features");
  }
};

struct VerifyRequest {
  std::vector<RawTouchPoint> touch;  // pixels + milliseconds
  double screen_w_px = 0.0;
  double screen_h_px = 0.0;
  std::vector<std::array<double, 4>> accel;  // ax, ay, az, t_ms
};

struct VerifyResponse {
  double bot_score = 0.0;
  bool is_bot = false;
  double tau = 0.5;
  std::string model_version;

  nlohmann::json to_json() const {
    return nlohmann::json{{"bot_score", bot_score},
                          {"decision", is_bot ? "bot" : "human"},
                          {"tau", tau},
                          {"model_version", model_version}};
  }
};

inline VerifyRequest parse_verify_request(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("touch") || !j.contains("screen"))
      throw Error(ErrorKind::MalformedRequest, "request needs touch points and screen dims");
    VerifyRequest r;
    if (!j["screen"].is_array() || j["screen"].size() != 2)
      throw Error(ErrorKind::MalformedRequest, "screen must be [w,h]");
    r.screen_w_px = j["screen"][0].get<double>();
    r.screen_h_px = j["screen"][1].get<double>();
    for (const auto& p : j["touch"]) {
      if (!p.is_array() || p.size() != 3)
        throw Error(ErrorKind::MalformedRequest, "touch point must be [x_px,y_px,t_ms]");
      r.touch.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
    }
    if (j.contains("accel")) {
      for (const auto& a : j["accel"]) {
        if (!a.is_array() || a.size() != 4)
          throw Error(ErrorKind::MalformedRequest, "accel sample must be [ax,ay,az,t_ms]");
        r.accel.push_back({a[0].get<double>(), a[1].get<double>(), a[2].get<double>(),
                           a[3].get<double>()});
      }
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRequest, std::string("bad request JSON: ") + e.what());
  }
}

namespace bundle_detail {

inline AccelTrace accel_from_request(const VerifyRequest& r, double touch_t0_ms,
                                     double duration_s) {
  AccelTrace trace;
  for (const auto& a : r.accel) {
    const double t = (a[3] - touch_t0_ms) / 1000.0;
    if (t < 0.0 || t > duration_s) continue;
    trace.samples.push_back({a[0], a[1], a[2], t});
  }
  if (trace.samples.empty())
    throw Error(ErrorKind::MalformedRequest,
                "no accelerometer samples inside the gesture window");
  return trace;
}

}  // namespace bundle_detail

// Normalize + featurize the request, score per the fusion mode, threshold at
// tau (bot when score >= tau).
inline VerifyResponse verify(const ModelBundle& bundle, const VerifyRequest& request) {
  bundle.validate();
  if (request.touch.size() < 2)
    throw Error(ErrorKind::MalformedRequest, "touch trace needs at least 2 points");
  if (request.screen_w_px <= 0.0 || request.screen_h_px <= 0.0)
    throw Error(ErrorKind::MalformedRequest, "screen dimensions must be positive");

  TouchTrace touch = normalize_touch(request.touch, request.screen_w_px, request.screen_h_px);
  TouchFeatures tf;
  try {
    tf = touch_features(touch);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ZeroDistance)
      throw Error(ErrorKind::MalformedRequest, "zero-length swipe cannot be scored");
    throw;
  }

  const bool needs_accel =
      bundle.fusion_mode == FusionMode::ScoreMean || (bundle.fused_model && !bundle.touch_model) ||
      (bundle.fusion_mode == FusionMode::FeatureConcat && bundle.fused_model);
  std::optional<AccelFeatures> af;
  if (needs_accel) {
    if (request.accel.empty())
      throw Error(ErrorKind::MalformedRequest, "this bundle requires accelerometer samples");
    AccelTrace accel = bundle_detail::accel_from_request(request, request.touch.front().t_ms,
                                                         touch.duration());
    af = accel_features(accel);
  }

  double score = 0.0;
  if (bundle.fusion_mode == FusionMode::FeatureConcat) {
    if (bundle.fused_model)
      score = predict_bot_score(*bundle.fused_model, fuse_features(tf, af));
    else
      score = predict_bot_score(*bundle.touch_model, fuse_features(tf));
  } else {
    const double touch_score = predict_bot_score(*bundle.touch_model, fuse_features(tf));
    const double fused_score = predict_bot_score(*bundle.fused_model, fuse_features(tf, af));
    score = 0.5 * (touch_score + fused_score);
  }

  VerifyResponse resp;
  resp.bot_score = score;
  resp.tau = bundle.tau;
  resp.is_bot = score >= bundle.tau;
  resp.model_version = bundle.model_version;
  return resp;
}

// --- persistence -------------------------------------------------------------

inline constexpr int kBundleFormatVersion = 1;

inline std::string fnv1a_hex(const std::string& payload) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : payload) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline nlohmann::json bundle_payload_json(const ModelBundle& b) {
  nlohmann::json p;
  p["fusion_mode"] = fusion_mode_string(b.fusion_mode);
  p["tau"] = b.tau;
  p["model_version"] = b.model_version;
  p["touch_model"] = b.touch_model ? classifier_to_json(*b.touch_model) : nlohmann::json();
  p["fused_model"] = b.fused_model ? classifier_to_json(*b.fused_model) : nlohmann::json();
  return p;
}

inline void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  bundle.validate();
  nlohmann::json payload = bundle_payload_json(bundle);
  nlohmann::json doc;
  doc["format_version"] = kBundleFormatVersion;
  doc["checksum"] = fnv1a_hex(payload.dump());
  doc["payload"] = std::move(payload);
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingPath, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

inline ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::MissingPath, path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::CorruptBundle, std::string("unparseable bundle: ") + e.what());
  }
  if (doc.value("format_version", -1) != kBundleFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "unsupported bundle format version");
  if (!doc.contains("payload") || !doc.contains("checksum"))
    throw Error(ErrorKind::CorruptBundle, "bundle missing payload or checksum");
  if (fnv1a_hex(doc["payload"].dump()) != doc["checksum"].get<std::string>())
    throw Error(ErrorKind::CorruptBundle, "bundle checksum mismatch");

  const auto& p = doc["payload"];
  ModelBundle b;
  b.fusion_mode = parse_fusion_mode(p["fusion_mode"].get<std::string>());
  b.tau = p["tau"].get<double>();
  b.model_version = p["model_version"].get<std::string>();
  if (!p["touch_model"].is_null()) b.touch_model = classifier_from_json(p["touch_model"]);
  if (!p["fused_model"].is_null()) b.fused_model = classifier_from_json(p["fused_model"]);
  b.validate();
  return b;
}

}  // namespace becaptcha
