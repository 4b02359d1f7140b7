#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

enum class CorpusFormat { Canonical, HumidbAdapter };

struct IngestReport {
  Corpus corpus;
  std::vector<std::string> warnings;
};

// Accelerometer samples outside the touch window plus this pad (seconds) are
// dropped at ingestion.
struct IngestOptions {
  double accel_pad_s = 0.0;
};

namespace detail {

using nlohmann::json;

inline SwipeSample parse_canonical_record(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::SchemaViolation, where + ": record is not an object");
  if (!j.contains("touch") || !j["touch"].is_array())
    throw Error(ErrorKind::SchemaViolation, where + ": missing touch array");
  if (!j.contains("screen") || !j["screen"].is_array() || j["screen"].size() != 2)
    throw Error(ErrorKind::SchemaViolation, where + ": missing screen [w,h]");

  SwipeSample s;
  s.label = j.contains("label") ? parse_label(j["label"].get<std::string>())
                                : SourceLabel::Human;
  s.meta.session_id = j.value("session", "");
  s.meta.device_id = j.value("device", "");

  const double w = j["screen"][0].get<double>();
  const double h = j["screen"][1].get<double>();
  if (w <= 0.0 || h <= 0.0) throw Error(ErrorKind::SchemaViolation, where + ": non-positive screen");
  s.meta.screen_w_px = static_cast<int>(w);
  s.meta.screen_h_px = static_cast<int>(h);

  std::vector<RawTouchPoint> raw;
  for (const auto& p : j["touch"]) {
    if (!p.is_array() || p.size() != 3)
      throw Error(ErrorKind::SchemaViolation, where + ": touch point is not [x,y,t]");
    raw.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  double touch_t0_ms = raw.empty() ? 0.0 : raw.front().t_ms;
  try {
    s.touch = normalize_touch(raw, w, h);
  } catch (const Error& e) {
    throw Error(ErrorKind::SchemaViolation, where + ": " + e.what());
  }

  if (!j.contains("accel") || !j["accel"].is_array() || j["accel"].empty())
    throw Error(ErrorKind::SchemaViolation, where + ": missing accel samples");
  for (const auto& a : j["accel"]) {
    if (!a.is_array() || a.size() != 4)
      throw Error(ErrorKind::SchemaViolation, where + ": accel sample is not [ax,ay,az,t]");
    AccelSample as;
    as.ax = a[0].get<double>();
    as.ay = a[1].get<double>();
    as.az = a[2].get<double>();
    as.t = (a[3].get<double>() - touch_t0_ms) / 1000.0;  // shared clock origin with touch
    s.accel.samples.push_back(as);
  }
  return s;
}

inline void crop_accel_to_touch(SwipeSample& s, double pad_s, const std::string& where) {
  const double lo = s.touch.points.front().t - pad_s;
  const double hi = s.touch.points.back().t + pad_s;
  std::vector<AccelSample> kept;
  for (const auto& a : s.accel.samples)
    if (a.t >= lo && a.t <= hi) kept.push_back(a);
  if (kept.empty())
    throw Error(ErrorKind::SchemaViolation,
                where + ": no accelerometer samples inside the gesture window");
  s.accel.samples = std::move(kept);
}

inline void ingest_canonical_file(const std::filesystem::path& file, IngestReport& report,
                                  const IngestOptions& opts) {
  std::ifstream in(file);
  if (!in) {
    report.warnings.push_back(file.string() + ": cannot open");
    return;
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(lineno);
    try {
      json j = json::parse(line);
      SwipeSample s = parse_canonical_record(j, where);
      crop_accel_to_touch(s, opts.accel_pad_s, where);
      s.validate();
      report.corpus.samples.push_back(std::move(s));
    } catch (const json::exception& e) {
      report.warnings.push_back(where + ": bad JSON (" + e.what() + ")");
    } catch (const Error& e) {
      report.warnings.push_back(e.what());
    }
  }
}

inline std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& file,
                                                      std::size_t min_cols) {
  std::vector<std::vector<double>> rows;
  std::ifstream in(file);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (...) {
        ok = false;
        break;
      }
    }
    if (ok && row.size() >= min_cols) rows.push_back(std::move(row));
  }
  return rows;
}

// Adapter for raw exports laid out as <root>/<user>/<session>/ with
//   drag_touch.csv      x_px,y_px[,pressure],t_ms
//   accelerometer.csv   ax,ay,az,t_ms
//   meta.json           {"screen":[w,h],"device":"..."}   (optional)
// Only the drag task channel is read; everything else is ignored.
inline void ingest_humidb_session(const std::filesystem::path& session_dir,
                                  const std::string& user, IngestReport& report,
                                  const IngestOptions& opts) {
  const auto touch_file = session_dir / "drag_touch.csv";
  const auto accel_file = session_dir / "accelerometer.csv";
  const std::string where = session_dir.string();
  if (!std::filesystem::exists(touch_file) || !std::filesystem::exists(accel_file)) {
    report.warnings.push_back(where + ": missing drag_touch.csv or accelerometer.csv");
    return;
  }

  double screen_w = 1080.0, screen_h = 1920.0;
  std::string device = user;
  const auto meta_file = session_dir / "meta.json";
  if (std::filesystem::exists(meta_file)) {
    try {
      std::ifstream mf(meta_file);
      json m = json::parse(mf);
      if (m.contains("screen") && m["screen"].is_array() && m["screen"].size() == 2) {
        screen_w = m["screen"][0].get<double>();
        screen_h = m["screen"][1].get<double>();
      }
      device = m.value("device", device);
    } catch (...) {
      report.warnings.push_back(meta_file.string() + ": unreadable meta, using defaults");
    }
  } else {
    report.warnings.push_back(where + ": no meta.json, assuming 1080x1920 screen");
  }

  try {
    auto touch_rows = read_csv_rows(touch_file, 3);
    auto accel_rows = read_csv_rows(accel_file, 4);
    std::vector<RawTouchPoint> raw;
    for (const auto& r : touch_rows)
      raw.push_back({r[0], r[1], r.back()});  // timestamp is the last column
    json rec;
    rec["label"] = "human";
    rec["session"] = session_dir.filename().string();
    rec["device"] = device;
    rec["screen"] = {screen_w, screen_h};
    json jt = json::array();
    for (const auto& p : raw) jt.push_back({p.x_px, p.y_px, p.t_ms});
    rec["touch"] = jt;
    json ja = json::array();
    for (const auto& r : accel_rows) ja.push_back({r[0], r[1], r[2], r[3]});
    rec["accel"] = ja;

    SwipeSample s = parse_canonical_record(rec, where);
    crop_accel_to_touch(s, opts.accel_pad_s, where);
    s.validate();
    report.corpus.samples.push_back(std::move(s));
  } catch (const Error& e) {
    report.warnings.push_back(e.what());
  }
}

}  // namespace detail

// Reads a corpus from <root>/<user>/<session>.jsonl (canonical) or the raw
// export layout (humidb adapter). A single .jsonl file is also accepted as
// root. Per-file failures become warnings; zero parsed samples is an error.
inline IngestReport ingest_corpus(const std::filesystem::path& root,
                                  CorpusFormat format = CorpusFormat::Canonical,
                                  const IngestOptions& opts = {}) {
  namespace fs = std::filesystem;
  if (!fs::exists(root)) throw Error(ErrorKind::MissingPath, root.string());

  IngestReport report;
  report.corpus.provenance = root.string();

  if (format == CorpusFormat::Canonical) {
    if (fs::is_regular_file(root)) {
      detail::ingest_canonical_file(root, report, opts);
    } else {
      std::vector<fs::path> files;
      for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
          files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) detail::ingest_canonical_file(f, report, opts);
    }
  } else {
    std::vector<std::pair<std::string, fs::path>> sessions;
    for (const auto& user_dir : fs::directory_iterator(root)) {
      if (!user_dir.is_directory()) continue;
      for (const auto& sess_dir : fs::directory_iterator(user_dir.path()))
        if (sess_dir.is_directory())
          sessions.emplace_back(user_dir.path().filename().string(), sess_dir.path());
    }
    std::sort(sessions.begin(), sessions.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [user, dir] : sessions)
      detail::ingest_humidb_session(dir, user, report, opts);
  }

  if (report.corpus.empty())
    throw Error(ErrorKind::EmptyCorpus, root.string() + " yielded no valid samples");
  return report;
}

// Canonical record for a (possibly synthetic) sample. Normalized samples are
// written against a 1x1 screen so that re-ingestion is the identity.
inline nlohmann::json to_canonical_record(const SwipeSample& s) {
  nlohmann::json j;
  j["label"] = label_string(s.label);
  j["session"] = s.meta.session_id;
  j["device"] = s.meta.device_id;
  const bool px = s.meta.screen_w_px > 0 && s.meta.screen_h_px > 0;
  const double w = px ? s.meta.screen_w_px : 1.0;
  const double h = px ? s.meta.screen_h_px : 1.0;
  j["screen"] = {w, h};
  nlohmann::json jt = nlohmann::json::array();
  for (const auto& p : s.touch.points) jt.push_back({p.x * w, p.y * h, p.t * 1000.0});
  j["touch"] = jt;
  nlohmann::json ja = nlohmann::json::array();
  for (const auto& a : s.accel.samples) ja.push_back({a.ax, a.ay, a.az, a.t * 1000.0});
  j["accel"] = ja;
  return j;
}

inline void write_canonical_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::MissingPath, "cannot write " + path.string());
  for (const auto& s : corpus.samples) out << to_canonical_record(s).dump() << "\n";
}

}  // namespace becaptcha
