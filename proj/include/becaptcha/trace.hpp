#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "becaptcha/errors.hpp"
#include "becaptcha/matrix.hpp"

namespace becaptcha {

enum class SourceLabel { Human, HandcraftedBot, GanBot };

inline const char* label_string(SourceLabel l) {
  switch (l) {
    case SourceLabel::Human: return "human";
    case SourceLabel::HandcraftedBot: return "handcrafted_bot";
    case SourceLabel::GanBot: return "gan_bot";
  }
  return "human";
}

inline SourceLabel parse_label(const std::string& s) {
  if (s == "human") return SourceLabel::Human;
  if (s == "handcrafted_bot") return SourceLabel::HandcraftedBot;
  if (s == "gan_bot") return SourceLabel::GanBot;
  throw Error(ErrorKind::SchemaViolation, "unknown label '" + s + "'");
}

struct TouchPoint {
  double x = 0.0;  // screen-width fraction in [0,1]
  double y = 0.0;  // screen-height fraction in [0,1]
  double t = 0.0;  // seconds, relative to first point
};

// Normalized swipe trajectory. Invariants: at least two points, strictly
// increasing timestamps starting at 0, coordinates inside the unit square.
struct TouchTrace {
  std::vector<TouchPoint> points;

  std::size_t size() const { return points.size(); }
  double duration() const { return points.back().t - points.front().t; }

  void validate() const {
    if (points.size() < 2)
      throw Error(ErrorKind::DegenerateTrace, "touch trace needs at least 2 points");
    if (points.front().t != 0.0)
      throw Error(ErrorKind::DegenerateTrace, "touch timestamps must start at 0");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.t))
        throw Error(ErrorKind::DegenerateTrace, "non-finite touch point");
      if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0)
        throw Error(ErrorKind::DegenerateTrace, "touch coordinate outside [0,1]");
      if (i > 0 && p.t <= points[i - 1].t)
        throw Error(ErrorKind::DegenerateTrace, "touch timestamps not strictly increasing");
    }
  }
};

struct AccelSample {
  double ax = 0.0, ay = 0.0, az = 0.0;  // m/s^2
  double t = 0.0;                       // seconds
};

struct AccelTrace {
  std::vector<AccelSample> samples;

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.empty())
      throw Error(ErrorKind::EmptyTrace, "accelerometer trace is empty");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (!std::isfinite(s.ax) || !std::isfinite(s.ay) || !std::isfinite(s.az) ||
          !std::isfinite(s.t))
        throw Error(ErrorKind::DegenerateTrace, "non-finite accelerometer sample");
      if (i > 0 && s.t < samples[i - 1].t)
        throw Error(ErrorKind::DegenerateTrace, "accelerometer timestamps decreasing");
    }
  }
};

struct SampleMeta {
  std::string device_id;
  std::string session_id;
  int screen_w_px = 0;
  int screen_h_px = 0;
};

// One labeled interaction: a swipe plus the accelerometer segment recorded
// around it.
struct SwipeSample {
  TouchTrace touch;
  AccelTrace accel;
  SourceLabel label = SourceLabel::Human;
  SampleMeta meta;

  void validate() const {
    touch.validate();
    accel.validate();
    if ((meta.screen_w_px != 0 || meta.screen_h_px != 0) &&
        (meta.screen_w_px <= 0 || meta.screen_h_px <= 0))
      throw Error(ErrorKind::SchemaViolation, "screen dimensions must be positive");
  }
};

struct Corpus {
  std::vector<SwipeSample> samples;
  std::string provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct RawTouchPoint {
  double x_px = 0.0;
  double y_px = 0.0;
  double t_ms = 0.0;
};

// Pixel/millisecond points -> unit-square trace with seconds re-based to
// t[0] = 0. Out-of-screen pixels are clamped; digitizers overshoot.
inline TouchTrace normalize_touch(const std::vector<RawTouchPoint>& raw,
                                  double screen_w_px, double screen_h_px) {
  if (screen_w_px <= 0.0 || screen_h_px <= 0.0)
    throw Error(ErrorKind::ZeroScreen, "screen dimensions must be positive");
  if (raw.size() < 2)
    throw Error(ErrorKind::DegenerateTrace, "touch trace needs at least 2 points");

  TouchTrace out;
  out.points.reserve(raw.size());
  const double t0 = raw.front().t_ms;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& p = raw[i];
    if (!std::isfinite(p.x_px) || !std::isfinite(p.y_px) || !std::isfinite(p.t_ms))
      throw Error(ErrorKind::DegenerateTrace, "non-finite raw touch point");
    if (i > 0 && p.t_ms <= raw[i - 1].t_ms)
      throw Error(ErrorKind::DegenerateTrace, "raw timestamps not strictly increasing");
    TouchPoint q;
    q.x = std::clamp(p.x_px / screen_w_px, 0.0, 1.0);
    q.y = std::clamp(p.y_px / screen_h_px, 0.0, 1.0);
    q.t = (p.t_ms - t0) / 1000.0;
    out.points.push_back(q);
  }
  return out;
}

namespace detail {

// Linear interpolation of per-channel values at T uniform time points over
// [t_first, t_last]. Endpoints are copied, not interpolated.
inline Mat resample_channels(const std::vector<double>& t,
                             const std::vector<const double*>& channels,
                             std::size_t n, std::size_t T) {
  if (T < 2) throw Error(ErrorKind::DegenerateTrace, "resample length must be >= 2");
  const std::size_t nch = channels.size();
  Mat out(T, nch);
  const double t_first = t.front();
  const double t_last = t.back();
  const double span = t_last - t_first;

  std::size_t seg = 0;
  for (std::size_t k = 0; k < T; ++k) {
    if (k == 0) {
      for (std::size_t c = 0; c < nch; ++c) out(0, c) = channels[c][0];
      continue;
    }
    if (k == T - 1) {
      for (std::size_t c = 0; c < nch; ++c) out(T - 1, c) = channels[c][n - 1];
      continue;
    }
    const double q = t_first + span * (static_cast<double>(k) / (T - 1));
    while (seg + 2 < n && t[seg + 1] < q) ++seg;
    const double dt = t[seg + 1] - t[seg];
    const double w = dt > 0.0 ? (q - t[seg]) / dt : 1.0;
    for (std::size_t c = 0; c < nch; ++c) {
      const double a = channels[c][seg];
      const double b = channels[c][seg + 1];
      out(k, c) = a + (b - a) * w;
    }
  }
  return out;
}

}  // namespace detail

// T x 2 matrix of (x, y) on a uniform time grid.
inline Mat resample_to_length(const TouchTrace& trace, std::size_t T) {
  trace.validate();
  if (T < 2) throw Error(ErrorKind::DegenerateTrace, "resample length must be >= 2");
  const std::size_t n = trace.size();
  std::vector<double> t(n), x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = trace.points[i].t;
    x[i] = trace.points[i].x;
    y[i] = trace.points[i].y;
  }
  return detail::resample_channels(t, {x.data(), y.data()}, n, T);
}

// T x 3 matrix of (ax, ay, az) on a uniform time grid. A single-sample trace
// resamples to T copies of that sample.
inline Mat resample_to_length(const AccelTrace& trace, std::size_t T) {
  trace.validate();
  if (T < 2) throw Error(ErrorKind::DegenerateTrace, "resample length must be >= 2");
  const std::size_t n = trace.size();
  if (n == 1) {
    Mat out(T, 3);
    for (std::size_t k = 0; k < T; ++k) {
      out(k, 0) = trace.samples[0].ax;
      out(k, 1) = trace.samples[0].ay;
      out(k, 2) = trace.samples[0].az;
    }
    return out;
  }
  std::vector<double> t(n), x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = trace.samples[i].t;
    x[i] = trace.samples[i].ax;
    y[i] = trace.samples[i].ay;
    z[i] = trace.samples[i].az;
  }
  return detail::resample_channels(t, {x.data(), y.data(), z.data()}, n, T);
}

}  // namespace becaptcha
