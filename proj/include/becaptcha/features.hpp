#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "becaptcha/errors.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

// Global swipe descriptors: duration, straight-line distance, path length,
// direction, mean segment speed, and path efficiency (P/L).
struct TouchFeatures {
  double duration_d = 0.0;      // seconds
  double distance_l = 0.0;      // screen units, first -> last
  double displacement_p = 0.0;  // screen units, summed segments
  double angle_alpha = 0.0;     // radians in (-pi, pi]
  double mean_velocity_v = 0.0; // screen units / second
  double efficiency_e = 0.0;    // P / L, >= 1 when defined
};

// mean, median, rms, population std per accelerometer axis.
struct AccelFeatures {
  std::array<double, 4> x{};  // mean, median, rms, std
  std::array<double, 4> y{};
  std::array<double, 4> z{};
};

enum class FeatureMode { TouchOnly, TouchAccel };

inline std::size_t feature_dim(FeatureMode m) {
  return m == FeatureMode::TouchOnly ? 6u : 18u;
}

inline const char* feature_mode_string(FeatureMode m) {
  return m == FeatureMode::TouchOnly ? "touch" : "touch_accel";
}

struct FeatureVector {
  FeatureMode mode = FeatureMode::TouchOnly;
  std::vector<double> values;
  SourceLabel label = SourceLabel::Human;
};

// What to do when a swipe starts and ends on the same point, which leaves
// E = P/L undefined. Corpus pipelines reject such samples by default.
struct ZeroDistancePolicy {
  bool use_sentinel = false;
  double sentinel = 0.0;
};

inline TouchFeatures touch_features(const TouchTrace& trace,
                                    const ZeroDistancePolicy& zero_policy = {}) {
  trace.validate();
  const auto& pts = trace.points;
  const std::size_t n = pts.size();

  TouchFeatures f;
  f.duration_d = pts[n - 1].t - pts[0].t;

  const double dx_total = pts[n - 1].x - pts[0].x;
  const double dy_total = pts[n - 1].y - pts[0].y;
  f.distance_l = std::hypot(dx_total, dy_total);
  f.angle_alpha = std::atan2(dy_total, dx_total);

  double path = 0.0;
  double speed_sum = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double seg = std::hypot(pts[i + 1].x - pts[i].x, pts[i + 1].y - pts[i].y);
    path += seg;
    speed_sum += seg / (pts[i + 1].t - pts[i].t);
  }
  f.displacement_p = path;
  f.mean_velocity_v = speed_sum / static_cast<double>(n - 1);

  if (f.distance_l == 0.0) {
    if (!zero_policy.use_sentinel)
      throw Error(ErrorKind::ZeroDistance, "swipe starts and ends on the same point");
    f.efficiency_e = zero_policy.sentinel;
  } else {
    f.efficiency_e = f.displacement_p / f.distance_l;
  }
  return f;
}

namespace detail {

inline std::array<double, 4> axis_stats(std::vector<double> xs) {
  const std::size_t n = xs.size();
  double sum = 0.0, sumsq = 0.0;
  for (double v : xs) {
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / n;
  std::sort(xs.begin(), xs.end());
  const double median = (n % 2 == 1)
                            ? xs[n / 2]
                            : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
  const double rms = std::sqrt(sumsq / n);
  double var = 0.0;
  for (double v : xs) var += (v - mean) * (v - mean);
  const double stddev = std::sqrt(var / n);  // population convention
  return {mean, median, rms, stddev};
}

}  // namespace detail

inline AccelFeatures accel_features(const AccelTrace& trace) {
  if (trace.samples.empty())
    throw Error(ErrorKind::EmptyTrace, "accelerometer trace is empty");
  trace.validate();
  const std::size_t n = trace.size();
  std::vector<double> x(n), y(n), z(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = trace.samples[i].ax;
    y[i] = trace.samples[i].ay;
    z[i] = trace.samples[i].az;
  }
  AccelFeatures f;
  f.x = detail::axis_stats(std::move(x));
  f.y = detail::axis_stats(std::move(y));
  f.z = detail::axis_stats(std::move(z));
  return f;
}

// Column order is fixed: D,L,P,alpha,V,E then per axis mean,median,rms,std
// for x, y, z.
inline FeatureVector fuse_features(const TouchFeatures& tf,
                                   const std::optional<AccelFeatures>& af = std::nullopt,
                                   SourceLabel label = SourceLabel::Human) {
  FeatureVector v;
  v.label = label;
  v.values = {tf.duration_d,     tf.distance_l,      tf.displacement_p,
              tf.angle_alpha,    tf.mean_velocity_v, tf.efficiency_e};
  if (af) {
    v.mode = FeatureMode::TouchAccel;
    for (const auto* axis : {&af->x, &af->y, &af->z})
      v.values.insert(v.values.end(), axis->begin(), axis->end());
  } else {
    v.mode = FeatureMode::TouchOnly;
  }
  for (double x : v.values)
    if (!std::isfinite(x))
      throw Error(ErrorKind::NonFiniteFeature, "feature vector contains a non-finite value");
  return v;
}

inline FeatureVector extract_features(const SwipeSample& s, FeatureMode mode,
                                      const ZeroDistancePolicy& zero_policy = {}) {
  const TouchFeatures tf = touch_features(s.touch, zero_policy);
  if (mode == FeatureMode::TouchOnly) return fuse_features(tf, std::nullopt, s.label);
  return fuse_features(tf, accel_features(s.accel), s.label);
}

// Per-dimension z-scoring fitted on a training set. Stored stds are floored
// so constant dimensions map to zero instead of blowing up.
class Standardizer {
 public:
  static constexpr double kStdFloor = 1e-9;

  Standardizer() = default;

  static Standardizer fit(const std::vector<FeatureVector>& train) {
    if (train.empty())
      throw Error(ErrorKind::EmptyTrainingSet, "cannot fit standardizer on empty set");
    Standardizer s;
    s.mode_ = train.front().mode;
    const std::size_t dim = feature_dim(s.mode_);
    s.mean_.assign(dim, 0.0);
    s.std_.assign(dim, 0.0);
    for (const auto& v : train) {
      if (v.mode != s.mode_)
        throw Error(ErrorKind::ModeMismatch, "mixed feature modes in training set");
      for (std::size_t d = 0; d < dim; ++d) s.mean_[d] += v.values[d];
    }
    const double n = static_cast<double>(train.size());
    for (auto& m : s.mean_) m /= n;
    for (const auto& v : train)
      for (std::size_t d = 0; d < dim; ++d) {
        const double c = v.values[d] - s.mean_[d];
        s.std_[d] += c * c;
      }
    for (auto& sd : s.std_) sd = std::max(std::sqrt(sd / n), kStdFloor);
    return s;
  }

  FeatureVector apply(const FeatureVector& v) const {
    if (v.mode != mode_)
      throw Error(ErrorKind::ModeMismatch, "feature mode does not match standardizer");
    FeatureVector out = v;
    for (std::size_t d = 0; d < out.values.size(); ++d)
      out.values[d] = (out.values[d] - mean_[d]) / std_[d];
    return out;
  }

  FeatureMode mode() const { return mode_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  void set(FeatureMode mode, std::vector<double> mean, std::vector<double> stddev) {
    mode_ = mode;
    mean_ = std::move(mean);
    std_ = std::move(stddev);
  }

 private:
  FeatureMode mode_ = FeatureMode::TouchOnly;
  std::vector<double> mean_;
  std::vector<double> std_;
};

inline Standardizer fit_standardizer(const std::vector<FeatureVector>& train) {
  return Standardizer::fit(train);
}

inline FeatureVector apply_standardizer(const Standardizer& s, const FeatureVector& v) {
  return s.apply(v);
}

inline std::vector<std::string> feature_column_names(FeatureMode mode) {
  std::vector<std::string> cols = {"D", "L", "P", "alpha", "V", "E"};
  if (mode == FeatureMode::TouchAccel)
    for (const char* axis : {"x", "y", "z"})
      for (const char* stat : {"mean_", "median_", "rms_", "std_"})
        cols.push_back(std::string(stat) + axis);
  return cols;
}

inline void write_features_csv(const std::vector<FeatureVector>& rows, std::ostream& out) {
  if (rows.empty()) return;
  const auto cols = feature_column_names(rows.front().mode);
  for (const auto& c : cols) out << c << ",";
  out << "label\n";
  out.precision(17);
  for (const auto& r : rows) {
    for (double v : r.values) out << v << ",";
    out << label_string(r.label) << "\n";
  }
}

}  // namespace becaptcha
