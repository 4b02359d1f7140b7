#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/rng.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

// Sorted sample table sampled by inverse CDF with linear interpolation.
struct QuantileTable {
  std::vector<double> values;  // non-decreasing

  double sample(Rng& rng) const {
    const std::size_t n = values.size();
    if (n == 0) throw Error(ErrorKind::PriorUnfit, "empty quantile table");
    if (n == 1) return values[0];
    const double pos = rng.uniform01() * static_cast<double>(n - 1);
    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 2);
    const double frac = pos - static_cast<double>(i);
    return values[i] + (values[i + 1] - values[i]) * frac;
  }
};

struct Gaussian1D {
  double mean = 0.0;
  double stddev = 0.0;
};

// 2-D histogram over the unit square; bins are sampled by mass, then a point
// is drawn uniformly inside the chosen bin.
struct StartPointHistogram {
  std::size_t resolution = 20;
  std::vector<double> mass;  // resolution^2 entries, sums to 1

  void fit(const std::vector<std::pair<double, double>>& points, std::size_t res) {
    resolution = res;
    mass.assign(res * res, 0.0);
    for (const auto& [x, y] : points) {
      const std::size_t bx = std::min(static_cast<std::size_t>(x * res), res - 1);
      const std::size_t by = std::min(static_cast<std::size_t>(y * res), res - 1);
      mass[by * res + bx] += 1.0;
    }
    const double total = static_cast<double>(points.size());
    for (auto& m : mass) m /= total;
  }

  std::pair<double, double> sample(Rng& rng) const {
    if (mass.empty()) throw Error(ErrorKind::PriorUnfit, "empty start-point histogram");
    const double u = rng.uniform01();
    double acc = 0.0;
    std::size_t chosen = mass.size() - 1;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      acc += mass[i];
      if (u < acc) {
        chosen = i;
        break;
      }
    }
    const std::size_t bx = chosen % resolution;
    const std::size_t by = chosen / resolution;
    const double cell = 1.0 / static_cast<double>(resolution);
    const double x = (static_cast<double>(bx) + rng.uniform01()) * cell;
    const double y = (static_cast<double>(by) + rng.uniform01()) * cell;
    return {std::min(x, 1.0), std::min(y, 1.0)};
  }
};

// Distributions fitted from human swipes that drive the handcrafted bot
// generator: Gaussian duration, empirical length/angle/point-count tables,
// start-point histogram, and per-axis accelerometer Gaussians.
struct HumanSwipePrior {
  Gaussian1D duration;                 // seconds
  QuantileTable length;                // screen units
  QuantileTable angle;                 // radians
  StartPointHistogram start_point;
  Gaussian1D accel[3];                 // per-axis m/s^2
  std::vector<int> trace_lengths;     // sorted, each >= 2
  double accel_rate_hz = 200.0;

  bool fitted = false;

  void require_fitted() const {
    if (!fitted) throw Error(ErrorKind::PriorUnfit, "prior has not been fitted");
  }
};

struct PriorFitResult {
  HumanSwipePrior prior;
  std::vector<std::string> warnings;
};

namespace detail {

inline Gaussian1D population_gaussian(const std::vector<double>& xs) {
  Gaussian1D g;
  const double n = static_cast<double>(xs.size());
  for (double v : xs) g.mean += v;
  g.mean /= n;
  for (double v : xs) g.stddev += (v - g.mean) * (v - g.mean);
  g.stddev = std::sqrt(g.stddev / n);
  return g;
}

}  // namespace detail

inline PriorFitResult fit_prior(const Corpus& corpus, std::size_t histogram_resolution = 20) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "cannot fit prior on empty corpus");

  std::vector<double> durations, lengths, angles;
  std::vector<std::pair<double, double>> starts;
  std::vector<int> counts;
  std::vector<double> ax, ay, az;

  for (const auto& s : corpus.samples) {
    const auto& pts = s.touch.points;
    const double dx = pts.back().x - pts.front().x;
    const double dy = pts.back().y - pts.front().y;
    const double len = std::hypot(dx, dy);
    if (len <= 0.0) continue;  // zero-length swipes carry no geometry
    durations.push_back(pts.back().t - pts.front().t);
    lengths.push_back(len);
    angles.push_back(std::atan2(dy, dx));
    starts.emplace_back(pts.front().x, pts.front().y);
    counts.push_back(static_cast<int>(pts.size()));
    for (const auto& a : s.accel.samples) {
      ax.push_back(a.ax);
      ay.push_back(a.ay);
      az.push_back(a.az);
    }
  }
  if (durations.size() < 2)
    throw Error(ErrorKind::EmptyCorpus,
                "prior fit needs at least 2 samples with nonzero swipe length");

  PriorFitResult result;
  HumanSwipePrior& p = result.prior;
  p.duration = detail::population_gaussian(durations);
  if (p.duration.stddev < 1e-6) {
    p.duration.stddev = 1e-6;
    result.warnings.push_back("all durations identical; duration std floored at 1e-6 s");
  }
  p.length.values = lengths;
  std::sort(p.length.values.begin(), p.length.values.end());
  p.angle.values = angles;
  std::sort(p.angle.values.begin(), p.angle.values.end());
  p.start_point.fit(starts, histogram_resolution);
  p.accel[0] = detail::population_gaussian(ax);
  p.accel[1] = detail::population_gaussian(ay);
  p.accel[2] = detail::population_gaussian(az);
  p.trace_lengths = counts;
  std::sort(p.trace_lengths.begin(), p.trace_lengths.end());
  p.fitted = true;
  return result;
}

// Arc-length fraction of point i on an N-point log-spaced trajectory:
// f_i = ln(1 + i(e-1)/(N-1)), so f_0 = 0 and f_{N-1} = 1 and increments
// shrink with i. Under uniform timestamps that yields a fast start that
// decays, the emulated human launch profile.
inline double log_spaced_fraction(std::size_t i, std::size_t n_points) {
  const double a = (2.718281828459045235360287 - 1.0) / static_cast<double>(n_points - 1);
  return std::log(1.0 + static_cast<double>(i) * a);
}

enum class VelocityProfile { FastStart, SlowStart };

struct HandcraftedOptions {
  VelocityProfile profile = VelocityProfile::FastStart;
};

namespace detail {

// Largest step along (cos a, sin a) from (x, y) that stays in the unit square.
inline double max_feasible_length(double x, double y, double angle) {
  const double cx = std::cos(angle);
  const double cy = std::sin(angle);
  double t = std::numeric_limits<double>::infinity();
  if (cx > 0.0) t = std::min(t, (1.0 - x) / cx);
  if (cx < 0.0) t = std::min(t, (0.0 - x) / cx);
  if (cy > 0.0) t = std::min(t, (1.0 - y) / cy);
  if (cy < 0.0) t = std::min(t, (0.0 - y) / cy);
  if (!std::isfinite(t)) t = 0.0;  // zero direction vector
  return std::max(t, 0.0);
}

inline double sample_positive_duration(const Gaussian1D& g, Rng& rng) {
  for (int tries = 0; tries < 100; ++tries) {
    const double d = rng.normal(g.mean, g.stddev);
    if (d > 0.0) return d;
  }
  return std::max(std::abs(g.mean), 1e-3);
}

}  // namespace detail

// Straight-line bot swipe: geometry sampled from the prior, points placed at
// log-spaced arc-length fractions, uniform timestamps. Every output is
// exactly collinear, so its path efficiency is 1.
inline TouchTrace synth_handcrafted_touch(const HumanSwipePrior& prior, std::uint64_t rng_seed,
                                          const HandcraftedOptions& opts = {}) {
  prior.require_fitted();
  Rng rng(rng_seed);

  double sx = 0.5, sy = 0.5, angle = 0.0, len = 0.0;
  for (int tries = 0; tries < 100; ++tries) {
    auto [x, y] = prior.start_point.sample(rng);
    const double a = prior.angle.sample(rng);
    const double want = prior.length.sample(rng);
    const double feasible = detail::max_feasible_length(x, y, a);
    const double l = std::min(want, feasible);
    if (l > 1e-6) {
      sx = x;
      sy = y;
      angle = a;
      len = l;
      break;
    }
  }
  if (len <= 0.0) {
    // start landed on an edge pointing outward on every retry; aim inward
    angle = std::atan2(0.5 - sy, 0.5 - sx);
    len = std::min(prior.length.values.back(),
                   detail::max_feasible_length(sx, sy, angle));
    if (len <= 0.0) throw Error(ErrorKind::PriorUnfit, "cannot place trajectory in unit square");
  }

  const double duration = detail::sample_positive_duration(prior.duration, rng);
  const std::size_t n = static_cast<std::size_t>(
      prior.trace_lengths[rng.uniform_index(prior.trace_lengths.size())]);

  const double ex = sx + len * std::cos(angle);
  const double ey = sy + len * std::sin(angle);

  TouchTrace out;
  out.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = log_spaced_fraction(i, n);
    if (opts.profile == VelocityProfile::SlowStart)
      f = 1.0 - log_spaced_fraction(n - 1 - i, n);
    TouchPoint p;
    p.x = std::clamp(sx + f * (ex - sx), 0.0, 1.0);
    p.y = std::clamp(sy + f * (ey - sy), 0.0, 1.0);
    p.t = duration * static_cast<double>(i) / static_cast<double>(n - 1);
    out.points[i] = p;
  }
  out.points.front().t = 0.0;
  return out;
}

// I.i.d. per-axis Gaussian noise at the prior's nominal rate. Deliberately
// carries no temporal structure.
inline AccelTrace synth_handcrafted_accel(const HumanSwipePrior& prior, double duration_s,
                                          std::uint64_t rng_seed) {
  prior.require_fitted();
  if (duration_s <= 0.0)
    throw Error(ErrorKind::NonPositiveDuration, "accel duration must be positive");
  Rng rng(rng_seed);
  const std::size_t count =
      static_cast<std::size_t>(std::floor(duration_s * prior.accel_rate_hz)) + 1;
  AccelTrace out;
  out.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    AccelSample s;
    s.ax = rng.normal(prior.accel[0].mean, prior.accel[0].stddev);
    s.ay = rng.normal(prior.accel[1].mean, prior.accel[1].stddev);
    s.az = rng.normal(prior.accel[2].mean, prior.accel[2].stddev);
    s.t = static_cast<double>(i) / prior.accel_rate_hz;
    out.samples[i] = s;
  }
  return out;
}

// Full bot sample; the accelerometer sequence spans the swipe duration.
inline SwipeSample synth_handcrafted_sample(const HumanSwipePrior& prior, std::uint64_t rng_seed,
                                            const HandcraftedOptions& opts = {}) {
  SwipeSample s;
  s.touch = synth_handcrafted_touch(prior, rng_seed, opts);
  s.accel = synth_handcrafted_accel(prior, s.touch.duration(),
                                    Rng(rng_seed).child(0x5EC0ull).seed());
  s.label = SourceLabel::HandcraftedBot;
  s.meta.session_id = "synth";
  s.meta.device_id = "handcrafted";
  return s;
}

// --- prior serialization -------------------------------------------------

inline constexpr int kPriorFormatVersion = 1;

inline nlohmann::json prior_to_json(const HumanSwipePrior& p) {
  p.require_fitted();
  nlohmann::json j;
  j["format_version"] = kPriorFormatVersion;
  j["duration"] = {{"mean", p.duration.mean}, {"std", p.duration.stddev}};
  j["length"] = p.length.values;
  j["angle"] = p.angle.values;
  j["start_point"] = {{"resolution", p.start_point.resolution}, {"mass", p.start_point.mass}};
  j["accel"] = nlohmann::json::array();
  for (int a = 0; a < 3; ++a)
    j["accel"].push_back({{"mean", p.accel[a].mean}, {"std", p.accel[a].stddev}});
  j["trace_lengths"] = p.trace_lengths;
  j["accel_rate_hz"] = p.accel_rate_hz;
  return j;
}

inline HumanSwipePrior prior_from_json(const nlohmann::json& j) {
  if (!j.contains("format_version") || j["format_version"].get<int>() != kPriorFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "unsupported prior format version");
  HumanSwipePrior p;
  p.duration = {j["duration"]["mean"].get<double>(), j["duration"]["std"].get<double>()};
  p.length.values = j["length"].get<std::vector<double>>();
  p.angle.values = j["angle"].get<std::vector<double>>();
  p.start_point.resolution = j["start_point"]["resolution"].get<std::size_t>();
  p.start_point.mass = j["start_point"]["mass"].get<std::vector<double>>();
  for (int a = 0; a < 3; ++a)
    p.accel[a] = {j["accel"][a]["mean"].get<double>(), j["accel"][a]["std"].get<double>()};
  p.trace_lengths = j["trace_lengths"].get<std::vector<int>>();
  p.accel_rate_hz = j["accel_rate_hz"].get<double>();
  p.fitted = true;
  return p;
}

}  // namespace becaptcha
