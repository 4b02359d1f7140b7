#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "becaptcha/features.hpp"
#include "becaptcha/synth_hand.hpp"
#include "corpus_fixtures.hpp"
#include "oracles.hpp"

using namespace becaptcha;

namespace {

Corpus two_swipe_corpus(double d0, double d1) {
  Corpus c;
  for (double d : {d0, d1}) {
    SwipeSample s;
    s.touch.points = {{0.1, 0.1, 0.0}, {0.5, 0.6, d}};
    s.accel.samples = {{0.0, 9.8, 0.0, 0.0}, {0.1, 9.7, 0.1, d}};
    c.samples.push_back(s);
  }
  return c;
}

double max_perpendicular_deviation(const TouchTrace& t) {
  const auto& p = t.points;
  const double dx = p.back().x - p.front().x;
  const double dy = p.back().y - p.front().y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& q : p) {
    const double cross = (q.x - p.front().x) * dy - (q.y - p.front().y) * dx;
    worst = std::max(worst, std::abs(cross) / len);
  }
  return worst;
}

}  // namespace

TEST_CASE("prior: population moments of two durations") {
  PriorFitResult fit = fit_prior(two_swipe_corpus(0.4, 0.6));
  CHECK(fit.prior.duration.mean == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fit.prior.duration.stddev == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(fit.warnings.empty());
}

TEST_CASE("prior: identical durations floor the std and warn") {
  PriorFitResult fit = fit_prior(two_swipe_corpus(0.5, 0.5));
  CHECK(fit.prior.duration.mean == doctest::Approx(0.5));
  CHECK(fit.prior.duration.stddev == 1e-6);
  REQUIRE(fit.warnings.size() == 1);
}

TEST_CASE("prior: quantile tables are sorted and the histogram sums to one") {
  Corpus corpus = fixtures::surrogate_human_corpus(300, 21);
  PriorFitResult fit = fit_prior(corpus);
  const auto& p = fit.prior;
  CHECK(std::is_sorted(p.length.values.begin(), p.length.values.end()));
  CHECK(std::is_sorted(p.angle.values.begin(), p.angle.values.end()));
  CHECK(std::is_sorted(p.trace_lengths.begin(), p.trace_lengths.end()));
  double mass = 0.0;
  for (double m : p.start_point.mass) mass += m;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(p.accel[1].mean == doctest::Approx(9.6).epsilon(0.05));
}

TEST_CASE("prior: empty corpus is an error") {
  CHECK_THROWS_AS(fit_prior(Corpus{}), Error);
}

TEST_CASE("prior JSON round-trip preserves sampling behavior") {
  Corpus corpus = fixtures::surrogate_human_corpus(100, 22);
  HumanSwipePrior p = fit_prior(corpus).prior;
  HumanSwipePrior q = prior_from_json(prior_to_json(p));
  TouchTrace a = synth_handcrafted_touch(p, 77);
  TouchTrace b = synth_handcrafted_touch(q, 77);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].y == b.points[i].y);
    CHECK(a.points[i].t == b.points[i].t);
  }
}

TEST_CASE("log spacing: N=3 fractions match the closed form") {
  CHECK(log_spaced_fraction(0, 3) == doctest::Approx(0.0));
  CHECK(log_spaced_fraction(1, 3) ==
        doctest::Approx(std::log(1.0 + (std::exp(1.0) - 1.0) / 2.0)).epsilon(1e-12));
  CHECK(log_spaced_fraction(1, 3) == doctest::Approx(0.6201).epsilon(1e-4));
  CHECK(log_spaced_fraction(2, 3) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("generated trajectories are exactly collinear with unit efficiency") {
  Corpus corpus = fixtures::surrogate_human_corpus(200, 23);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    TouchTrace t = synth_handcrafted_touch(prior, seed);
    CHECK_NOTHROW(t.validate());
    CHECK(max_perpendicular_deviation(t) <= 1e-12);
    TouchFeatures f = touch_features(t);
    CHECK(std::abs(f.efficiency_e - 1.0) <= 1e-12);
    for (const auto& p : t.points) {
      CHECK(p.x >= 0.0);
      CHECK(p.x <= 1.0);
      CHECK(p.y >= 0.0);
      CHECK(p.y <= 1.0);
    }
  }
}

TEST_CASE("same seed and prior give bit-identical trajectories") {
  Corpus corpus = fixtures::surrogate_human_corpus(100, 24);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  TouchTrace a = synth_handcrafted_touch(prior, 12345);
  TouchTrace b = synth_handcrafted_touch(prior, 12345);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i].x == b.points[i].x);
    CHECK(a.points[i].y == b.points[i].y);
    CHECK(a.points[i].t == b.points[i].t);
  }
  AccelTrace aa = synth_handcrafted_accel(prior, 0.5, 99);
  AccelTrace ab = synth_handcrafted_accel(prior, 0.5, 99);
  REQUIRE(aa.size() == ab.size());
  for (std::size_t i = 0; i < aa.size(); ++i) CHECK(aa.samples[i].ax == ab.samples[i].ax);
}

TEST_CASE("per-segment speed decays monotonically under the fast-start profile") {
  Corpus corpus = fixtures::surrogate_human_corpus(200, 25);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    TouchTrace t = synth_handcrafted_touch(prior, seed);
    if (t.size() < 3) continue;
    ++checked;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double seg = std::hypot(t.points[i + 1].x - t.points[i].x,
                                    t.points[i + 1].y - t.points[i].y);
      const double speed = seg / (t.points[i + 1].t - t.points[i].t);
      CHECK(speed < prev);
      prev = speed;
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("slow-start profile reverses the speed trend") {
  Corpus corpus = fixtures::surrogate_human_corpus(100, 26);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  HandcraftedOptions opts;
  opts.profile = VelocityProfile::SlowStart;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TouchTrace t = synth_handcrafted_touch(prior, seed, opts);
    if (t.size() < 3) continue;
    ++checked;
    double prev = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double seg = std::hypot(t.points[i + 1].x - t.points[i].x,
                                    t.points[i + 1].y - t.points[i].y);
      const double speed = seg / (t.points[i + 1].t - t.points[i].t);
      CHECK(speed > prev);
      prev = speed;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("sampled durations match the prior Gaussian within three standard errors") {
  Corpus corpus = fixtures::surrogate_human_corpus(400, 27);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  const std::size_t n = 10000;
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < n; ++seed)
    sum += synth_handcrafted_touch(prior, seed).duration();
  const double mean = sum / static_cast<double>(n);
  const double se = prior.duration.stddev / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(mean - prior.duration.mean) <= 3.0 * se + 1e-6);
}

TEST_CASE("degenerate accel prior produces a constant trace") {
  HumanSwipePrior prior;
  prior.fitted = true;
  prior.duration = {0.5, 0.1};
  prior.length.values = {0.3};
  prior.angle.values = {0.0};
  prior.start_point.fit({{0.2, 0.2}}, 20);
  prior.accel[0] = {1.5, 0.0};
  prior.accel[1] = {9.8, 0.0};
  prior.accel[2] = {-0.5, 0.0};
  prior.trace_lengths = {5};
  AccelTrace a = synth_handcrafted_accel(prior, 0.1, 4);
  for (const auto& s : a.samples) {
    CHECK(s.ax == doctest::Approx(1.5));
    CHECK(s.ay == doctest::Approx(9.8));
    CHECK(s.az == doctest::Approx(-0.5));
  }
}

TEST_CASE("accel sample count is floor(duration * rate) + 1") {
  HumanSwipePrior prior;
  prior.fitted = true;
  prior.accel[0] = prior.accel[1] = prior.accel[2] = {0.0, 1.0};
  prior.accel_rate_hz = 200.0;
  AccelTrace a = synth_handcrafted_accel(prior, 0.5, 1);
  CHECK(a.size() == 101);
  CHECK_THROWS_AS(synth_handcrafted_accel(prior, 0.0, 1), Error);
  CHECK_THROWS_AS(synth_handcrafted_accel(prior, -1.0, 1), Error);
}

TEST_CASE("standard normal sampling matches its moments on 10k draws") {
  HumanSwipePrior prior;
  prior.fitted = true;
  prior.accel[0] = prior.accel[1] = prior.accel[2] = {0.0, 1.0};
  prior.accel_rate_hz = 200.0;
  AccelTrace a = synth_handcrafted_accel(prior, 50.0, 314);  // 10001 samples
  double mean = 0.0, var = 0.0;
  for (const auto& s : a.samples) mean += s.ax;
  mean /= a.size();
  for (const auto& s : a.samples) var += (s.ax - mean) * (s.ax - mean);
  const double stddev = std::sqrt(var / a.size());
  CHECK(std::abs(mean) <= 0.05);
  CHECK(std::abs(stddev - 1.0) <= 0.05);
}

TEST_CASE("unfitted prior refuses to generate") {
  HumanSwipePrior prior;
  CHECK_THROWS_AS(synth_handcrafted_touch(prior, 1), Error);
  CHECK_THROWS_AS(synth_handcrafted_accel(prior, 0.5, 1), Error);
}

TEST_CASE("full bot sample pairs touch and accel over the same duration") {
  Corpus corpus = fixtures::surrogate_human_corpus(100, 28);
  HumanSwipePrior prior = fit_prior(corpus).prior;
  SwipeSample s = synth_handcrafted_sample(prior, 5);
  CHECK(s.label == SourceLabel::HandcraftedBot);
  CHECK_NOTHROW(s.validate());
  CHECK(s.accel.samples.back().t <= s.touch.duration() + 1e-9);
  const std::size_t expect =
      static_cast<std::size_t>(std::floor(s.touch.duration() * prior.accel_rate_hz)) + 1;
  CHECK(s.accel.size() == expect);
}
