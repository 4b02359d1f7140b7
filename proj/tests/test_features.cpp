#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "becaptcha/features.hpp"
#include "oracles.hpp"

using namespace becaptcha;

namespace {

TouchTrace make_trace(std::initializer_list<TouchPoint> pts) {
  TouchTrace t;
  t.points = pts;
  return t;
}

}  // namespace

TEST_CASE("two-point swipe: hand-computed feature values") {
  TouchTrace t = make_trace({{0.0, 0.0, 0.0}, {0.3, 0.4, 0.5}});
  TouchFeatures f = touch_features(t);
  CHECK(f.duration_d == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.distance_l == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.displacement_p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.angle_alpha == doctest::Approx(0.9272952180016122).epsilon(1e-12));
  CHECK(f.mean_velocity_v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.efficiency_e == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("three-point vee swipe: hand-computed feature values") {
  TouchTrace t = make_trace({{0.0, 0.0, 0.0}, {0.3, 0.4, 0.5}, {0.6, 0.0, 1.0}});
  TouchFeatures f = touch_features(t);
  CHECK(f.duration_d == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.distance_l == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(f.displacement_p == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.angle_alpha == doctest::Approx(0.0));
  CHECK(f.mean_velocity_v == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.efficiency_e == doctest::Approx(1.0 / 0.6).epsilon(1e-9));
}

TEST_CASE("zero-distance swipe raises unless a sentinel is configured") {
  TouchTrace t = make_trace({{0.5, 0.5, 0.0}, {0.6, 0.5, 0.1}, {0.5, 0.5, 0.2}});
  CHECK_THROWS_AS(touch_features(t), Error);
  ZeroDistancePolicy policy;
  policy.use_sentinel = true;
  policy.sentinel = -1.0;
  TouchFeatures f = touch_features(t, policy);
  CHECK(f.efficiency_e == -1.0);
  CHECK(f.displacement_p > 0.0);
}

TEST_CASE("accel stats: constant signal") {
  AccelTrace a;
  for (int i = 0; i < 7; ++i) a.samples.push_back({2.0, 2.0, 2.0, i * 0.005});
  AccelFeatures f = accel_features(a);
  for (const auto* axis : {&f.x, &f.y, &f.z}) {
    CHECK((*axis)[0] == doctest::Approx(2.0));
    CHECK((*axis)[1] == doctest::Approx(2.0));
    CHECK((*axis)[2] == doctest::Approx(2.0));
    CHECK((*axis)[3] == doctest::Approx(0.0));
  }
}

TEST_CASE("accel stats: alternating unit signal") {
  AccelTrace a;
  const double xs[4] = {1.0, -1.0, 1.0, -1.0};
  for (int i = 0; i < 4; ++i) a.samples.push_back({xs[i], 0.0, 0.0, i * 0.005});
  AccelFeatures f = accel_features(a);
  CHECK(f.x[0] == doctest::Approx(0.0));
  CHECK(f.x[1] == doctest::Approx(0.0));
  CHECK(f.x[2] == doctest::Approx(1.0));
  CHECK(f.x[3] == doctest::Approx(1.0));
}

TEST_CASE("accel stats: single sample") {
  AccelTrace a;
  a.samples.push_back({3.0, -2.0, 0.5, 0.0});
  AccelFeatures f = accel_features(a);
  CHECK(f.x[0] == 3.0);
  CHECK(f.x[1] == 3.0);
  CHECK(f.x[2] == doctest::Approx(3.0));
  CHECK(f.x[3] == 0.0);
  CHECK(f.y[2] == doctest::Approx(2.0));  // rms is a magnitude
  CHECK(f.y[0] == -2.0);
}

TEST_CASE("fuse_features produces 6- and 18-dim vectors") {
  TouchTrace t = make_trace({{0.0, 0.0, 0.0}, {0.3, 0.4, 0.5}});
  TouchFeatures tf = touch_features(t);
  FeatureVector v6 = fuse_features(tf);
  CHECK(v6.mode == FeatureMode::TouchOnly);
  CHECK(v6.values.size() == 6);

  AccelTrace a;
  a.samples.push_back({1.0, 2.0, 3.0, 0.0});
  FeatureVector v18 = fuse_features(tf, accel_features(a));
  CHECK(v18.mode == FeatureMode::TouchAccel);
  CHECK(v18.values.size() == 18);
  // accel block order: mean, median, rms, std per axis
  CHECK(v18.values[6] == 1.0);
  CHECK(v18.values[10] == 2.0);
  CHECK(v18.values[14] == 3.0);
}

TEST_CASE("fuse_features rejects non-finite inputs") {
  TouchFeatures tf;
  tf.duration_d = std::nan("");
  tf.distance_l = 1.0;
  CHECK_THROWS_AS(fuse_features(tf), Error);
}

TEST_CASE("standardizer: z-scores its own training set") {
  Rng rng(3);
  std::vector<FeatureVector> train;
  for (int i = 0; i < 200; ++i) {
    TouchTrace t = oracle::random_touch_trace(rng, 3, 20);
    train.push_back(fuse_features(touch_features(t)));
  }
  Standardizer s = Standardizer::fit(train);
  std::vector<double> mean(6, 0.0), var(6, 0.0);
  for (const auto& v : train) {
    FeatureVector z = s.apply(v);
    for (int d = 0; d < 6; ++d) mean[d] += z.values[d];
  }
  for (auto& m : mean) m /= train.size();
  for (const auto& v : train) {
    FeatureVector z = s.apply(v);
    for (int d = 0; d < 6; ++d) var[d] += (z.values[d] - mean[d]) * (z.values[d] - mean[d]);
  }
  for (int d = 0; d < 6; ++d) {
    CHECK(mean[d] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::sqrt(var[d] / train.size()) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("standardizer: constant dimension maps to zero via the std floor") {
  std::vector<FeatureVector> train;
  for (int i = 0; i < 5; ++i) {
    FeatureVector v;
    v.mode = FeatureMode::TouchOnly;
    v.values = {1.0, 2.0, 3.0, 4.0, 5.0 + i, 1.0};
    train.push_back(v);
  }
  Standardizer s = Standardizer::fit(train);
  FeatureVector z = s.apply(train[0]);
  CHECK(z.values[0] == 0.0);
  CHECK(z.values[5] == 0.0);
}

TEST_CASE("standardizer: mode mismatch is rejected") {
  std::vector<FeatureVector> train;
  FeatureVector v;
  v.mode = FeatureMode::TouchAccel;
  v.values.assign(18, 1.0);
  train.push_back(v);
  train.push_back(v);
  Standardizer s = Standardizer::fit(train);
  FeatureVector touch_only;
  touch_only.mode = FeatureMode::TouchOnly;
  touch_only.values.assign(6, 0.0);
  CHECK_THROWS_AS(s.apply(touch_only), Error);
  CHECK_THROWS_AS(Standardizer::fit({}), Error);
}

TEST_CASE("property: displacement dominates distance, so efficiency >= 1") {
  Rng rng(99);
  for (int rep = 0; rep < 10000; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng);
    TouchFeatures f;
    try {
      f = touch_features(t);
    } catch (const Error&) {
      continue;  // zero-distance draw
    }
    CHECK(f.displacement_p >= f.distance_l - 1e-12);
    CHECK(f.efficiency_e >= 1.0 - 1e-12);
  }
}

TEST_CASE("property: features ignore timestamp offsets") {
  Rng rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng, 3, 20);
    TouchFeatures base = touch_features(t);
    TouchTrace shifted = t;
    // offsets break the t[0]=0 normalization on purpose; compare raw math
    for (auto& p : shifted.points) p.t += 5.0;
    shifted.points.front().t = 5.0;
    TouchTrace shifted_rebased = shifted;
    for (auto& p : shifted_rebased.points) p.t -= 5.0;
    TouchFeatures f = touch_features(shifted_rebased);
    CHECK(f.duration_d == doctest::Approx(base.duration_d).epsilon(1e-12));
    CHECK(f.mean_velocity_v == doctest::Approx(base.mean_velocity_v).epsilon(1e-12));
    CHECK(f.distance_l == base.distance_l);
    CHECK(f.angle_alpha == base.angle_alpha);
  }
}

TEST_CASE("property: scaling time scales duration up and velocity down") {
  Rng rng(43);
  for (int rep = 0; rep < 200; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng, 3, 20);
    const double k = 0.25 + 4.0 * rng.uniform01();
    TouchTrace scaled = t;
    for (auto& p : scaled.points) p.t *= k;
    TouchFeatures base = touch_features(t);
    TouchFeatures f = touch_features(scaled);
    CHECK(f.duration_d == doctest::Approx(base.duration_d * k).epsilon(1e-9));
    CHECK(f.mean_velocity_v == doctest::Approx(base.mean_velocity_v / k).epsilon(1e-9));
    CHECK(f.distance_l == base.distance_l);
    CHECK(f.displacement_p == base.displacement_p);
    CHECK(f.angle_alpha == base.angle_alpha);
    CHECK(f.efficiency_e == base.efficiency_e);
  }
}

TEST_CASE("property: rms^2 - mean^2 equals the population variance per axis") {
  Rng rng(44);
  for (int rep = 0; rep < 500; ++rep) {
    AccelTrace a = oracle::random_accel_trace(rng, 1, 100);
    AccelFeatures f = accel_features(a);
    for (const auto* axis : {&f.x, &f.y, &f.z}) {
      const double lhs = (*axis)[2] * (*axis)[2] - (*axis)[0] * (*axis)[0];
      const double rhs = (*axis)[3] * (*axis)[3];
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
      CHECK(lhs >= -1e-12);
    }
  }
}

TEST_CASE("oracle equivalence: naive loops agree with production extraction") {
  Rng rng(4242);
  for (int rep = 0; rep < 1000; ++rep) {
    TouchTrace t = oracle::random_touch_trace(rng);
    oracle::TouchFeatureRef ref;
    TouchFeatures f;
    try {
      f = touch_features(t);
      ref = oracle::naive_touch_features(t);
    } catch (const Error&) {
      continue;
    }
    CHECK(f.duration_d == doctest::Approx(ref.d).epsilon(1e-12));
    CHECK(f.distance_l == doctest::Approx(ref.l).epsilon(1e-12));
    CHECK(f.displacement_p == doctest::Approx(ref.p).epsilon(1e-12));
    CHECK(f.angle_alpha == doctest::Approx(ref.alpha).epsilon(1e-12));
    CHECK(f.mean_velocity_v == doctest::Approx(ref.v).epsilon(1e-12));
    CHECK(f.efficiency_e == doctest::Approx(ref.e).epsilon(1e-12));

    AccelTrace a = oracle::random_accel_trace(rng, 1, 60);
    AccelFeatures af = accel_features(a);
    std::vector<double> xs;
    for (const auto& s : a.samples) xs.push_back(s.ax);
    oracle::AxisStatsRef ar = oracle::naive_axis_stats(xs);
    CHECK(af.x[0] == doctest::Approx(ar.mean).epsilon(1e-12));
    CHECK(af.x[1] == doctest::Approx(ar.median).epsilon(1e-12));
    CHECK(af.x[2] == doctest::Approx(ar.rms).epsilon(1e-12));
    CHECK(af.x[3] == doctest::Approx(ar.stddev).epsilon(1e-12));
  }
}

TEST_CASE("feature CSV export uses the documented column order") {
  std::vector<FeatureVector> rows;
  FeatureVector v;
  v.mode = FeatureMode::TouchAccel;
  v.values.assign(18, 0.5);
  v.label = SourceLabel::GanBot;
  rows.push_back(v);
  std::ostringstream out;
  write_features_csv(rows, out);
  const std::string text = out.str();
  CHECK(text.find("D,L,P,alpha,V,E,mean_x,median_x,rms_x,std_x,mean_y") == 0);
  CHECK(text.find("gan_bot") != std::string::npos);
}
