#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "becaptcha/eval.hpp"
#include "becaptcha/synth_hand.hpp"
#include "corpus_fixtures.hpp"
#include "oracles.hpp"

using namespace becaptcha;

namespace {

EvalConfig base_config(Scenario s = Scenario::Multiclass) {
  EvalConfig cfg;
  cfg.scenario = s;
  cfg.total_train_m = 1400;
  cfg.repetitions = 5;
  cfg.seed = 101;
  return cfg;
}

// bots = humans with all timestamps stretched 1000x, which displaces the
// duration/velocity features far outside the human range
Corpus displaced_bots(const Corpus& humans) {
  Corpus bots;
  for (const auto& s : humans.samples) {
    SwipeSample b = s;
    for (auto& p : b.touch.points) p.t *= 1000.0;
    b.label = SourceLabel::HandcraftedBot;
    bots.samples.push_back(b);
  }
  return bots;
}

}  // namespace

TEST_CASE("split arithmetic: M=1400 over 1000+1000 gives 1400/1260/140/600") {
  EvalConfig cfg = base_config();
  SplitIndices s = make_splits(1000, 1000, cfg, 0);
  CHECK(s.train_size() == 1400);
  CHECK(s.train_human.size() == 700);
  CHECK(s.train_bot.size() == 700);
  CHECK(s.dev_size() == 1260);
  CHECK(s.val_size() == 140);
  CHECK(s.test_size() == 600);
  CHECK(s.test_human.size() == 300);
}

TEST_CASE("splits are disjoint, balanced, and reproducible across 100 repetitions") {
  EvalConfig cfg = base_config();
  cfg.total_train_m = 280;
  for (std::size_t rep = 0; rep < 100; ++rep) {
    SplitIndices s = make_splits(400, 380, cfg, rep);
    CHECK(s.train_human.size() == s.train_bot.size());
    CHECK(s.test_human.size() == s.test_bot.size());

    std::set<std::size_t> train_h(s.train_human.begin(), s.train_human.end());
    std::set<std::size_t> test_h(s.test_human.begin(), s.test_human.end());
    CHECK(train_h.size() == s.train_human.size());
    for (std::size_t i : test_h) CHECK(train_h.count(i) == 0);

    std::set<std::size_t> dev_h(s.dev_human.begin(), s.dev_human.end());
    std::set<std::size_t> val_h(s.val_human.begin(), s.val_human.end());
    for (std::size_t i : val_h) CHECK(dev_h.count(i) == 0);
    CHECK(dev_h.size() + val_h.size() == train_h.size());

    // 70/30 and 90/10 shape within rounding
    const double train_frac = static_cast<double>(s.train_human.size()) /
                              (s.train_human.size() + s.test_human.size());
    CHECK(std::abs(train_frac - 0.7) < 0.01);
    const double dev_frac =
        static_cast<double>(s.dev_human.size()) / s.train_human.size();
    CHECK(std::abs(dev_frac - 0.9) < 0.01);

    SplitIndices again = make_splits(400, 380, cfg, rep);
    CHECK(again.train_human == s.train_human);
    CHECK(again.test_bot == s.test_bot);
  }
}

TEST_CASE("splits reject odd M and undersized corpora") {
  EvalConfig cfg = base_config();
  cfg.total_train_m = 71;
  CHECK_THROWS_AS(make_splits(1000, 1000, cfg, 0), Error);
  cfg.total_train_m = 1400;
  try {
    make_splits(500, 1000, cfg, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientSamples);
  }
}

TEST_CASE("metrics: perfect separation scores 100 everywhere") {
  Metrics m = compute_metrics({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0});
  CHECK(m.auc == 100.0);
  CHECK(m.acc == 100.0);
  CHECK(m.precision == 100.0);
  CHECK(m.recall == 100.0);
  CHECK(m.f1 == 100.0);
  CHECK(m.cm.tp == 2);
  CHECK(m.cm.tn == 2);
}

TEST_CASE("metrics: all-identical scores give AUC 50 by the tie convention") {
  Metrics m = compute_metrics({0.4, 0.4, 0.4, 0.4}, {1, 0, 1, 0});
  CHECK(m.auc == 50.0);
}

TEST_CASE("metrics: the four-point worked example lands on exactly 75") {
  const Vec scores = {0.8, 0.4, 0.6, 0.2};
  const std::vector<int> labels = {1, 1, 0, 0};
  Metrics m = compute_metrics(scores, labels);
  CHECK(m.auc == 75.0);
  std::vector<double> s(scores.begin(), scores.end());
  CHECK(oracle::brute_force_auc(s, labels) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("metrics: single-class evaluation raises but still carries threshold metrics") {
  try {
    compute_metrics({0.9, 0.2}, {1, 1});
    CHECK(false);
  } catch (const SingleClassEvalError& e) {
    CHECK(e.kind() == ErrorKind::SingleClassEvalSet);
    CHECK(e.partial.acc == 50.0);  // one bot caught, one missed
    CHECK(e.partial.cm.tp == 1);
    CHECK(e.partial.cm.fn == 1);
  }
}

TEST_CASE("oracle: rank AUC equals trapezoidal and brute-force AUC on random sets") {
  Rng rng(202);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 4 + rng.uniform_index(60);
    Vec scores;
    std::vector<int> labels;
    bool has0 = false, has1 = false;
    for (std::size_t i = 0; i < n; ++i) {
      // quantized scores force plenty of ties
      scores.push_back(std::round(rng.uniform01() * 8.0) / 8.0);
      labels.push_back(rng.uniform01() < 0.5 ? 0 : 1);
      (labels.back() ? has1 : has0) = true;
    }
    if (!has0 || !has1) continue;
    const double rank = compute_metrics(scores, labels).auc / 100.0;
    std::vector<double> s(scores.begin(), scores.end());
    const double trap = oracle::trapezoid_roc_auc(s, labels);
    const double brute = oracle::brute_force_auc(s, labels);
    CHECK(rank == doctest::Approx(trap).epsilon(1e-9));
    CHECK(rank == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("config validation catches contradictory scenarios") {
  EvalConfig cfg = base_config(Scenario::Agnostic);
  cfg.bot_sources_train = {BotSource::Handcrafted};
  cfg.bot_sources_test = {BotSource::Handcrafted};
  CHECK_THROWS_AS(cfg.validate(), Error);

  EvalConfig oc = base_config(Scenario::OneClass);
  oc.bot_sources_train = {BotSource::Gan};
  oc.bot_sources_test = {BotSource::Gan};
  try {
    oc.validate();
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigContradiction);
  }

  EvalConfig ok = base_config(Scenario::OneClass);
  ok.bot_sources_train = {};
  ok.bot_sources_test = {BotSource::Gan};
  CHECK_NOTHROW(ok.validate());
}

TEST_CASE("run_scenario: displaced bots are separated perfectly by every classifier") {
  Corpus humans = fixtures::surrogate_human_corpus(200, 301);
  Corpus bots = displaced_bots(humans);
  EvalConfig cfg = base_config();
  cfg.total_train_m = 140;
  cfg.repetitions = 3;
  for (ClassifierKind kind :
       {ClassifierKind::Knn, ClassifierKind::RandomForest, ClassifierKind::SvmRbf}) {
    ClassifierSpec spec;
    spec.kind = kind;
    EvalReport rep = run_scenario(humans, bots, Corpus{}, spec, cfg);
    CHECK(rep.mean.acc == 100.0);
    CHECK(rep.mean.auc == 100.0);
  }
}

TEST_CASE("run_scenario: one-class flags displaced bots as anomalies") {
  Corpus humans = fixtures::surrogate_human_corpus(360, 302);
  Corpus bots = displaced_bots(humans);
  EvalConfig cfg = base_config(Scenario::OneClass);
  cfg.bot_sources_train = {};
  cfg.bot_sources_test = {BotSource::Handcrafted};
  cfg.total_train_m = 400;
  cfg.repetitions = 2;
  cfg.modality = FeatureMode::TouchAccel;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::OneClassSvm;
  spec.rbf_gamma = 0.1 / 18.0;  // wide kernel; 18-dim one-class needs smoothing
  EvalReport rep = run_scenario(humans, bots, Corpus{}, spec, cfg);
  CHECK(rep.mean.acc > 85.0);
}

TEST_CASE("run_scenario: agnostic trains on one source and tests on the other") {
  Corpus humans = fixtures::surrogate_human_corpus(150, 303);
  HumanSwipePrior prior = fit_prior(humans).prior;
  Corpus handcrafted, ganlike;
  for (int i = 0; i < 150; ++i)
    handcrafted.samples.push_back(synth_handcrafted_sample(prior, 9000 + i));
  // stand-in for the second source: same generator, different seeds
  for (int i = 0; i < 150; ++i) {
    SwipeSample s = synth_handcrafted_sample(prior, 70000 + i);
    s.label = SourceLabel::GanBot;
    ganlike.samples.push_back(s);
  }
  EvalConfig cfg = base_config(Scenario::Agnostic);
  cfg.bot_sources_train = {BotSource::Handcrafted};
  cfg.bot_sources_test = {BotSource::Gan};
  cfg.total_train_m = 100;
  cfg.repetitions = 2;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::RandomForest;
  spec.n_trees = 50;
  EvalReport rep = run_scenario(humans, handcrafted, ganlike, spec, cfg);
  // same generator on both sides, so the unknown-source bots are still caught
  CHECK(rep.mean.acc > 90.0);
  CHECK(rep.per_repetition.size() == 2);
}

TEST_CASE("run_scenario: hyperparameter tuning sweeps the declared grid") {
  Corpus humans = fixtures::surrogate_human_corpus(150, 304);
  Corpus bots = displaced_bots(humans);
  EvalConfig cfg = base_config();
  cfg.total_train_m = 100;
  cfg.repetitions = 1;
  cfg.tune_hyperparameters = true;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Knn;
  EvalReport rep = run_scenario(humans, bots, Corpus{}, spec, cfg);
  CHECK(rep.mean.acc == 100.0);
}

TEST_CASE("standardizer leakage: the model depends on its training split only") {
  Corpus humans = fixtures::surrogate_human_corpus(120, 305);
  std::vector<FeatureVector> train;
  for (int i = 0; i < 60; ++i)
    train.push_back(extract_features(humans.samples[i], FeatureMode::TouchOnly));
  for (int i = 0; i < 30; ++i) {
    FeatureVector bot = train[i];
    for (auto& v : bot.values) v += 100.0;
    bot.label = SourceLabel::HandcraftedBot;
    train.push_back(bot);
  }
  ClassifierSpec spec;
  spec.kind = ClassifierKind::Knn;
  spec.k = 5;
  ClassifierModel m1 = train_classifier(spec, train);
  ClassifierModel m2 = train_classifier(spec, train);  // test data plays no role
  CHECK(m1.standardizer.mean() == m2.standardizer.mean());
  CHECK(m1.standardizer.stddev() == m2.standardizer.stddev());
  // perturbing would-be test vectors cannot move the fitted statistics
  FeatureVector probe = extract_features(humans.samples[100], FeatureMode::TouchOnly);
  const double before = predict_bot_score(m1, probe);
  FeatureVector perturbed = probe;
  for (auto& v : perturbed.values) v *= 7.0;
  (void)predict_bot_score(m1, perturbed);
  CHECK(predict_bot_score(m1, probe) == before);
}

TEST_CASE("report aggregation uses population std and echoes the scenario") {
  EvalReport rep;
  rep.scenario = "multiclass";
  Metrics a, b;
  a.acc = 90.0;
  b.acc = 94.0;
  a.auc = b.auc = 99.0;
  rep.per_repetition = {a, b};
  rep.aggregate();
  CHECK(rep.mean.acc == doctest::Approx(92.0));
  CHECK(rep.stddev.acc == doctest::Approx(2.0));  // population convention
  CHECK(rep.stddev.auc == 0.0);
  std::ostringstream out;
  rep.print_table(out);
  CHECK(out.str().find("multiclass") != std::string::npos);
}

TEST_CASE("ablation: odd grid entries are rejected, short corpora mark points missing") {
  Corpus humans = fixtures::surrogate_human_corpus(120, 306);
  Corpus bots = displaced_bots(humans);
  EvalConfig cfg = base_config();
  cfg.repetitions = 1;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::RandomForest;
  spec.n_trees = 20;

  CHECK_THROWS_AS(ablation_curve(humans, bots, Corpus{}, spec, cfg, {70, 71}), Error);

  auto points = ablation_curve(humans, bots, Corpus{}, spec, cfg, {1400, 70, 140});
  REQUIRE(points.size() == 3);
  CHECK(points[0].total_train_m == 70);   // sorted ascending
  CHECK(points[1].total_train_m == 140);
  CHECK(points[2].total_train_m == 1400);
  CHECK(points[0].available);
  CHECK(points[1].available);
  CHECK_FALSE(points[2].available);  // 120 samples cannot cover M=1400
  CHECK(points[0].mean_acc == 100.0);
}

TEST_CASE("default ablation grid spans 70..1400 in eight even steps") {
  auto grid = default_ablation_grid();
  REQUIRE(grid.size() == 8);
  CHECK(grid.front() == 70);
  CHECK(grid.back() == 1400);
  for (std::size_t m : grid) CHECK(m % 2 == 0);
}

TEST_CASE("histograms: handcrafted efficiency collapses to a single spike at 1") {
  Corpus humans = fixtures::surrogate_human_corpus(80, 307);
  HumanSwipePrior prior = fit_prior(humans).prior;
  Corpus bots;
  for (int i = 0; i < 200; ++i) bots.samples.push_back(synth_handcrafted_sample(prior, i));

  auto hists = feature_distribution_report({{"human", &humans}, {"handcrafted", &bots}});
  REQUIRE(hists.size() == 12);  // 6 features x 2 sources
  for (const auto& h : hists) {
    double total = 0.0;
    for (double m : h.mass) total += m;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto spike = std::find_if(hists.begin(), hists.end(), [](const FeatureHistogram& h) {
    return h.feature == "E" && h.source == "handcrafted";
  });
  REQUIRE(spike != hists.end());
  std::size_t nonzero = 0;
  for (double m : spike->mass) nonzero += m > 0.0 ? 1 : 0;
  CHECK(nonzero == 1);
  CHECK(*std::max_element(spike->mass.begin(), spike->mass.end()) == doctest::Approx(1.0));

  auto again = feature_distribution_report({{"human", &humans}, {"handcrafted", &bots}});
  for (std::size_t i = 0; i < hists.size(); ++i) CHECK(again[i].mass == hists[i].mass);

  Corpus empty;
  CHECK_THROWS_AS(feature_distribution_report({{"empty", &empty}}), Error);

  std::ostringstream csv;
  write_histograms_csv(hists, csv);
  CHECK(csv.str().rfind("feature,source,bin_lo,bin_hi,mass", 0) == 0);
}

TEST_CASE("run_scenario: discriminator scenario scores raw sequences end to end") {
  Corpus humans = fixtures::surrogate_human_corpus(120, 308);
  Corpus bots = displaced_bots(humans);  // same xy, wildly different times
  EvalConfig cfg = base_config(Scenario::GanDiscriminatorEval);
  cfg.bot_sources_train = {};
  cfg.bot_sources_test = {BotSource::Handcrafted};
  cfg.total_train_m = 80;
  cfg.repetitions = 1;
  cfg.gan.seq_len = 8;
  cfg.gan.lstm_sizes = {8};
  cfg.gan.epochs = 2;
  cfg.gan.batch_size = 16;
  ClassifierSpec spec;
  spec.kind = ClassifierKind::GanDiscriminator;
  EvalReport rep = run_scenario(humans, bots, Corpus{}, spec, cfg);
  REQUIRE(rep.per_repetition.size() == 1);
  CHECK(rep.mean.auc >= 0.0);
  CHECK(rep.mean.auc <= 100.0);
  CHECK(std::isfinite(rep.mean.acc));

  // fused modality trains both discriminators and averages their scores
  cfg.modality = FeatureMode::TouchAccel;
  EvalReport fused = run_scenario(humans, bots, Corpus{}, spec, cfg);
  REQUIRE(fused.per_repetition.size() == 1);
  CHECK(std::isfinite(fused.mean.auc));
}
