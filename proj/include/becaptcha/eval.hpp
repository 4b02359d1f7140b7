#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/classify.hpp"
#include "becaptcha/errors.hpp"
#include "becaptcha/features.hpp"
#include "becaptcha/gan.hpp"
#include "becaptcha/rng.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

enum class Scenario { Multiclass, Agnostic, OneClass, GanDiscriminatorEval };

inline const char* scenario_string(Scenario s) {
  switch (s) {
    case Scenario::Multiclass: return "multiclass";
    case Scenario::Agnostic: return "agnostic";
    case Scenario::OneClass: return "one_class";
    case Scenario::GanDiscriminatorEval: return "gan_discriminator";
  }
  return "multiclass";
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "multiclass") return Scenario::Multiclass;
  if (s == "agnostic") return Scenario::Agnostic;
  if (s == "one_class" || s == "oneclass") return Scenario::OneClass;
  if (s == "gan_discriminator" || s == "gandisc") return Scenario::GanDiscriminatorEval;
  throw Error(ErrorKind::InvalidConfig, "unknown scenario '" + s + "'");
}

enum class BotSource { Handcrafted, Gan };

inline const char* bot_source_string(BotSource s) {
  return s == BotSource::Handcrafted ? "handcrafted" : "gan";
}

struct EvalConfig {
  Scenario scenario = Scenario::Multiclass;
  FeatureMode modality = FeatureMode::TouchOnly;
  std::vector<BotSource> bot_sources_train = {BotSource::Handcrafted};
  std::vector<BotSource> bot_sources_test = {BotSource::Handcrafted};
  std::size_t total_train_m = 1000;  // M; per-class train halves are M/2
  double train_fraction = 0.70;
  double dev_fraction_of_train = 0.90;
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
  bool tune_hyperparameters = false;
  GanConfig gan;  // only read by the discriminator scenario

  void validate() const {
    if (total_train_m < 2 || total_train_m % 2 != 0)
      throw Error(ErrorKind::InvalidConfig, "M must be even and >= 2");
    if (train_fraction <= 0.0 || train_fraction >= 1.0 || dev_fraction_of_train <= 0.0 ||
        dev_fraction_of_train >= 1.0)
      throw Error(ErrorKind::InvalidConfig, "split fractions must lie in (0,1)");
    if (repetitions < 1) throw Error(ErrorKind::InvalidConfig, "repetitions must be >= 1");

    auto sorted = [](std::vector<BotSource> v) {
      std::sort(v.begin(), v.end());
      return v;
    };
    switch (scenario) {
      case Scenario::Multiclass:
        if (bot_sources_train.empty() || sorted(bot_sources_train) != sorted(bot_sources_test))
          throw Error(ErrorKind::ConfigContradiction,
                      "multiclass needs identical, non-empty train/test bot sources");
        break;
      case Scenario::Agnostic:
        if (bot_sources_train.empty() || bot_sources_test.empty() ||
            sorted(bot_sources_train) == sorted(bot_sources_test))
          throw Error(ErrorKind::ConfigContradiction,
                      "agnostic needs different train and test bot sources");
        break;
      case Scenario::OneClass:
      case Scenario::GanDiscriminatorEval:
        if (!bot_sources_train.empty())
          throw Error(ErrorKind::ConfigContradiction,
                      "this scenario trains without bot samples");
        if (bot_sources_test.empty())
          throw Error(ErrorKind::ConfigContradiction, "no bot sources to test against");
        break;
    }
  }
};

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

// All rates in percent; bot is the positive class throughout.
struct Metrics {
  double auc = 0.0;
  double acc = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Confusion cm;
};

class SingleClassEvalError : public Error {
 public:
  Metrics partial;  // threshold metrics are still well defined
  explicit SingleClassEvalError(Metrics m)
      : Error(ErrorKind::SingleClassEvalSet, "AUC needs both classes in the eval set"),
        partial(m) {}
};

namespace eval_detail {

inline Metrics threshold_metrics(const Vec& bot_scores, const std::vector<int>& is_bot,
                                 double threshold) {
  Metrics m;
  for (std::size_t i = 0; i < bot_scores.size(); ++i) {
    const bool pred_bot = bot_scores[i] >= threshold;
    if (is_bot[i] && pred_bot) ++m.cm.tp;
    else if (is_bot[i]) ++m.cm.fn;
    else if (pred_bot) ++m.cm.fp;
    else ++m.cm.tn;
  }
  const double n = static_cast<double>(bot_scores.size());
  m.acc = 100.0 * (m.cm.tp + m.cm.tn) / n;
  const double pd = static_cast<double>(m.cm.tp + m.cm.fp);
  const double rd = static_cast<double>(m.cm.tp + m.cm.fn);
  m.precision = pd > 0.0 ? 100.0 * m.cm.tp / pd : 0.0;
  m.recall = rd > 0.0 ? 100.0 * m.cm.tp / rd : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Mann-Whitney rank AUC; tied scores contribute through average ranks.
inline double rank_auc(const Vec& bot_scores, const std::vector<int>& is_bot) {
  const std::size_t n = bot_scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return bot_scores[a] < bot_scores[b]; });

  Vec rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && bot_scores[order[j + 1]] == bot_scores[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }

  double rank_sum = 0.0;
  std::size_t n_bot = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (is_bot[k]) {
      rank_sum += rank[k];
      ++n_bot;
    }
  const std::size_t n_human = n - n_bot;
  const double u = rank_sum - 0.5 * static_cast<double>(n_bot) * (n_bot + 1);
  return u / (static_cast<double>(n_bot) * static_cast<double>(n_human));
}

}  // namespace eval_detail

inline Metrics compute_metrics(const Vec& bot_scores, const std::vector<int>& is_bot,
                               double threshold = 0.5) {
  if (bot_scores.empty() || bot_scores.size() != is_bot.size())
    throw Error(ErrorKind::ShapeMismatch, "scores and labels must align and be non-empty");
  Metrics m = eval_detail::threshold_metrics(bot_scores, is_bot, threshold);
  const std::size_t n_bot = m.cm.tp + m.cm.fn;
  const std::size_t n_human = m.cm.fp + m.cm.tn;
  if (n_bot == 0 || n_human == 0) throw SingleClassEvalError(m);
  m.auc = 100.0 * eval_detail::rank_auc(bot_scores, is_bot);
  return m;
}

// --- splits --------------------------------------------------------------

struct SplitIndices {
  std::vector<std::size_t> train_human, train_bot;
  std::vector<std::size_t> test_human, test_bot;
  std::vector<std::size_t> dev_human, dev_bot;  // subsets of train
  std::vector<std::size_t> val_human, val_bot;

  std::size_t train_size() const { return train_human.size() + train_bot.size(); }
  std::size_t test_size() const { return test_human.size() + test_bot.size(); }
  std::size_t dev_size() const { return dev_human.size() + dev_bot.size(); }
  std::size_t val_size() const { return val_human.size() + val_bot.size(); }
};

namespace eval_detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  return idx;
}

inline std::size_t test_count_per_class(const EvalConfig& cfg) {
  const std::size_t train_pc = cfg.total_train_m / 2;
  const double f = cfg.train_fraction;
  return std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(train_pc * (1.0 - f) / f)));
}

struct ClassSplit {
  std::vector<std::size_t> train, test, dev, val;
};

inline ClassSplit split_one_pool(std::size_t n, std::size_t train_pc, std::size_t test_pc,
                                 double dev_fraction, Rng rng, const char* pool_name) {
  if (n < train_pc + test_pc)
    throw Error(ErrorKind::InsufficientSamples,
                std::string(pool_name) + " pool needs " + std::to_string(train_pc + test_pc) +
                    " samples, has " + std::to_string(n));
  auto idx = shuffled_indices(n, rng);
  ClassSplit s;
  s.train.assign(idx.begin(), idx.begin() + train_pc);
  s.test.assign(idx.begin() + train_pc, idx.begin() + train_pc + test_pc);
  const std::size_t dev_pc =
      static_cast<std::size_t>(std::llround(dev_fraction * train_pc));
  s.dev.assign(s.train.begin(), s.train.begin() + dev_pc);
  s.val.assign(s.train.begin() + dev_pc, s.train.end());
  return s;
}

}  // namespace eval_detail

// Balanced 70/30 train/test split with the train half further split 90/10
// into development and validation, deterministic in (seed, repetition).
inline SplitIndices make_splits(std::size_t n_human, std::size_t n_bot, const EvalConfig& cfg,
                                std::size_t repetition) {
  cfg.validate();
  const std::size_t train_pc = cfg.total_train_m / 2;
  const std::size_t test_pc = eval_detail::test_count_per_class(cfg);

  Rng root(cfg.seed);
  auto humans = eval_detail::split_one_pool(n_human, train_pc, test_pc,
                                            cfg.dev_fraction_of_train,
                                            root.child(repetition * 2), "human");
  auto bots = eval_detail::split_one_pool(n_bot, train_pc, test_pc, cfg.dev_fraction_of_train,
                                          root.child(repetition * 2 + 1), "bot");

  SplitIndices s;
  s.train_human = std::move(humans.train);
  s.test_human = std::move(humans.test);
  s.dev_human = std::move(humans.dev);
  s.val_human = std::move(humans.val);
  s.train_bot = std::move(bots.train);
  s.test_bot = std::move(bots.test);
  s.dev_bot = std::move(bots.dev);
  s.val_bot = std::move(bots.val);
  return s;
}

// --- reports ---------------------------------------------------------------

struct EvalReport {
  std::string scenario;
  std::string classifier;
  std::string modality;
  std::string bots_train;
  std::string bots_test;
  std::size_t total_train_m = 0;
  std::vector<Metrics> per_repetition;
  Metrics mean;
  Metrics stddev;

  void aggregate() {
    auto fold = [&](auto get) {
      double mu = 0.0;
      for (const auto& m : per_repetition) mu += get(m);
      mu /= static_cast<double>(per_repetition.size());
      double var = 0.0;
      for (const auto& m : per_repetition) var += (get(m) - mu) * (get(m) - mu);
      return std::pair<double, double>(
          mu, std::sqrt(var / static_cast<double>(per_repetition.size())));
    };
    std::tie(mean.auc, stddev.auc) = fold([](const Metrics& m) { return m.auc; });
    std::tie(mean.acc, stddev.acc) = fold([](const Metrics& m) { return m.acc; });
    std::tie(mean.precision, stddev.precision) =
        fold([](const Metrics& m) { return m.precision; });
    std::tie(mean.recall, stddev.recall) = fold([](const Metrics& m) { return m.recall; });
    std::tie(mean.f1, stddev.f1) = fold([](const Metrics& m) { return m.f1; });
    for (const auto& m : per_repetition) {
      mean.cm.tp += m.cm.tp;
      mean.cm.fp += m.cm.fp;
      mean.cm.tn += m.cm.tn;
      mean.cm.fn += m.cm.fn;
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["scenario"] = scenario;
    j["classifier"] = classifier;
    j["modality"] = modality;
    j["bots_train"] = bots_train;
    j["bots_test"] = bots_test;
    j["M"] = total_train_m;
    auto metrics_json = [](const Metrics& m) {
      return nlohmann::json{{"auc", m.auc},       {"acc", m.acc}, {"precision", m.precision},
                            {"recall", m.recall}, {"f1", m.f1}};
    };
    j["repetitions"] = nlohmann::json::array();
    for (const auto& m : per_repetition) j["repetitions"].push_back(metrics_json(m));
    j["mean"] = metrics_json(mean);
    j["std"] = metrics_json(stddev);
    j["confusion_total"] = {{"tp", mean.cm.tp}, {"fp", mean.cm.fp},
                            {"tn", mean.cm.tn}, {"fn", mean.cm.fn}};
    return j;
  }

  void print_table(std::ostream& out) const {
    out << scenario << " | " << classifier << " | " << modality << " | train bots: " << bots_train
        << " | test bots: " << bots_test << " | M=" << total_train_m << "\n";
    out << std::fixed << std::setprecision(1);
    out << "  rep    AUC    Acc    Pre     Re     F1\n";
    for (std::size_t r = 0; r < per_repetition.size(); ++r) {
      const auto& m = per_repetition[r];
      out << "  " << std::setw(3) << r << std::setw(7) << m.auc << std::setw(7) << m.acc
          << std::setw(7) << m.precision << std::setw(7) << m.recall << std::setw(7) << m.f1
          << "\n";
    }
    out << " mean" << std::setw(7) << mean.auc << std::setw(7) << mean.acc << std::setw(7)
        << mean.precision << std::setw(7) << mean.recall << std::setw(7) << mean.f1 << "\n";
    out << "  std" << std::setw(7) << stddev.auc << std::setw(7) << stddev.acc << std::setw(7)
        << stddev.precision << std::setw(7) << stddev.recall << std::setw(7) << stddev.f1 << "\n";
    out << "  confusion over all repetitions (bot positive): tp=" << mean.cm.tp
        << " fp=" << mean.cm.fp << " tn=" << mean.cm.tn << " fn=" << mean.cm.fn << "\n";
  }
};

// --- scenario driver ---------------------------------------------------------

namespace eval_detail {

inline std::string sources_string(const std::vector<BotSource>& v) {
  if (v.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += "+";
    out += bot_source_string(v[i]);
  }
  return out;
}

// Drop swipes without geometry (start == end); they carry no efficiency.
inline Corpus filter_zero_length(const Corpus& in) {
  Corpus out;
  out.provenance = in.provenance;
  for (const auto& s : in.samples) {
    const auto& p = s.touch.points;
    if (std::hypot(p.back().x - p.front().x, p.back().y - p.front().y) > 0.0)
      out.samples.push_back(s);
  }
  return out;
}

// Even per-source allocation of a bot half, remainder to the earlier sources.
inline std::vector<std::size_t> split_evenly(std::size_t total, std::size_t parts) {
  std::vector<std::size_t> out(parts, total / parts);
  for (std::size_t i = 0; i < total % parts; ++i) ++out[i];
  return out;
}

struct BotDraw {
  std::vector<const SwipeSample*> train;
  std::vector<const SwipeSample*> test;
};

inline BotDraw draw_bots(const std::map<BotSource, const Corpus*>& pools, const EvalConfig& cfg,
                         std::size_t repetition, std::size_t train_per_class,
                         std::size_t test_per_class) {
  BotDraw out;
  Rng root(cfg.seed);
  std::map<BotSource, std::vector<std::size_t>> shuffled;
  std::map<BotSource, std::size_t> cursor;
  for (const auto& [src, corpus] : pools) {
    shuffled[src] = shuffled_indices(
        corpus->size(), root.child(0x1000 + repetition * 8 + static_cast<std::size_t>(src)));
    cursor[src] = 0;
  }
  auto take = [&](BotSource src, std::size_t count, std::vector<const SwipeSample*>& sink) {
    const Corpus* corpus = pools.at(src);
    auto& idx = shuffled[src];
    auto& cur = cursor[src];
    if (cur + count > idx.size())
      throw Error(ErrorKind::InsufficientSamples,
                  std::string(bot_source_string(src)) + " corpus too small for requested M");
    for (std::size_t i = 0; i < count; ++i) sink.push_back(&corpus->samples[idx[cur++]]);
  };
  if (!cfg.bot_sources_train.empty()) {
    auto counts = split_evenly(train_per_class, cfg.bot_sources_train.size());
    for (std::size_t s = 0; s < cfg.bot_sources_train.size(); ++s)
      take(cfg.bot_sources_train[s], counts[s], out.train);
  }
  auto counts = split_evenly(test_per_class, cfg.bot_sources_test.size());
  for (std::size_t s = 0; s < cfg.bot_sources_test.size(); ++s)
    take(cfg.bot_sources_test[s], counts[s], out.test);
  return out;
}

inline std::vector<FeatureVector> featurize_samples(
    const std::vector<const SwipeSample*>& samples, FeatureMode mode) {
  std::vector<FeatureVector> out;
  out.reserve(samples.size());
  for (const auto* s : samples) out.push_back(extract_features(*s, mode));
  return out;
}

// Small declared grid swept on the 90/10 development/validation split.
inline ClassifierSpec tune_spec(const ClassifierSpec& base,
                                const std::vector<FeatureVector>& dev,
                                const std::vector<FeatureVector>& val) {
  std::vector<ClassifierSpec> candidates;
  const std::size_t dim = feature_dim(dev.front().mode);
  switch (base.kind) {
    case ClassifierKind::Knn:
      for (std::size_t k : {5u, 10u, 20u}) {
        ClassifierSpec s = base;
        s.k = std::min<std::size_t>(k, dev.size());
        candidates.push_back(s);
      }
      break;
    case ClassifierKind::RandomForest:
      for (std::size_t t : {50u, 100u, 200u}) {
        ClassifierSpec s = base;
        s.n_trees = t;
        candidates.push_back(s);
      }
      break;
    case ClassifierKind::SvmRbf:
      for (double c : {0.1, 1.0, 10.0})
        for (double g : {0.1, 1.0, 10.0}) {
          ClassifierSpec s = base;
          s.svm_c = c;
          s.rbf_gamma = g / static_cast<double>(dim);
          candidates.push_back(s);
        }
      break;
    default:
      return base;
  }

  ClassifierSpec best = base;
  double best_acc = -1.0;
  for (const auto& cand : candidates) {
    ClassifierModel m = train_classifier(cand, dev);
    std::size_t correct = 0;
    for (const auto& v : val)
      if (predict_is_bot(m, v) == (v.label != SourceLabel::Human)) ++correct;
    const double acc = static_cast<double>(correct) / static_cast<double>(val.size());
    if (acc > best_acc + 1e-12) {
      best_acc = acc;
      best = cand;
    }
  }
  return best;
}

}  // namespace eval_detail

// One scenario end to end: split, featurize, fit the standardizer on the
// training split only, train, score the balanced test set, aggregate over
// repetitions.
inline EvalReport run_scenario(const Corpus& human, const Corpus& handcrafted, const Corpus& gan,
                               const ClassifierSpec& spec, const EvalConfig& cfg) {
  cfg.validate();
  const bool discriminator = cfg.scenario == Scenario::GanDiscriminatorEval;

  const Corpus humans = eval_detail::filter_zero_length(human);
  const Corpus hc = discriminator ? handcrafted : eval_detail::filter_zero_length(handcrafted);
  const Corpus gb = discriminator ? gan : eval_detail::filter_zero_length(gan);

  std::map<BotSource, const Corpus*> pools;
  pools[BotSource::Handcrafted] = &hc;
  pools[BotSource::Gan] = &gb;

  const std::size_t train_pc = cfg.total_train_m / 2;
  const std::size_t test_pc = eval_detail::test_count_per_class(cfg);
  if (humans.size() < train_pc + test_pc)
    throw Error(ErrorKind::InsufficientSamples, "human corpus too small for requested M");

  EvalReport report;
  report.scenario = scenario_string(cfg.scenario);
  report.classifier = classifier_kind_string(spec.kind);
  report.modality = feature_mode_string(cfg.modality);
  report.bots_train = eval_detail::sources_string(cfg.bot_sources_train);
  report.bots_test = eval_detail::sources_string(cfg.bot_sources_test);
  report.total_train_m = cfg.total_train_m;

  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    const eval_detail::ClassSplit human_split = eval_detail::split_one_pool(
        humans.size(), train_pc, test_pc, cfg.dev_fraction_of_train,
        Rng(cfg.seed).child(rep * 2), "human");

    std::vector<const SwipeSample*> train_humans, test_humans;
    for (std::size_t i : human_split.train) train_humans.push_back(&humans.samples[i]);
    for (std::size_t i : human_split.test) test_humans.push_back(&humans.samples[i]);

    eval_detail::BotDraw bots =
        eval_detail::draw_bots(pools, cfg, rep, train_pc, test_pc);

    Vec scores;
    std::vector<int> is_bot;

    if (discriminator) {
      Corpus train_corpus;
      for (const auto* s : train_humans) train_corpus.samples.push_back(*s);
      GanConfig gcfg = cfg.gan;
      gcfg.seed = Rng(cfg.seed).child(0x6A0 + rep).seed();
      gcfg.batch_size = std::min(gcfg.batch_size, train_corpus.size());

      GanModel touch_model = train_gan(train_corpus, GanModality::Touch, gcfg);
      std::optional<GanModel> accel_model;
      if (cfg.modality == FeatureMode::TouchAccel)
        accel_model = train_gan(train_corpus, GanModality::Accel, gcfg);

      auto score_sample = [&](const SwipeSample& s) {
        double human_like = discriminator_score_sample(touch_model, s);
        if (accel_model)
          human_like = 0.5 * (human_like + discriminator_score_sample(*accel_model, s));
        return 1.0 - human_like;  // bot score
      };
      for (const auto* s : test_humans) {
        scores.push_back(score_sample(*s));
        is_bot.push_back(0);
      }
      for (const auto* s : bots.test) {
        scores.push_back(score_sample(*s));
        is_bot.push_back(1);
      }
    } else {
      std::vector<FeatureVector> test_feats =
          eval_detail::featurize_samples(test_humans, cfg.modality);
      is_bot.assign(test_feats.size(), 0);
      {
        auto bot_feats = eval_detail::featurize_samples(bots.test, cfg.modality);
        for (auto& f : bot_feats) {
          test_feats.push_back(std::move(f));
          is_bot.push_back(1);
        }
      }

      ClassifierModel model;
      if (cfg.scenario == Scenario::OneClass) {
        auto train_feats = eval_detail::featurize_samples(train_humans, cfg.modality);
        model = train_one_class(train_feats, spec);
      } else {
        auto train_feats = eval_detail::featurize_samples(train_humans, cfg.modality);
        {
          auto bot_feats = eval_detail::featurize_samples(bots.train, cfg.modality);
          train_feats.insert(train_feats.end(), bot_feats.begin(), bot_feats.end());
        }
        ClassifierSpec active_spec = spec;
        if (cfg.tune_hyperparameters) {
          // dev/val carve the train half of each class: first 90% dev, rest val
          std::vector<FeatureVector> dev, val;
          const std::size_t dev_pc = human_split.dev.size();
          for (std::size_t i = 0; i < train_feats.size(); ++i) {
            const std::size_t pos = i < train_pc ? i : i - train_pc;
            (pos < dev_pc ? dev : val).push_back(train_feats[i]);
          }
          active_spec = eval_detail::tune_spec(spec, dev, val);
        }
        model = train_classifier(active_spec, train_feats);
      }

      for (const auto& f : test_feats) scores.push_back(predict_bot_score(model, f));
    }

    Metrics m = compute_metrics(scores, is_bot);
    report.per_repetition.push_back(m);
  }

  report.aggregate();
  return report;
}

// --- ablation ----------------------------------------------------------------

struct AblationPoint {
  std::size_t total_train_m = 0;
  bool available = false;  // false when the corpora cannot cover this M
  double mean_acc = 0.0;
  double std_acc = 0.0;
};

inline std::vector<AblationPoint> ablation_curve(const Corpus& human, const Corpus& handcrafted,
                                                 const Corpus& gan, const ClassifierSpec& spec,
                                                 EvalConfig cfg,
                                                 std::vector<std::size_t> m_values) {
  for (std::size_t m : m_values)
    if (m < 2 || m % 2 != 0)
      throw Error(ErrorKind::InvalidConfig, "ablation M values must be even and >= 2");
  std::sort(m_values.begin(), m_values.end());

  std::vector<AblationPoint> out;
  for (std::size_t m : m_values) {
    AblationPoint pt;
    pt.total_train_m = m;
    cfg.total_train_m = m;
    try {
      EvalReport rep = run_scenario(human, handcrafted, gan, spec, cfg);
      pt.available = true;
      pt.mean_acc = rep.mean.acc;
      pt.std_acc = rep.stddev.acc;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientSamples) throw;
    }
    out.push_back(pt);
  }
  return out;
}

inline std::vector<std::size_t> default_ablation_grid() {
  // eight evenly spaced even sizes from 70 to 1400
  std::vector<std::size_t> out;
  for (int i = 0; i < 8; ++i) out.push_back(70 + 190 * i);
  return out;
}

// --- feature distribution report ----------------------------------------------

struct FeatureHistogram {
  std::string feature;
  std::string source;
  double lo = 0.0;
  double hi = 0.0;
  Vec mass;  // normalized to sum 1
};

inline std::vector<FeatureHistogram> feature_distribution_report(
    const std::vector<std::pair<std::string, const Corpus*>>& corpora, std::size_t bins = 50) {
  static const char* kFeatureNames[6] = {"D", "L", "P", "alpha", "V", "E"};
  for (const auto& [name, corpus] : corpora)
    if (corpus == nullptr || corpus->empty())
      throw Error(ErrorKind::EmptyCorpus, "empty corpus in distribution report: " + name);

  // per-source feature columns
  std::vector<std::array<Vec, 6>> columns(corpora.size());
  for (std::size_t s = 0; s < corpora.size(); ++s)
    for (const auto& sample : corpora[s].second->samples) {
      TouchFeatures tf;
      try {
        tf = touch_features(sample.touch);
      } catch (const Error&) {
        continue;  // zero-length swipe, no efficiency
      }
      const double vals[6] = {tf.duration_d,     tf.distance_l,      tf.displacement_p,
                              tf.angle_alpha,    tf.mean_velocity_v, tf.efficiency_e};
      for (int f = 0; f < 6; ++f) columns[s][f].push_back(vals[f]);
    }

  std::vector<FeatureHistogram> out;
  for (int f = 0; f < 6; ++f) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& col : columns)
      for (double v : col[f]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    for (std::size_t s = 0; s < corpora.size(); ++s) {
      FeatureHistogram h;
      h.feature = kFeatureNames[f];
      h.source = corpora[s].first;
      h.lo = lo;
      h.hi = hi;
      h.mass.assign(bins, 0.0);
      const auto& col = columns[s][f];
      for (double v : col) {
        std::size_t b = static_cast<std::size_t>((v - lo) / width);
        if (b >= bins) b = bins - 1;
        h.mass[b] += 1.0;
      }
      if (!col.empty())
        for (double& m : h.mass) m /= static_cast<double>(col.size());
      out.push_back(std::move(h));
    }
  }
  return out;
}

inline void write_histograms_csv(const std::vector<FeatureHistogram>& hists, std::ostream& out) {
  out << "feature,source,bin_lo,bin_hi,mass\n";
  out.precision(12);
  for (const auto& h : hists) {
    const double width = (h.hi > h.lo ? h.hi - h.lo : 1.0) / static_cast<double>(h.mass.size());
    for (std::size_t b = 0; b < h.mass.size(); ++b)
      out << h.feature << "," << h.source << "," << h.lo + b * width << ","
          << h.lo + (b + 1) * width << "," << h.mass[b] << "\n";
  }
}

}  // namespace becaptcha
