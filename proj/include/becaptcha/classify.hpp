#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/features.hpp"
#include "becaptcha/forest.hpp"
#include "becaptcha/svm_smo.hpp"

namespace becaptcha {

enum class ClassifierKind { Knn, RandomForest, SvmRbf, OneClassSvm, GanDiscriminator };

inline const char* classifier_kind_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Knn: return "knn";
    case ClassifierKind::RandomForest: return "random_forest";
    case ClassifierKind::SvmRbf: return "svm_rbf";
    case ClassifierKind::OneClassSvm: return "one_class_svm";
    case ClassifierKind::GanDiscriminator: return "gan_discriminator";
  }
  return "knn";
}

inline ClassifierKind parse_classifier_kind(const std::string& s) {
  if (s == "knn") return ClassifierKind::Knn;
  if (s == "rf" || s == "random_forest") return ClassifierKind::RandomForest;
  if (s == "svm" || s == "svm_rbf") return ClassifierKind::SvmRbf;
  if (s == "ocsvm" || s == "one_class_svm") return ClassifierKind::OneClassSvm;
  if (s == "gan_discriminator" || s == "gandisc") return ClassifierKind::GanDiscriminator;
  throw Error(ErrorKind::InvalidConfig, "unknown classifier kind '" + s + "'");
}

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::Knn;
  std::size_t k = 10;
  std::size_t n_trees = 100;
  int max_depth = -1;        // unlimited
  double svm_c = 1.0;
  double rbf_gamma = 0.0;    // <= 0 resolves to 1/dim at training time
  double ocsvm_nu = 0.1;
  double smo_tolerance = 1e-3;
  std::size_t smo_max_passes = 100000;
  std::uint64_t seed = 1;

  void validate() const {
    if (k < 1 || n_trees < 1 || svm_c <= 0.0 || ocsvm_nu <= 0.0 || ocsvm_nu > 1.0)
      throw Error(ErrorKind::InvalidConfig, "bad classifier hyperparameters");
  }

  double resolved_gamma(std::size_t dim) const {
    return rbf_gamma > 0.0 ? rbf_gamma : 1.0 / static_cast<double>(dim);
  }
};

// Trained human-vs-bot scorer. The standardizer fitted on the training set
// travels with the model and is applied inside every predict call.
struct ClassifierModel {
  ClassifierSpec spec;
  FeatureMode mode = FeatureMode::TouchOnly;
  Standardizer standardizer;

  // payload, one of:
  std::vector<Vec> knn_points;
  std::vector<int> knn_labels;  // 1 = bot
  RandomForest forest;
  SvmDual svm;
  OneClassDual ocsvm;
};

namespace classify_detail {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline int binary_label(SourceLabel l) { return l == SourceLabel::Human ? 0 : 1; }

inline std::pair<std::vector<Vec>, std::vector<int>> standardized_matrix(
    const ClassifierModel& model, const std::vector<FeatureVector>& train) {
  std::vector<Vec> x;
  std::vector<int> y;
  x.reserve(train.size());
  y.reserve(train.size());
  for (const auto& v : train) {
    x.push_back(model.standardizer.apply(v).values);
    y.push_back(binary_label(v.label));
  }
  return {std::move(x), std::move(y)};
}

}  // namespace classify_detail

inline ClassifierModel train_classifier(const ClassifierSpec& spec,
                                        const std::vector<FeatureVector>& train) {
  spec.validate();
  if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training vectors");
  if (spec.kind == ClassifierKind::OneClassSvm || spec.kind == ClassifierKind::GanDiscriminator)
    throw Error(ErrorKind::ConfigContradiction,
                "train_classifier handles the binary feature classifiers");

  bool has_human = false, has_bot = false;
  for (const auto& v : train)
    (v.label == SourceLabel::Human ? has_human : has_bot) = true;
  if (!has_human || !has_bot)
    throw Error(ErrorKind::SingleClassTrainingSet,
                "binary training needs both human and bot samples");

  ClassifierModel model;
  model.spec = spec;
  model.mode = train.front().mode;
  model.standardizer = Standardizer::fit(train);
  auto [x, y] = classify_detail::standardized_matrix(model, train);

  switch (spec.kind) {
    case ClassifierKind::Knn:
      if (spec.k > x.size())
        throw Error(ErrorKind::KExceedsTrainingSize, "k exceeds training-set size");
      model.knn_points = std::move(x);
      model.knn_labels = std::move(y);
      break;
    case ClassifierKind::RandomForest: {
      ForestConfig cfg;
      cfg.n_trees = spec.n_trees;
      cfg.max_depth = spec.max_depth;
      cfg.seed = spec.seed;
      model.forest = RandomForest::train(x, y, cfg);
      break;
    }
    case ClassifierKind::SvmRbf: {
      std::vector<int> pm(y.size());
      for (std::size_t i = 0; i < y.size(); ++i) pm[i] = y[i] == 1 ? 1 : -1;  // bot positive
      model.svm = solve_svm_rbf(x, pm, spec.svm_c, spec.resolved_gamma(x.front().size()),
                                spec.smo_tolerance, spec.smo_max_passes, spec.seed);
      break;
    }
    default:
      break;
  }
  return model;
}

inline ClassifierModel train_one_class(const std::vector<FeatureVector>& human_train,
                                       const ClassifierSpec& spec_in) {
  ClassifierSpec spec = spec_in;
  spec.kind = ClassifierKind::OneClassSvm;
  spec.validate();
  if (human_train.empty())
    throw Error(ErrorKind::EmptyTrainingSet, "one-class training set is empty");
  for (const auto& v : human_train)
    if (v.label != SourceLabel::Human)
      throw Error(ErrorKind::ConfigContradiction, "one-class training expects human samples only");

  ClassifierModel model;
  model.spec = spec;
  model.mode = human_train.front().mode;
  model.standardizer = Standardizer::fit(human_train);
  auto [x, y] = classify_detail::standardized_matrix(model, human_train);
  (void)y;
  model.ocsvm = solve_one_class_rbf(x, spec.ocsvm_nu, spec.resolved_gamma(x.front().size()),
                                    spec.smo_tolerance, spec.smo_max_passes);
  return model;
}

// Raw one-class anomaly score; positive means outside the human region.
inline double one_class_anomaly_score(const ClassifierModel& model, const FeatureVector& v) {
  if (model.spec.kind != ClassifierKind::OneClassSvm)
    throw Error(ErrorKind::ConfigContradiction, "model is not a one-class SVM");
  return model.ocsvm.anomaly_score(model.standardizer.apply(v).values);
}

// Bot score in [0, 1]; >= 0.5 reads as bot. KNN and forests report vote
// fractions, the SVMs squash their (bot-positive) decision values.
inline double predict_bot_score(const ClassifierModel& model, const FeatureVector& v) {
  if (v.mode != model.mode)
    throw Error(ErrorKind::ModeMismatch, "feature mode does not match model");
  const Vec x = model.standardizer.apply(v).values;

  switch (model.spec.kind) {
    case ClassifierKind::Knn: {
      const std::size_t n = model.knn_points.size();
      if (model.spec.k > n)
        throw Error(ErrorKind::KExceedsTrainingSize, "k exceeds training-set size");
      std::vector<std::pair<double, std::size_t>> dist(n);
      for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        const Vec& p = model.knn_points[i];
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double d = x[j] - p[j];
          d2 += d * d;
        }
        dist[i] = {d2, i};  // ties resolve toward earlier training points
      }
      std::partial_sort(dist.begin(), dist.begin() + model.spec.k, dist.end());
      std::size_t bots = 0;
      for (std::size_t i = 0; i < model.spec.k; ++i) bots += model.knn_labels[dist[i].second];
      return static_cast<double>(bots) / static_cast<double>(model.spec.k);
    }
    case ClassifierKind::RandomForest:
      return model.forest.predict_bot_score(x);
    case ClassifierKind::SvmRbf:
      return classify_detail::logistic(model.svm.decision_value(x));
    case ClassifierKind::OneClassSvm:
      return classify_detail::logistic(model.ocsvm.anomaly_score(x));
    default:
      throw Error(ErrorKind::ConfigContradiction, "model kind cannot score feature vectors");
  }
}

inline bool predict_is_bot(const ClassifierModel& model, const FeatureVector& v) {
  return predict_bot_score(model, v) >= 0.5;
}

// --- serialization -----------------------------------------------------------

inline constexpr int kClassifierFormatVersion = 1;

inline nlohmann::json classifier_spec_to_json(const ClassifierSpec& s) {
  return nlohmann::json{{"kind", classifier_kind_string(s.kind)},
                        {"k", s.k},
                        {"n_trees", s.n_trees},
                        {"max_depth", s.max_depth},
                        {"svm_c", s.svm_c},
                        {"rbf_gamma", s.rbf_gamma},
                        {"ocsvm_nu", s.ocsvm_nu},
                        {"smo_tolerance", s.smo_tolerance},
                        {"smo_max_passes", s.smo_max_passes},
                        {"seed", s.seed}};
}

inline ClassifierSpec classifier_spec_from_json(const nlohmann::json& j) {
  ClassifierSpec s;
  s.kind = parse_classifier_kind(j["kind"].get<std::string>());
  s.k = j.value("k", s.k);
  s.n_trees = j.value("n_trees", s.n_trees);
  s.max_depth = j.value("max_depth", s.max_depth);
  s.svm_c = j.value("svm_c", s.svm_c);
  s.rbf_gamma = j.value("rbf_gamma", s.rbf_gamma);
  s.ocsvm_nu = j.value("ocsvm_nu", s.ocsvm_nu);
  s.smo_tolerance = j.value("smo_tolerance", s.smo_tolerance);
  s.smo_max_passes = j.value("smo_max_passes", s.smo_max_passes);
  s.seed = j.value("seed", s.seed);
  return s;
}

inline nlohmann::json classifier_to_json(const ClassifierModel& m) {
  nlohmann::json j;
  j["format_version"] = kClassifierFormatVersion;
  j["spec"] = classifier_spec_to_json(m.spec);
  j["mode"] = feature_mode_string(m.mode);
  j["standardizer"] = {{"mean", m.standardizer.mean()}, {"std", m.standardizer.stddev()}};
  switch (m.spec.kind) {
    case ClassifierKind::Knn:
      j["payload"] = {{"points", m.knn_points}, {"labels", m.knn_labels}};
      break;
    case ClassifierKind::RandomForest:
      j["payload"] = {{"trees", forest_to_json(m.forest)}};
      break;
    case ClassifierKind::SvmRbf:
      j["payload"] = {{"support_vectors", m.svm.support_vectors},
                      {"coefficients", m.svm.coefficients},
                      {"bias", m.svm.bias},
                      {"gamma", m.svm.gamma}};
      break;
    case ClassifierKind::OneClassSvm:
      j["payload"] = {{"support_vectors", m.ocsvm.support_vectors},
                      {"alphas", m.ocsvm.alphas},
                      {"rho", m.ocsvm.rho},
                      {"gamma", m.ocsvm.gamma}};
      break;
    default:
      throw Error(ErrorKind::ConfigContradiction, "cannot serialize this model kind");
  }
  return j;
}

inline ClassifierModel classifier_from_json(const nlohmann::json& j) {
  if (j.value("format_version", -1) != kClassifierFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "unsupported classifier format version");
  ClassifierModel m;
  m.spec = classifier_spec_from_json(j["spec"]);
  m.mode = j["mode"].get<std::string>() == "touch" ? FeatureMode::TouchOnly
                                                   : FeatureMode::TouchAccel;
  m.standardizer.set(m.mode, j["standardizer"]["mean"].get<Vec>(),
                     j["standardizer"]["std"].get<Vec>());
  const auto& p = j["payload"];
  switch (m.spec.kind) {
    case ClassifierKind::Knn:
      m.knn_points = p["points"].get<std::vector<Vec>>();
      m.knn_labels = p["labels"].get<std::vector<int>>();
      break;
    case ClassifierKind::RandomForest:
      m.forest = forest_from_json(p["trees"]);
      break;
    case ClassifierKind::SvmRbf:
      m.svm.support_vectors = p["support_vectors"].get<std::vector<Vec>>();
      m.svm.coefficients = p["coefficients"].get<Vec>();
      m.svm.bias = p["bias"].get<double>();
      m.svm.gamma = p["gamma"].get<double>();
      break;
    case ClassifierKind::OneClassSvm:
      m.ocsvm.support_vectors = p["support_vectors"].get<std::vector<Vec>>();
      m.ocsvm.alphas = p["alphas"].get<Vec>();
      m.ocsvm.rho = p["rho"].get<double>();
      m.ocsvm.gamma = p["gamma"].get<double>();
      break;
    default:
      break;
  }
  return m;
}

}  // namespace becaptcha
