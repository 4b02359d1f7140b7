// becaptcha command line: corpus ingestion, prior fitting, bot synthesis, GAN
// and classifier training, protocol evaluation, and the verify service.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "becaptcha/becaptcha.hpp"
#include "becaptcha/service.hpp"

using namespace becaptcha;
namespace fs = std::filesystem;

namespace {

struct GlobalArgs {
  std::uint64_t seed = 1;
  std::string config_path;
  TomlTable config;
};

void load_config(GlobalArgs& g) {
  if (!g.config_path.empty()) g.config = parse_toml_file(g.config_path);
}

GanConfig gan_config_from(const GlobalArgs& g) {
  GanConfig cfg;
  const TomlTable& t = g.config;
  cfg.seq_len = static_cast<std::size_t>(toml_number(t, "gan.seq_len", cfg.seq_len));
  auto sizes = toml_array(t, "gan.lstm_sizes", {});
  if (!sizes.empty()) {
    cfg.lstm_sizes.clear();
    for (double s : sizes) cfg.lstm_sizes.push_back(static_cast<std::size_t>(s));
  }
  cfg.noise_std = toml_number(t, "gan.noise_std", cfg.noise_std);
  cfg.learning_rate = toml_number(t, "gan.learning_rate", cfg.learning_rate);
  cfg.beta1 = toml_number(t, "gan.beta1", cfg.beta1);
  cfg.beta2 = toml_number(t, "gan.beta2", cfg.beta2);
  cfg.epsilon = toml_number(t, "gan.epsilon", cfg.epsilon);
  cfg.epochs = static_cast<std::size_t>(toml_number(t, "gan.epochs", cfg.epochs));
  cfg.batch_size = static_cast<std::size_t>(toml_number(t, "gan.batch_size", cfg.batch_size));
  cfg.reconstruction_objective =
      toml_bool(t, "gan.reconstruction_objective", cfg.reconstruction_objective);
  cfg.freeze_generator = toml_bool(t, "gan.freeze_generator", cfg.freeze_generator);
  cfg.seed = g.seed;
  return cfg;
}

ClassifierSpec classifier_spec_from(const GlobalArgs& g, const std::string& kind) {
  ClassifierSpec spec;
  spec.kind = parse_classifier_kind(kind);
  const TomlTable& t = g.config;
  spec.k = static_cast<std::size_t>(toml_number(t, "classifier.k", spec.k));
  spec.n_trees = static_cast<std::size_t>(toml_number(t, "classifier.n_trees", spec.n_trees));
  spec.max_depth = static_cast<int>(toml_number(t, "classifier.max_depth", spec.max_depth));
  spec.svm_c = toml_number(t, "classifier.svm_c", spec.svm_c);
  spec.rbf_gamma = toml_number(t, "classifier.rbf_gamma", spec.rbf_gamma);
  spec.ocsvm_nu = toml_number(t, "classifier.ocsvm_nu", spec.ocsvm_nu);
  spec.seed = g.seed;
  return spec;
}

Corpus load_corpus(const std::string& path, bool warn = true) {
  IngestReport rep = ingest_corpus(path);
  if (warn)
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  return std::move(rep.corpus);
}

std::vector<BotSource> parse_sources(const std::string& csv) {
  std::vector<BotSource> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    const std::string item = csv.substr(pos, comma - pos);
    if (item == "handcrafted") out.push_back(BotSource::Handcrafted);
    else if (item == "gan") out.push_back(BotSource::Gan);
    else if (!item.empty())
      throw Error(ErrorKind::InvalidConfig, "unknown bot source '" + item + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<FeatureVector> corpus_features(const Corpus& corpus, FeatureMode mode) {
  std::vector<FeatureVector> out;
  std::size_t skipped = 0;
  for (const auto& s : corpus.samples) {
    try {
      out.push_back(extract_features(s, mode));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::ZeroDistance) throw;
      ++skipped;
    }
  }
  if (skipped > 0)
    std::cerr << "warning: skipped " << skipped << " zero-length swipes\n";
  return out;
}

int cmd_ingest(const GlobalArgs&, const std::string& root, const std::string& format,
               const std::string& out, double accel_pad) {
  IngestOptions opts;
  opts.accel_pad_s = accel_pad;
  const CorpusFormat fmt =
      format == "humidb" ? CorpusFormat::HumidbAdapter : CorpusFormat::Canonical;
  IngestReport rep = ingest_corpus(root, fmt, opts);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  write_canonical_corpus(rep.corpus, out);
  std::cout << "ingested " << rep.corpus.size() << " samples (" << rep.warnings.size()
            << " warnings) -> " << out << "\n";
  return 0;
}

int cmd_fit_prior(const GlobalArgs&, const std::string& corpus_path, const std::string& out,
                  std::size_t grid) {
  Corpus corpus = load_corpus(corpus_path);
  PriorFitResult fit = fit_prior(corpus, grid);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::MissingPath, "cannot write " + out);
  f << prior_to_json(fit.prior).dump(2) << "\n";
  std::cout << "fitted prior on " << corpus.size() << " samples -> " << out << "\n";
  return 0;
}

int cmd_synth(const GlobalArgs& g, const std::string& method, std::size_t count,
              const std::string& prior_path, const std::string& model_path,
              const std::string& accel_model_path, const std::string& corpus_path,
              const std::string& profile, const std::string& out) {
  Corpus bots;
  if (method == "handcrafted") {
    if (prior_path.empty())
      throw Error(ErrorKind::InvalidConfig, "--method handcrafted requires --prior");
    std::ifstream f(prior_path);
    if (!f) throw Error(ErrorKind::MissingPath, prior_path);
    HumanSwipePrior prior = prior_from_json(nlohmann::json::parse(f));
    HandcraftedOptions opts;
    opts.profile = profile == "slow" ? VelocityProfile::SlowStart : VelocityProfile::FastStart;
    Rng root(g.seed);
    for (std::size_t i = 0; i < count; ++i)
      bots.samples.push_back(synth_handcrafted_sample(prior, root.child(i).seed(), opts));
  } else if (method == "gan") {
    if (model_path.empty() || accel_model_path.empty() || corpus_path.empty())
      throw Error(ErrorKind::InvalidConfig,
                  "--method gan requires --model, --accel-model, and --corpus "
                  "(the generator consumes human sequences)");
    auto read_model = [](const std::string& p) {
      std::ifstream f(p);
      if (!f) throw Error(ErrorKind::MissingPath, p);
      return gan_from_json(nlohmann::json::parse(f));
    };
    GanModel touch_model = read_model(model_path);
    GanModel accel_model = read_model(accel_model_path);
    Corpus humans = load_corpus(corpus_path);
    Rng root(g.seed);
    for (std::size_t i = 0; i < count; ++i) {
      const SwipeSample& h = humans.samples[root.uniform_index(humans.size())];
      bots.samples.push_back(synth_gan_sample(touch_model, accel_model, h, root.child(i).seed()));
    }
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown synthesis method '" + method + "'");
  }
  write_canonical_corpus(bots, out);
  std::cout << "synthesized " << bots.size() << " " << method << " samples -> " << out << "\n";
  return 0;
}

int cmd_train_gan(const GlobalArgs& g, const std::string& modality,
                  const std::string& corpus_path, const std::string& out) {
  GanConfig cfg = gan_config_from(g);
  Corpus humans = load_corpus(corpus_path);
  const GanModality m = modality == "accel" ? GanModality::Accel : GanModality::Touch;
  GanModel model = train_gan(humans, m, cfg);
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::MissingPath, "cannot write " + out);
  f << gan_to_json(model).dump() << "\n";
  const auto& log = model.training_log;
  std::cout << "trained " << modality << " GAN for " << log.size()
            << " epochs (final d_loss=" << log.back().discriminator
            << " g_loss=" << log.back().generator << ") -> " << out << "\n";
  return 0;
}

int cmd_train_clf(const GlobalArgs& g, const std::string& kind, const std::string& human_path,
                  const std::vector<std::string>& bot_paths, const std::string& modality,
                  const std::string& fusion, double tau, const std::string& out) {
  ClassifierSpec spec = classifier_spec_from(g, kind);
  Corpus humans = load_corpus(human_path);
  std::vector<Corpus> bots;
  for (const auto& p : bot_paths) bots.push_back(load_corpus(p));

  const FeatureMode mode = modality == "touch" ? FeatureMode::TouchOnly : FeatureMode::TouchAccel;
  auto collect = [&](FeatureMode m) {
    std::vector<FeatureVector> feats = corpus_features(humans, m);
    for (const auto& b : bots) {
      auto bf = corpus_features(b, m);
      feats.insert(feats.end(), bf.begin(), bf.end());
    }
    return feats;
  };

  ModelBundle bundle;
  bundle.tau = tau;
  bundle.fusion_mode = parse_fusion_mode(fusion);

  if (spec.kind == ClassifierKind::OneClassSvm) {
    auto humans_only = corpus_features(humans, mode);
    ClassifierModel model = train_one_class(humans_only, spec);
    (mode == FeatureMode::TouchOnly ? bundle.touch_model : bundle.fused_model) = model;
    bundle.fusion_mode = FusionMode::FeatureConcat;
  } else if (bundle.fusion_mode == FusionMode::ScoreMean) {
    if (bot_paths.empty())
      throw Error(ErrorKind::InvalidConfig, "binary training needs at least one --bots corpus");
    bundle.touch_model = train_classifier(spec, collect(FeatureMode::TouchOnly));
    bundle.fused_model = train_classifier(spec, collect(FeatureMode::TouchAccel));
  } else {
    if (bot_paths.empty())
      throw Error(ErrorKind::InvalidConfig, "binary training needs at least one --bots corpus");
    ClassifierModel model = train_classifier(spec, collect(mode));
    (mode == FeatureMode::TouchOnly ? bundle.touch_model : bundle.fused_model) = model;
  }

  bundle.model_version = std::string("becaptcha-") + kVersion + "-" + kind;
  save_bundle(bundle, out);
  std::cout << "trained " << kind << " bundle (" << fusion_mode_string(bundle.fusion_mode)
            << ", tau=" << bundle.tau << ") -> " << out << "\n";
  return 0;
}

EvalConfig eval_config_from(const GlobalArgs& g, const std::string& scenario,
                            const std::string& modality, std::size_t m, std::size_t reps,
                            bool tune, const std::string& bot_train,
                            const std::string& bot_test) {
  EvalConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  cfg.modality = modality == "touch" ? FeatureMode::TouchOnly : FeatureMode::TouchAccel;
  cfg.total_train_m = m;
  cfg.repetitions = reps;
  cfg.seed = g.seed;
  cfg.tune_hyperparameters = tune || toml_bool(g.config, "eval.tune", false);
  cfg.train_fraction = toml_number(g.config, "eval.train_fraction", cfg.train_fraction);
  cfg.dev_fraction_of_train =
      toml_number(g.config, "eval.dev_fraction", cfg.dev_fraction_of_train);
  cfg.gan = gan_config_from(g);
  if (cfg.scenario == Scenario::OneClass || cfg.scenario == Scenario::GanDiscriminatorEval)
    cfg.bot_sources_train = {};
  else if (!bot_train.empty())
    cfg.bot_sources_train = parse_sources(bot_train);
  if (!bot_test.empty()) cfg.bot_sources_test = parse_sources(bot_test);
  if (cfg.scenario == Scenario::Multiclass && bot_test.empty() && !bot_train.empty())
    cfg.bot_sources_test = cfg.bot_sources_train;
  if (cfg.scenario == Scenario::Multiclass && bot_train.empty() && !bot_test.empty())
    cfg.bot_sources_train = cfg.bot_sources_test;
  return cfg;
}

int cmd_eval(const GlobalArgs& g, const std::string& scenario, const std::string& classifier,
             const std::string& modality, const std::string& human_path,
             const std::string& handcrafted_path, const std::string& gan_path, std::size_t m,
             std::size_t reps, bool tune, const std::string& bot_train,
             const std::string& bot_test, const std::string& out) {
  EvalConfig cfg = eval_config_from(g, scenario, modality, m, reps, tune, bot_train, bot_test);
  ClassifierSpec spec = classifier_spec_from(g, classifier);
  Corpus humans = load_corpus(human_path);
  Corpus handcrafted = handcrafted_path.empty() ? Corpus{} : load_corpus(handcrafted_path);
  Corpus gan = gan_path.empty() ? Corpus{} : load_corpus(gan_path);

  EvalReport report = run_scenario(humans, handcrafted, gan, spec, cfg);
  report.print_table(std::cout);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error(ErrorKind::MissingPath, "cannot write " + out);
    f << report.to_json().dump(2) << "\n";
    std::cout << "report -> " << out << "\n";
  }
  return 0;
}

int cmd_ablate(const GlobalArgs& g, const std::string& scenario, const std::string& classifier,
               const std::string& modality, const std::string& human_path,
               const std::string& handcrafted_path, const std::string& gan_path,
               const std::vector<std::size_t>& grid, std::size_t reps,
               const std::string& bot_train, const std::string& bot_test,
               const std::string& out) {
  EvalConfig cfg = eval_config_from(g, scenario, modality, 70, reps, false, bot_train, bot_test);
  ClassifierSpec spec = classifier_spec_from(g, classifier);
  Corpus humans = load_corpus(human_path);
  Corpus handcrafted = handcrafted_path.empty() ? Corpus{} : load_corpus(handcrafted_path);
  Corpus gan = gan_path.empty() ? Corpus{} : load_corpus(gan_path);

  const std::vector<std::size_t> m_values = grid.empty() ? default_ablation_grid() : grid;
  auto points = ablation_curve(humans, handcrafted, gan, spec, cfg, m_values);

  std::ostringstream csv;
  csv << "M,mean_acc,std_acc,available\n";
  for (const auto& p : points) {
    csv << p.total_train_m << ",";
    if (p.available)
      csv << p.mean_acc << "," << p.std_acc << ",1\n";
    else
      csv << ",,0\n";
    std::cout << "M=" << p.total_train_m << "  "
              << (p.available ? "acc=" + std::to_string(p.mean_acc) : "insufficient samples")
              << "\n";
  }
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error(ErrorKind::MissingPath, "cannot write " + out);
    f << csv.str();
    std::cout << "curve -> " << out << "\n";
  }
  return 0;
}

int cmd_report(const GlobalArgs&, const std::string& human_path,
               const std::string& handcrafted_path, const std::string& gan_path,
               std::size_t bins, const std::string& out) {
  std::vector<std::pair<std::string, const Corpus*>> sources;
  Corpus humans, handcrafted, gan;
  if (!human_path.empty()) {
    humans = load_corpus(human_path);
    sources.emplace_back("human", &humans);
  }
  if (!handcrafted_path.empty()) {
    handcrafted = load_corpus(handcrafted_path);
    sources.emplace_back("handcrafted", &handcrafted);
  }
  if (!gan_path.empty()) {
    gan = load_corpus(gan_path);
    sources.emplace_back("gan", &gan);
  }
  if (sources.empty()) throw Error(ErrorKind::InvalidConfig, "no corpora given");

  auto hists = feature_distribution_report(sources, bins);
  std::ofstream f(out);
  if (!f) throw Error(ErrorKind::MissingPath, "cannot write " + out);
  write_histograms_csv(hists, f);
  std::cout << "wrote " << hists.size() << " histograms -> " << out << "\n";
  return 0;
}

int cmd_verify(const GlobalArgs&, const std::string& bundle_path,
               const std::string& request_path) {
  ModelBundle bundle = load_bundle(bundle_path);
  nlohmann::json body;
  try {
    if (request_path.empty() || request_path == "-") {
      body = nlohmann::json::parse(std::cin);
    } else {
      std::ifstream f(request_path);
      if (!f) throw Error(ErrorKind::MissingPath, request_path);
      body = nlohmann::json::parse(f);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::MalformedRequest, std::string("bad request JSON: ") + e.what());
  }
  const VerifyResponse resp = verify(bundle, parse_verify_request(body));
  std::cout << resp.to_json().dump() << "\n";
  return 0;
}

int cmd_serve(const GlobalArgs&, const std::string& bundle_path, const std::string& host,
              int port) {
  auto bundle = std::make_shared<const ModelBundle>(load_bundle(bundle_path));
  std::cerr << "serving " << bundle->model_version << " on " << host << ":" << port << "\n";
  return run_service(std::move(bundle), host, port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"behavioral bot detection for swipe + accelerometer traces"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--seed", g.seed, "seed for every stochastic step");
  app.add_option("--config", g.config_path, "TOML config file");

  // ingest
  std::string in_root, in_format = "canonical", in_out = "corpus.jsonl";
  double in_pad = 0.0;
  auto* ingest = app.add_subcommand("ingest", "read raw or canonical traces into a corpus");
  ingest->add_option("--root", in_root, "corpus root or .jsonl file")->required();
  ingest->add_option("--format", in_format, "canonical|humidb")
      ->check(CLI::IsMember({"canonical", "humidb"}));
  ingest->add_option("--out", in_out, "output corpus path");
  ingest->add_option("--accel-pad", in_pad, "accel crop pad in seconds");

  // fit-prior
  std::string fp_corpus, fp_out = "prior.json";
  std::size_t fp_grid = 20;
  auto* fitp = app.add_subcommand("fit-prior", "fit the human swipe prior");
  fitp->add_option("--corpus", fp_corpus, "human corpus (jsonl)")->required();
  fitp->add_option("--out", fp_out, "output prior path");
  fitp->add_option("--grid", fp_grid, "start-point histogram resolution");

  // synth
  std::string sy_method, sy_prior, sy_model, sy_accel_model, sy_corpus, sy_profile = "fast";
  std::string sy_out = "bots.jsonl";
  std::size_t sy_count = 100;
  auto* synth = app.add_subcommand("synth", "generate bot samples");
  synth->add_option("--method", sy_method, "handcrafted|gan")
      ->required()
      ->check(CLI::IsMember({"handcrafted", "gan"}));
  synth->add_option("--count", sy_count, "number of samples");
  synth->add_option("--prior", sy_prior, "prior.json (handcrafted)");
  synth->add_option("--model", sy_model, "touch GAN model.json (gan)");
  synth->add_option("--accel-model", sy_accel_model, "accel GAN model.json (gan)");
  synth->add_option("--corpus", sy_corpus, "human corpus driving the generator (gan)");
  synth->add_option("--profile", sy_profile, "fast|slow start velocity profile")
      ->check(CLI::IsMember({"fast", "slow"}));
  synth->add_option("--out", sy_out, "output corpus path");

  // train-gan
  std::string tg_modality, tg_corpus, tg_out = "model.json";
  auto* tgan = app.add_subcommand("train-gan", "adversarially train a sequence model");
  tgan->add_option("--modality", tg_modality, "touch|accel")
      ->required()
      ->check(CLI::IsMember({"touch", "accel"}));
  tgan->add_option("--corpus", tg_corpus, "human corpus (jsonl)")->required();
  tgan->add_option("--out", tg_out, "output model path");

  // train-clf
  std::string tc_kind, tc_human, tc_modality = "touch_accel", tc_fusion = "concat";
  std::string tc_out = "bundle.json";
  std::vector<std::string> tc_bots;
  double tc_tau = 0.5;
  auto* tclf = app.add_subcommand("train-clf", "train a classifier bundle");
  tclf->add_option("--kind", tc_kind, "knn|rf|svm|ocsvm")
      ->required()
      ->check(CLI::IsMember({"knn", "rf", "svm", "ocsvm"}));
  tclf->add_option("--human", tc_human, "human corpus")->required();
  tclf->add_option("--bots", tc_bots, "bot corpus (repeatable)");
  tclf->add_option("--modality", tc_modality, "touch|touch_accel")
      ->check(CLI::IsMember({"touch", "touch_accel"}));
  tclf->add_option("--fusion", tc_fusion, "concat|mean")
      ->check(CLI::IsMember({"concat", "mean"}));
  tclf->add_option("--tau", tc_tau, "decision threshold");
  tclf->add_option("--out", tc_out, "output bundle path");

  // eval
  std::string ev_scenario, ev_classifier, ev_modality = "touch";
  std::string ev_human, ev_handcrafted, ev_gan, ev_bot_train, ev_bot_test, ev_out;
  std::size_t ev_m = 1000, ev_reps = 5;
  bool ev_tune = false;
  auto* eval_cmd = app.add_subcommand("eval", "run one evaluation scenario");
  eval_cmd->add_option("--scenario", ev_scenario, "multiclass|agnostic|oneclass|gandisc")
      ->required();
  eval_cmd->add_option("--classifier", ev_classifier, "knn|rf|svm|ocsvm|gandisc")->required();
  eval_cmd->add_option("--modality", ev_modality, "touch|touch_accel")
      ->check(CLI::IsMember({"touch", "touch_accel"}));
  eval_cmd->add_option("--human", ev_human, "human corpus")->required();
  eval_cmd->add_option("--handcrafted", ev_handcrafted, "handcrafted bot corpus");
  eval_cmd->add_option("--gan", ev_gan, "gan bot corpus");
  eval_cmd->add_option("--M", ev_m, "total training samples (even)");
  eval_cmd->add_option("--reps", ev_reps, "repetitions");
  eval_cmd->add_flag("--tune", ev_tune, "sweep the hyperparameter grid on dev/val");
  eval_cmd->add_option("--bot-train", ev_bot_train, "train bot sources, e.g. handcrafted,gan");
  eval_cmd->add_option("--bot-test", ev_bot_test, "test bot sources");
  eval_cmd->add_option("--out", ev_out, "JSON report path");

  // ablate
  std::string ab_scenario = "multiclass", ab_classifier = "rf", ab_modality = "touch";
  std::string ab_human, ab_handcrafted, ab_gan, ab_bot_train, ab_bot_test, ab_out;
  std::vector<std::size_t> ab_grid;
  std::size_t ab_reps = 5;
  auto* ablate = app.add_subcommand("ablate", "accuracy against training-set size");
  ablate->add_option("--scenario", ab_scenario, "multiclass|agnostic");
  ablate->add_option("--classifier", ab_classifier, "knn|rf|svm");
  ablate->add_option("--modality", ab_modality, "touch|touch_accel");
  ablate->add_option("--human", ab_human, "human corpus")->required();
  ablate->add_option("--handcrafted", ab_handcrafted, "handcrafted bot corpus");
  ablate->add_option("--gan", ab_gan, "gan bot corpus");
  ablate->add_option("--grid", ab_grid, "M values (default 70..1400 in 8 steps)");
  ablate->add_option("--reps", ab_reps, "repetitions per point");
  ablate->add_option("--bot-train", ab_bot_train, "train bot sources");
  ablate->add_option("--bot-test", ab_bot_test, "test bot sources");
  ablate->add_option("--out", ab_out, "CSV output path");

  // report
  std::string rp_human, rp_handcrafted, rp_gan, rp_out = "histograms.csv";
  std::size_t rp_bins = 50;
  auto* report = app.add_subcommand("report", "per-feature distribution histograms");
  report->add_option("--human", rp_human, "human corpus");
  report->add_option("--handcrafted", rp_handcrafted, "handcrafted bot corpus");
  report->add_option("--gan", rp_gan, "gan bot corpus");
  report->add_option("--bins", rp_bins, "histogram bins");
  report->add_option("--out", rp_out, "CSV output path");

  // verify
  std::string vf_bundle, vf_request;
  auto* verify_cmd = app.add_subcommand("verify", "score one request against a bundle");
  verify_cmd->add_option("--bundle", vf_bundle, "bundle.json")->required();
  verify_cmd->add_option("--request", vf_request, "request JSON file (default stdin)");

  // serve
  std::string sv_bundle, sv_host = "0.0.0.0";
  int sv_port = 8077;
  auto* serve = app.add_subcommand("serve", "HTTP verify service");
  serve->add_option("--bundle", sv_bundle, "bundle.json")->required();
  serve->add_option("--host", sv_host, "bind address");
  serve->add_option("--port", sv_port, "TCP port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    load_config(g);
    if (ingest->parsed()) return cmd_ingest(g, in_root, in_format, in_out, in_pad);
    if (fitp->parsed()) return cmd_fit_prior(g, fp_corpus, fp_out, fp_grid);
    if (synth->parsed())
      return cmd_synth(g, sy_method, sy_count, sy_prior, sy_model, sy_accel_model, sy_corpus,
                       sy_profile, sy_out);
    if (tgan->parsed()) return cmd_train_gan(g, tg_modality, tg_corpus, tg_out);
    if (tclf->parsed())
      return cmd_train_clf(g, tc_kind, tc_human, tc_bots, tc_modality, tc_fusion, tc_tau,
                           tc_out);
    if (eval_cmd->parsed())
      return cmd_eval(g, ev_scenario, ev_classifier, ev_modality, ev_human, ev_handcrafted,
                      ev_gan, ev_m, ev_reps, ev_tune, ev_bot_train, ev_bot_test, ev_out);
    if (ablate->parsed())
      return cmd_ablate(g, ab_scenario, ab_classifier, ab_modality, ab_human, ab_handcrafted,
                        ab_gan, ab_grid, ab_reps, ab_bot_train, ab_bot_test, ab_out);
    if (report->parsed()) return cmd_report(g, rp_human, rp_handcrafted, rp_gan, rp_bins, rp_out);
    if (verify_cmd->parsed()) return cmd_verify(g, vf_bundle, vf_request);
    if (serve->parsed()) return cmd_serve(g, sv_bundle, sv_host, sv_port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
