#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/net.hpp"
#include "becaptcha/rng.hpp"
#include "becaptcha/synth_hand.hpp"
#include "becaptcha/trace.hpp"

namespace becaptcha {

enum class GanModality { Touch, Accel };

inline std::size_t gan_channels(GanModality m) { return m == GanModality::Touch ? 2u : 3u; }

struct GanConfig {
  std::size_t seq_len = 32;
  std::vector<std::size_t> lstm_sizes = {32, 16};
  double noise_std = 0.1;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  // Generator objective: MSE between the frozen discriminator's score on the
  // generated sequence and 1. The reconstruction flag swaps that for plain
  // MSE against the (clean) input sequence.
  bool reconstruction_objective = false;
  bool freeze_generator = false;

  void validate() const {
    if (seq_len < 2 || epochs < 1 || batch_size < 1 || learning_rate <= 0.0 ||
        noise_std < 0.0 || lstm_sizes.empty() || lstm_sizes.size() > 2)
      throw Error(ErrorKind::InvalidConfig, "bad GAN config");
  }
};

struct ChannelScaling {
  double mean = 0.0;
  double stddev = 1.0;
};

struct EpochLoss {
  double discriminator = 0.0;
  double generator = 0.0;
};

// Adversarially trained generator/discriminator pair over fixed-length
// sequences: 2 channels for touch coordinates, 3 for accelerometer axes.
struct GanModel {
  GanModality modality = GanModality::Touch;
  GanConfig config;
  SequenceNet generator;      // linear per-timestep head, d_out = channels
  SequenceNet discriminator;  // sigmoid scalar head
  std::vector<ChannelScaling> scaling;  // per channel, identity for touch
  Gaussian1D duration;                  // human swipe duration moments
  std::vector<EpochLoss> training_log;
  bool trained = false;

  std::size_t channels() const { return gan_channels(modality); }

  void require_trained() const {
    if (!trained) throw Error(ErrorKind::UntrainedModel, "GAN model is not trained");
  }
};

// Sequence preparation: resample every sample of the corpus to T steps and,
// for accelerometer data, z-score each channel over the training set. The
// scaling and the duration moments ride along in the model so generation and
// scoring can undo them.
struct SequencePrep {
  std::vector<Mat> seqs;
  std::vector<ChannelScaling> scaling;
  Gaussian1D duration;
};

inline SequencePrep prepare_sequences(const Corpus& corpus, GanModality modality,
                                      std::size_t seq_len) {
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no samples to prepare");
  SequencePrep prep;
  const std::size_t ch = gan_channels(modality);
  prep.scaling.assign(ch, ChannelScaling{});

  std::vector<double> durations;
  for (const auto& s : corpus.samples) {
    durations.push_back(s.touch.duration());
    prep.seqs.push_back(modality == GanModality::Touch ? resample_to_length(s.touch, seq_len)
                                                       : resample_to_length(s.accel, seq_len));
  }
  prep.duration = detail::population_gaussian(durations);
  if (prep.duration.stddev < 1e-6) prep.duration.stddev = 1e-6;

  if (modality == GanModality::Accel) {
    const double n = static_cast<double>(prep.seqs.size() * seq_len);
    for (std::size_t c = 0; c < ch; ++c) {
      double sum = 0.0;
      for (const auto& m : prep.seqs)
        for (std::size_t t = 0; t < seq_len; ++t) sum += m(t, c);
      const double mean = sum / n;
      double var = 0.0;
      for (const auto& m : prep.seqs)
        for (std::size_t t = 0; t < seq_len; ++t) var += (m(t, c) - mean) * (m(t, c) - mean);
      prep.scaling[c] = {mean, std::max(std::sqrt(var / n), 1e-9)};
    }
    for (auto& m : prep.seqs)
      for (std::size_t t = 0; t < seq_len; ++t)
        for (std::size_t c = 0; c < ch; ++c)
          m(t, c) = (m(t, c) - prep.scaling[c].mean) / prep.scaling[c].stddev;
  }
  return prep;
}

namespace detail {

inline Mat add_input_noise(const Mat& seq, double noise_std, Rng& rng) {
  Mat out = seq;
  if (noise_std > 0.0)
    for (double& v : out.v) v += rng.normal(0.0, noise_std);
  return out;
}

}  // namespace detail

// A generator whose LSTM stack is zeroed and whose dense head emits a
// constant; handy for discriminator-only experiments.
inline SequenceNet make_constant_generator(std::size_t channels,
                                           const std::vector<std::size_t>& lstm_sizes,
                                           double constant) {
  SequenceNet g = make_sequence_net(channels, lstm_sizes, channels,
                                    OutputActivation::Linear, 0,
                                    NetInitOptions{0.0, 0.0});
  Vec p = g.get_params();
  std::fill(p.begin(), p.end(), 0.0);
  // dense bias occupies the tail of the flattened parameter order
  for (std::size_t i = p.size() - channels; i < p.size(); ++i) p[i] = constant;
  g.set_params(p);
  return g;
}

// Alternating per-batch updates. Discriminator: BCE, real sequences toward 1
// and generated ones toward 0. Generator: MSE pushing the (frozen)
// discriminator's score on generated sequences toward 1. Generator input is
// the human sequence corrupted with i.i.d. Gaussian noise.
inline GanModel train_gan(const std::vector<Mat>& human_seqs, GanModality modality,
                          const GanConfig& config, std::vector<ChannelScaling> scaling = {},
                          Gaussian1D duration = {0.5, 0.1}) {
  config.validate();
  if (human_seqs.size() < config.batch_size)
    throw Error(ErrorKind::InsufficientData,
                "need at least one full batch of training sequences");
  const std::size_t ch = gan_channels(modality);
  for (const auto& m : human_seqs)
    if (m.rows != config.seq_len || m.cols != ch)
      throw Error(ErrorKind::ShapeMismatch, "training sequence has wrong shape");

  GanModel model;
  model.modality = modality;
  model.config = config;
  model.scaling = scaling.empty() ? std::vector<ChannelScaling>(ch) : std::move(scaling);
  model.duration = duration;

  Rng master(config.seed);
  Rng init_rng = master.child(1);
  Rng shuffle_rng = master.child(2);
  Rng noise_rng = master.child(3);

  model.generator = make_sequence_net(ch, config.lstm_sizes, ch, OutputActivation::Linear,
                                      init_rng.next_u64());
  model.discriminator = make_sequence_net(ch, config.lstm_sizes, 1, OutputActivation::Sigmoid,
                                          init_rng.next_u64());
  if (config.freeze_generator)
    model.generator = make_constant_generator(ch, config.lstm_sizes, 0.1);

  const AdamConfig adam_cfg{config.learning_rate, config.beta1, config.beta2, config.epsilon};
  AdamState d_state(model.discriminator.num_params(), adam_cfg);
  AdamState g_state(model.generator.num_params(), adam_cfg);

  std::vector<std::size_t> order(human_seqs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches = human_seqs.size() / config.batch_size;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the dedicated stream keeps epochs reproducible.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_index(i)]);

    EpochLoss ep{};
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t* idx = &order[b * config.batch_size];

      // discriminator step: real toward 1, generated toward 0
      NetGradients d_grads = detail::make_zero_grads(model.discriminator, config.seq_len);
      double d_loss = 0.0;
      std::vector<Mat> generated(config.batch_size);
      for (std::size_t s = 0; s < config.batch_size; ++s) {
        const Mat& real = human_seqs[idx[s]];
        Mat noisy = detail::add_input_noise(real, config.noise_std, noise_rng);
        generated[s] = net_forward(model.generator, noisy).seq;

        auto fr = net_forward(model.discriminator, real);
        auto lr = compute_loss(LossKind::Bce, fr.scalar, 1.0);
        d_grads.accumulate(net_backward(model.discriminator, fr.cache, lr.grad));

        auto ff = net_forward(model.discriminator, generated[s]);
        auto lf = compute_loss(LossKind::Bce, ff.scalar, 0.0);
        d_grads.accumulate(net_backward(model.discriminator, ff.cache, lf.grad));

        d_loss += 0.5 * (lr.value + lf.value);
      }
      d_loss /= static_cast<double>(config.batch_size);
      d_grads.scale(1.0 / (2.0 * static_cast<double>(config.batch_size)));
      const std::uint64_t g_hash_before_d = b == 0 ? param_hash(model.generator) : 0;
      adam_step(model.discriminator, d_grads, d_state);
      if (b == 0 && param_hash(model.generator) != g_hash_before_d)
        throw std::logic_error("generator moved during discriminator step");

      // generator step: discriminator frozen, gradients flow through it
      const std::uint64_t d_hash_before_g = b == 0 ? param_hash(model.discriminator) : 0;
      NetGradients g_grads = detail::make_zero_grads(model.generator, config.seq_len);
      double g_loss = 0.0;
      for (std::size_t s = 0; s < config.batch_size; ++s) {
        const Mat& real = human_seqs[idx[s]];
        Mat noisy = detail::add_input_noise(real, config.noise_std, noise_rng);
        auto gen = net_forward(model.generator, noisy);

        if (config.reconstruction_objective) {
          auto loss = compute_loss(LossKind::Mse, gen.seq, real);
          g_loss += loss.value;
          g_grads.accumulate(net_backward(model.generator, gen.cache, loss.grad));
        } else {
          auto score = net_forward(model.discriminator, gen.seq);
          auto loss = compute_loss(LossKind::Mse, score.scalar, 1.0);
          g_loss += loss.value;
          NetGradients through_d =
              net_backward(model.discriminator, score.cache, loss.grad);
          g_grads.accumulate(net_backward(model.generator, gen.cache, through_d.input));
        }
      }
      g_loss /= static_cast<double>(config.batch_size);
      if (!config.freeze_generator) {
        g_grads.scale(1.0 / static_cast<double>(config.batch_size));
        adam_step(model.generator, g_grads, g_state);
      }
      if (b == 0 && param_hash(model.discriminator) != d_hash_before_g)
        throw std::logic_error("discriminator moved during generator step");

      if (!std::isfinite(d_loss) || !std::isfinite(g_loss))
        throw Error(ErrorKind::NonFiniteLoss,
                    "non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                        std::to_string(b));
      ep.discriminator += d_loss;
      ep.generator += g_loss;
    }
    ep.discriminator /= static_cast<double>(batches);
    ep.generator /= static_cast<double>(batches);
    model.training_log.push_back(ep);
  }

  model.trained = true;
  return model;
}

inline GanModel train_gan(const Corpus& human_corpus, GanModality modality,
                          const GanConfig& config) {
  SequencePrep prep = prepare_sequences(human_corpus, modality, config.seq_len);
  return train_gan(prep.seqs, modality, config, prep.scaling, prep.duration);
}

// One generator pass on (human sequence + noise). Touch outputs are clamped
// to the unit square; accel outputs stay in z-scored units.
inline Mat gan_generate(const GanModel& model, const Mat& human_seq, std::uint64_t rng_seed) {
  model.require_trained();
  if (human_seq.rows != model.config.seq_len || human_seq.cols != model.channels())
    throw Error(ErrorKind::ShapeMismatch, "generator input has wrong shape");
  Rng rng(rng_seed);
  Mat noisy = detail::add_input_noise(human_seq, model.config.noise_std, rng);
  Mat out = net_forward(model.generator, noisy).seq;
  if (model.modality == GanModality::Touch)
    for (double& v : out.v) v = std::clamp(v, 0.0, 1.0);
  return out;
}

// Human-likeness score in (0,1); below 0.5 reads as bot.
inline double discriminator_score(const GanModel& model, const Mat& seq) {
  model.require_trained();
  if (seq.rows != model.config.seq_len || seq.cols != model.channels())
    throw Error(ErrorKind::ShapeMismatch, "discriminator input has wrong shape");
  return net_forward(model.discriminator, seq).scalar;
}

// Z-scores a resampled accel sequence with the model's training scaling.
inline Mat apply_channel_scaling(const GanModel& model, Mat seq) {
  for (std::size_t t = 0; t < seq.rows; ++t)
    for (std::size_t c = 0; c < seq.cols; ++c)
      seq(t, c) = (seq(t, c) - model.scaling[c].mean) / model.scaling[c].stddev;
  return seq;
}

inline double discriminator_score_sample(const GanModel& model, const SwipeSample& sample) {
  if (model.modality == GanModality::Touch)
    return discriminator_score(model, resample_to_length(sample.touch, model.config.seq_len));
  Mat seq = resample_to_length(sample.accel, model.config.seq_len);
  return discriminator_score(model, apply_channel_scaling(model, seq));
}

// Synthetic touch trace from the generator; timestamps are uniform over a
// duration drawn from the human duration Gaussian.
inline TouchTrace gan_generate_touch(const GanModel& model, const Mat& human_seq,
                                     std::uint64_t rng_seed) {
  if (model.modality != GanModality::Touch)
    throw Error(ErrorKind::ShapeMismatch, "touch generation needs a touch model");
  Mat out = gan_generate(model, human_seq, rng_seed);
  Rng rng = Rng(rng_seed).child(0xD0);
  const double duration = detail::sample_positive_duration(model.duration, rng);
  TouchTrace trace;
  trace.points.resize(out.rows);
  for (std::size_t t = 0; t < out.rows; ++t) {
    trace.points[t].x = out(t, 0);
    trace.points[t].y = out(t, 1);
    trace.points[t].t = duration * static_cast<double>(t) / static_cast<double>(out.rows - 1);
  }
  trace.points.front().t = 0.0;
  return trace;
}

inline AccelTrace gan_generate_accel(const GanModel& model, const Mat& human_seq,
                                     std::uint64_t rng_seed, double duration_s) {
  if (model.modality != GanModality::Accel)
    throw Error(ErrorKind::ShapeMismatch, "accel generation needs an accel model");
  if (duration_s <= 0.0) throw Error(ErrorKind::NonPositiveDuration, "accel duration");
  Mat out = gan_generate(model, human_seq, rng_seed);
  AccelTrace trace;
  trace.samples.resize(out.rows);
  for (std::size_t t = 0; t < out.rows; ++t) {
    auto& s = trace.samples[t];
    s.ax = out(t, 0) * model.scaling[0].stddev + model.scaling[0].mean;
    s.ay = out(t, 1) * model.scaling[1].stddev + model.scaling[1].mean;
    s.az = out(t, 2) * model.scaling[2].stddev + model.scaling[2].mean;
    s.t = duration_s * static_cast<double>(t) / static_cast<double>(out.rows - 1);
  }
  return trace;
}

// Full GAN bot sample driven by one human sample; the touch and accel
// generators share the drawn duration.
inline SwipeSample synth_gan_sample(const GanModel& touch_model, const GanModel& accel_model,
                                    const SwipeSample& human, std::uint64_t rng_seed) {
  if (touch_model.modality != GanModality::Touch || accel_model.modality != GanModality::Accel)
    throw Error(ErrorKind::ShapeMismatch, "expected a touch model and an accel model");
  SwipeSample out;
  Mat touch_in = resample_to_length(human.touch, touch_model.config.seq_len);
  out.touch = gan_generate_touch(touch_model, touch_in, rng_seed);
  Mat accel_in = apply_channel_scaling(
      accel_model, resample_to_length(human.accel, accel_model.config.seq_len));
  out.accel = gan_generate_accel(accel_model, accel_in, Rng(rng_seed).child(0xA0).seed(),
                                 out.touch.duration());
  out.label = SourceLabel::GanBot;
  out.meta.session_id = "synth";
  out.meta.device_id = "gan";
  return out;
}

// --- serialization -----------------------------------------------------------

inline constexpr int kGanFormatVersion = 1;

inline nlohmann::json gan_config_to_json(const GanConfig& c) {
  return nlohmann::json{{"seq_len", c.seq_len},
                        {"lstm_sizes", c.lstm_sizes},
                        {"noise_std", c.noise_std},
                        {"learning_rate", c.learning_rate},
                        {"beta1", c.beta1},
                        {"beta2", c.beta2},
                        {"epsilon", c.epsilon},
                        {"epochs", c.epochs},
                        {"batch_size", c.batch_size},
                        {"seed", c.seed},
                        {"reconstruction_objective", c.reconstruction_objective},
                        {"freeze_generator", c.freeze_generator}};
}

inline GanConfig gan_config_from_json(const nlohmann::json& j) {
  GanConfig c;
  c.seq_len = j.value("seq_len", c.seq_len);
  c.lstm_sizes = j.value("lstm_sizes", c.lstm_sizes);
  c.noise_std = j.value("noise_std", c.noise_std);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.reconstruction_objective = j.value("reconstruction_objective", c.reconstruction_objective);
  c.freeze_generator = j.value("freeze_generator", c.freeze_generator);
  return c;
}

inline nlohmann::json gan_to_json(const GanModel& m) {
  m.require_trained();
  nlohmann::json j;
  j["format_version"] = kGanFormatVersion;
  j["modality"] = m.modality == GanModality::Touch ? "touch" : "accel";
  j["config"] = gan_config_to_json(m.config);
  j["generator"] = net_to_json(m.generator);
  j["discriminator"] = net_to_json(m.discriminator);
  j["scaling"] = nlohmann::json::array();
  for (const auto& s : m.scaling) j["scaling"].push_back({{"mean", s.mean}, {"std", s.stddev}});
  j["duration"] = {{"mean", m.duration.mean}, {"std", m.duration.stddev}};
  j["training_log"] = nlohmann::json::array();
  for (const auto& e : m.training_log) j["training_log"].push_back({e.discriminator, e.generator});
  return j;
}

inline GanModel gan_from_json(const nlohmann::json& j) {
  if (j.value("format_version", -1) != kGanFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "unsupported GAN model format version");
  GanModel m;
  m.modality = j["modality"].get<std::string>() == "touch" ? GanModality::Touch
                                                           : GanModality::Accel;
  m.config = gan_config_from_json(j["config"]);
  m.generator = net_from_json(j["generator"]);
  m.discriminator = net_from_json(j["discriminator"]);
  for (const auto& s : j["scaling"])
    m.scaling.push_back({s["mean"].get<double>(), s["std"].get<double>()});
  m.duration = {j["duration"]["mean"].get<double>(), j["duration"]["std"].get<double>()};
  for (const auto& e : j["training_log"])
    m.training_log.push_back({e[0].get<double>(), e[1].get<double>()});
  m.trained = true;
  return m;
}

}  // namespace becaptcha
