#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "becaptcha/errors.hpp"
#include "becaptcha/matrix.hpp"
#include "becaptcha/rng.hpp"

namespace becaptcha {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

enum class OutputActivation { Sigmoid, Linear };

// Gate order everywhere: input, forget, output, cell candidate.
enum GateIndex { kGateIn = 0, kGateForget = 1, kGateOut = 2, kGateCell = 3 };

struct LstmLayerParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::array<Mat, 4> w;  // hidden x input, per gate
  std::array<Mat, 4> u;  // hidden x hidden, per gate
  std::array<Vec, 4> b;  // hidden, per gate

  void resize(std::size_t in, std::size_t hidden) {
    input_dim = in;
    hidden_dim = hidden;
    for (int g = 0; g < 4; ++g) {
      w[g] = Mat(hidden, in);
      u[g] = Mat(hidden, hidden);
      b[g].assign(hidden, 0.0);
    }
  }

  std::size_t num_params() const { return 4 * (input_dim * hidden_dim + hidden_dim * hidden_dim + hidden_dim); }
};

struct DenseParams {
  Mat w;  // out x in
  Vec b;  // out
};

struct ParamSet {
  std::vector<LstmLayerParams> lstm;  // 1 or 2 layers
  DenseParams dense;

  std::size_t num_params() const {
    std::size_t n = dense.w.size() + dense.b.size();
    for (const auto& l : lstm) n += l.num_params();
    return n;
  }

  // Deterministic flattening order: per layer W_i..W_g, U_i..U_g, b_i..b_g,
  // then dense W, dense b. Gradients use the same order.
  template <typename Fn>
  void visit(Fn&& fn) {
    for (auto& l : lstm) {
      for (int g = 0; g < 4; ++g)
        for (double& x : l.w[g].v) fn(x);
      for (int g = 0; g < 4; ++g)
        for (double& x : l.u[g].v) fn(x);
      for (int g = 0; g < 4; ++g)
        for (double& x : l.b[g]) fn(x);
    }
    for (double& x : dense.w.v) fn(x);
    for (double& x : dense.b) fn(x);
  }

  template <typename Fn>
  void visit(Fn&& fn) const {
    const_cast<ParamSet*>(this)->visit([&](double& x) { fn(static_cast<const double&>(x)); });
  }

  void zero_like(const ParamSet& shape) {
    lstm.resize(shape.lstm.size());
    for (std::size_t i = 0; i < shape.lstm.size(); ++i)
      lstm[i].resize(shape.lstm[i].input_dim, shape.lstm[i].hidden_dim);
    dense.w = Mat(shape.dense.w.rows, shape.dense.w.cols);
    dense.b.assign(shape.dense.b.size(), 0.0);
  }

  void accumulate(const ParamSet& other) {
    Vec flat(other.num_params());
    std::size_t i = 0;
    other.visit([&](const double& x) { flat[i++] = x; });
    i = 0;
    visit([&](double& x) { x += flat[i++]; });
  }

  void scale(double k) {
    visit([&](double& x) { x *= k; });
  }
};

// Recurrent network: 1 or 2 LSTM layers and a dense head. The sigmoid head
// reads the final hidden state and emits one score; the linear head is
// applied per timestep and emits a sequence.
class SequenceNet {
 public:
  ParamSet params;
  OutputActivation output_activation = OutputActivation::Sigmoid;

  std::size_t input_dim() const { return params.lstm.front().input_dim; }
  std::size_t top_hidden_dim() const { return params.lstm.back().hidden_dim; }
  std::size_t output_dim() const { return params.dense.w.rows; }
  std::size_t num_params() const { return params.num_params(); }
  std::uint64_t version() const { return version_; }

  Vec get_params() const {
    Vec out(num_params());
    std::size_t i = 0;
    params.visit([&](const double& x) { out[i++] = x; });
    return out;
  }

  void set_params(std::span<const double> flat) {
    if (flat.size() != num_params())
      throw Error(ErrorKind::ShapeMismatch, "parameter vector size mismatch");
    std::size_t i = 0;
    params.visit([&](double& x) { x = flat[i++]; });
    ++version_;
  }

  void bump_version() { ++version_; }

 private:
  std::uint64_t version_ = 0;
};

struct NetInitOptions {
  double weight_scale = 0.08;  // uniform in [-scale, scale]
  double forget_bias = 1.0;    // set 0 to start all gates neutral
};

inline SequenceNet make_sequence_net(std::size_t input_dim,
                                     const std::vector<std::size_t>& lstm_sizes,
                                     std::size_t output_dim, OutputActivation act,
                                     std::uint64_t seed, const NetInitOptions& opts = {}) {
  if (lstm_sizes.empty() || lstm_sizes.size() > 2)
    throw Error(ErrorKind::InvalidConfig, "expected 1 or 2 LSTM layers");
  SequenceNet net;
  net.output_activation = act;
  std::size_t in = input_dim;
  for (std::size_t h : lstm_sizes) {
    LstmLayerParams layer;
    layer.resize(in, h);
    net.params.lstm.push_back(std::move(layer));
    in = h;
  }
  net.params.dense.w = Mat(output_dim, in);
  net.params.dense.b.assign(output_dim, 0.0);

  Rng rng(seed);
  for (auto& layer : net.params.lstm)
    for (int g = 0; g < 4; ++g) {
      for (double& x : layer.w[g].v) x = rng.uniform(-opts.weight_scale, opts.weight_scale);
      for (double& x : layer.u[g].v) x = rng.uniform(-opts.weight_scale, opts.weight_scale);
    }
  for (double& x : net.params.dense.w.v)
    x = rng.uniform(-opts.weight_scale, opts.weight_scale);
  for (auto& layer : net.params.lstm)
    for (double& x : layer.b[kGateForget]) x = opts.forget_bias;
  net.bump_version();
  return net;
}

// Per-layer activations retained for backpropagation through time.
struct LayerCache {
  Mat x;                      // T x input_dim
  std::array<Mat, 4> gates;   // T x hidden each (post-activation)
  Mat c;                      // T x hidden
  Mat h;                      // T x hidden
  Mat tanh_c;                 // T x hidden
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  double scalar_out = 0.0;
  Mat seq_out;
  std::size_t T = 0;
  OutputActivation act = OutputActivation::Sigmoid;
  std::uint64_t net_version = 0;
};

struct ForwardResult {
  double scalar = 0.0;  // sigmoid head
  Mat seq;              // linear head, T x output_dim
  ForwardCache cache;
};

inline ForwardResult net_forward(const SequenceNet& net, const Mat& seq) {
  if (seq.rows < 1 || seq.cols != net.input_dim())
    throw Error(ErrorKind::ShapeMismatch, "input sequence shape does not match net");
  for (double v : seq.v)
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteInput, "non-finite input sequence");

  const std::size_t T = seq.rows;
  ForwardResult res;
  res.cache.T = T;
  res.cache.act = net.output_activation;
  res.cache.net_version = net.version();
  res.cache.layers.resize(net.params.lstm.size());

  const Mat* layer_in = &seq;
  for (std::size_t li = 0; li < net.params.lstm.size(); ++li) {
    const auto& p = net.params.lstm[li];
    auto& lc = res.cache.layers[li];
    const std::size_t h = p.hidden_dim;
    lc.x = *layer_in;
    for (auto& g : lc.gates) g = Mat(T, h);
    lc.c = Mat(T, h);
    lc.h = Mat(T, h);
    lc.tanh_c = Mat(T, h);

    Vec h_prev(h, 0.0), c_prev(h, 0.0), z(h);
    for (std::size_t t = 0; t < T; ++t) {
      const double* xt = &lc.x.v[t * p.input_dim];
      for (int g = 0; g < 4; ++g) {
        z = p.b[g];
        matvec_acc(p.w[g], xt, z.data());
        matvec_acc(p.u[g], h_prev.data(), z.data());
        double* out = &lc.gates[g].v[t * h];
        if (g == kGateCell)
          for (std::size_t k = 0; k < h; ++k) out[k] = std::tanh(z[k]);
        else
          for (std::size_t k = 0; k < h; ++k) out[k] = sigmoid(z[k]);
      }
      for (std::size_t k = 0; k < h; ++k) {
        const double i_g = lc.gates[kGateIn](t, k);
        const double f_g = lc.gates[kGateForget](t, k);
        const double o_g = lc.gates[kGateOut](t, k);
        const double g_g = lc.gates[kGateCell](t, k);
        const double c = f_g * c_prev[k] + i_g * g_g;
        const double tc = std::tanh(c);
        lc.c(t, k) = c;
        lc.tanh_c(t, k) = tc;
        lc.h(t, k) = o_g * tc;
        c_prev[k] = c;
        h_prev[k] = o_g * tc;
      }
    }
    layer_in = &lc.h;
  }

  const auto& top = res.cache.layers.back().h;
  const auto& d = net.params.dense;
  if (net.output_activation == OutputActivation::Sigmoid) {
    if (d.w.rows != 1)
      throw Error(ErrorKind::ShapeMismatch, "sigmoid head expects a scalar output");
    double z = d.b[0];
    for (std::size_t k = 0; k < d.w.cols; ++k) z += d.w(0, k) * top(T - 1, k);
    res.scalar = sigmoid(z);
    res.cache.scalar_out = res.scalar;
  } else {
    res.seq = Mat(T, d.w.rows);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t r = 0; r < d.w.rows; ++r) {
        double z = d.b[r];
        for (std::size_t k = 0; k < d.w.cols; ++k) z += d.w(r, k) * top(t, k);
        res.seq(t, r) = z;
      }
    }
    res.cache.seq_out = res.seq;
  }
  return res;
}

struct NetGradients {
  ParamSet params;  // same shapes as the net's parameters
  Mat input;        // T x input_dim, gradient w.r.t. the input sequence

  Vec flat() const {
    Vec out(params.num_params());
    std::size_t i = 0;
    params.visit([&](const double& x) { out[i++] = x; });
    return out;
  }

  void accumulate(const NetGradients& other) {
    params.accumulate(other.params);
    for (std::size_t i = 0; i < input.v.size(); ++i) input.v[i] += other.input.v[i];
  }

  void scale(double k) {
    params.scale(k);
    for (double& x : input.v) x *= k;
  }
};

namespace detail {

inline void check_cache(const SequenceNet& net, const ForwardCache& cache) {
  if (cache.net_version != net.version() || cache.layers.size() != net.params.lstm.size() ||
      cache.act != net.output_activation)
    throw Error(ErrorKind::StaleCache, "forward cache does not match this net");
}

// BPTT through the LSTM stack given per-timestep gradients flowing into the
// top layer's hidden sequence. Fills grads.params.lstm and grads.input.
inline void lstm_backward(const SequenceNet& net, const ForwardCache& cache, Mat dh_top,
                          NetGradients& grads) {
  const std::size_t T = cache.T;
  Mat dh_seq = std::move(dh_top);  // gradient flowing into layer li's h sequence

  for (std::size_t li = net.params.lstm.size(); li-- > 0;) {
    const auto& p = net.params.lstm[li];
    const auto& lc = cache.layers[li];
    auto& gp = grads.params.lstm[li];
    const std::size_t h = p.hidden_dim;
    const std::size_t din = p.input_dim;

    Mat dx_seq(T, din);
    Vec dh_rec(h, 0.0), dc_rec(h, 0.0);
    std::array<Vec, 4> dz;
    for (auto& v : dz) v.assign(h, 0.0);

    for (std::size_t t = T; t-- > 0;) {
      Vec dc(h, 0.0);
      for (std::size_t k = 0; k < h; ++k) {
        const double dh = dh_seq(t, k) + dh_rec[k];
        const double i_g = lc.gates[kGateIn](t, k);
        const double f_g = lc.gates[kGateForget](t, k);
        const double o_g = lc.gates[kGateOut](t, k);
        const double g_g = lc.gates[kGateCell](t, k);
        const double tc = lc.tanh_c(t, k);
        const double c_prev = t > 0 ? lc.c(t - 1, k) : 0.0;

        const double d_o = dh * tc;
        dz[kGateOut][k] = d_o * o_g * (1.0 - o_g);
        const double dct = dh * o_g * (1.0 - tc * tc) + dc_rec[k];
        dc[k] = dct;
        const double d_f = dct * c_prev;
        dz[kGateForget][k] = d_f * f_g * (1.0 - f_g);
        const double d_i = dct * g_g;
        dz[kGateIn][k] = d_i * i_g * (1.0 - i_g);
        const double d_g = dct * i_g;
        dz[kGateCell][k] = d_g * (1.0 - g_g * g_g);
      }

      const double* xt = &lc.x.v[t * din];
      const double* h_prev = t > 0 ? &lc.h.v[(t - 1) * h] : nullptr;
      double* dxt = &dx_seq.v[t * din];
      std::fill(dh_rec.begin(), dh_rec.end(), 0.0);
      for (int g = 0; g < 4; ++g) {
        outer_acc(gp.w[g], dz[g].data(), xt);
        if (h_prev) outer_acc(gp.u[g], dz[g].data(), h_prev);
        for (std::size_t k = 0; k < h; ++k) gp.b[g][k] += dz[g][k];
        matvec_t_acc(p.w[g], dz[g].data(), dxt);
        matvec_t_acc(p.u[g], dz[g].data(), dh_rec.data());
      }
      for (std::size_t k = 0; k < h; ++k) dc_rec[k] = dc[k] * lc.gates[kGateForget](t, k);
    }

    if (li == 0)
      grads.input = std::move(dx_seq);
    else
      dh_seq = std::move(dx_seq);  // feeds the layer below as its dh
  }
}

inline NetGradients make_zero_grads(const SequenceNet& net, std::size_t T) {
  NetGradients g;
  g.params.zero_like(net.params);
  g.input = Mat(T, net.input_dim());
  return g;
}

}  // namespace detail

// Backward pass for the sigmoid head. output_gradient is dL/dy where y is
// the post-sigmoid score.
inline NetGradients net_backward(const SequenceNet& net, const ForwardCache& cache,
                                 double output_gradient) {
  detail::check_cache(net, cache);
  if (net.output_activation != OutputActivation::Sigmoid)
    throw Error(ErrorKind::ShapeMismatch, "scalar gradient requires the sigmoid head");
  const std::size_t T = cache.T;
  NetGradients grads = detail::make_zero_grads(net, T);

  const double y = cache.scalar_out;
  const double dz = output_gradient * y * (1.0 - y);

  const auto& top = cache.layers.back().h;
  const auto& d = net.params.dense;
  Mat dh_top(T, net.top_hidden_dim());
  for (std::size_t k = 0; k < d.w.cols; ++k) {
    grads.params.dense.w(0, k) = dz * top(T - 1, k);
    dh_top(T - 1, k) = d.w(0, k) * dz;
  }
  grads.params.dense.b[0] = dz;

  detail::lstm_backward(net, cache, std::move(dh_top), grads);
  return grads;
}

// Backward pass for the linear head. output_gradient is dL/dY, T x d_out.
inline NetGradients net_backward(const SequenceNet& net, const ForwardCache& cache,
                                 const Mat& output_gradient) {
  detail::check_cache(net, cache);
  if (net.output_activation != OutputActivation::Linear)
    throw Error(ErrorKind::ShapeMismatch, "sequence gradient requires the linear head");
  if (output_gradient.rows != cache.T || output_gradient.cols != net.output_dim())
    throw Error(ErrorKind::ShapeMismatch, "output gradient shape mismatch");
  const std::size_t T = cache.T;
  NetGradients grads = detail::make_zero_grads(net, T);

  const auto& top = cache.layers.back().h;
  const auto& d = net.params.dense;
  Mat dh_top(T, net.top_hidden_dim());
  for (std::size_t t = 0; t < T; ++t) {
    const double* dzt = &output_gradient.v[t * d.w.rows];
    const double* ht = &top.v[t * d.w.cols];
    outer_acc(grads.params.dense.w, dzt, ht);
    for (std::size_t r = 0; r < d.w.rows; ++r) grads.params.dense.b[r] += dzt[r];
    matvec_t_acc(d.w, dzt, &dh_top.v[t * d.w.cols]);
  }

  detail::lstm_backward(net, cache, std::move(dh_top), grads);
  return grads;
}

// --- Adam ------------------------------------------------------------------

struct AdamConfig {
  double alpha = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Vec m;
  Vec v;
  std::uint64_t step = 0;
  AdamConfig cfg;

  AdamState() = default;
  AdamState(std::size_t n, const AdamConfig& c) : m(n, 0.0), v(n, 0.0), cfg(c) {}
};

// Bias-corrected Adam on flat parameter/gradient vectors.
inline void adam_step(Vec& params, const Vec& grads, AdamState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw Error(ErrorKind::ShapeMismatch, "adam buffers do not match parameter count");
  st.step += 1;
  const double b1 = st.cfg.beta1;
  const double b2 = st.cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * grads[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    params[i] -= st.cfg.alpha * mhat / (std::sqrt(vhat) + st.cfg.epsilon);
  }
}

inline void adam_step(SequenceNet& net, const NetGradients& grads, AdamState& st) {
  Vec p = net.get_params();
  adam_step(p, grads.flat(), st);
  net.set_params(p);
}

// --- losses ------------------------------------------------------------------

enum class LossKind { Bce, Mse };

struct ScalarLoss {
  double value = 0.0;
  double grad = 0.0;  // d value / d prediction
};

inline constexpr double kBceClamp = 1e-7;

inline ScalarLoss compute_loss(LossKind kind, double prediction, double target) {
  ScalarLoss out;
  if (kind == LossKind::Bce) {
    const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
    out.value = -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
    out.grad = (p - target) / (p * (1.0 - p));
  } else {
    const double d = prediction - target;
    out.value = d * d;
    out.grad = 2.0 * d;
  }
  return out;
}

struct SeqLoss {
  double value = 0.0;
  Mat grad;  // same shape as prediction
};

inline SeqLoss compute_loss(LossKind kind, const Mat& prediction, const Mat& target) {
  if (!prediction.same_shape(target))
    throw Error(ErrorKind::ShapeMismatch, "loss prediction/target shape mismatch");
  SeqLoss out;
  out.grad = Mat(prediction.rows, prediction.cols);
  const double n = static_cast<double>(prediction.size());
  for (std::size_t i = 0; i < prediction.v.size(); ++i) {
    const ScalarLoss l = compute_loss(kind, prediction.v[i], target.v[i]);
    out.value += l.value / n;
    out.grad.v[i] = l.grad / n;
  }
  return out;
}

// FNV-1a over the raw parameter bytes; used to assert a net did not move.
inline std::uint64_t param_hash(const SequenceNet& net) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  net.params.visit([&](const double& x) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(&x);
    for (std::size_t i = 0; i < sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ull;
    }
  });
  return h;
}

// --- serialization -----------------------------------------------------------

inline constexpr int kNetFormatVersion = 1;

inline nlohmann::json mat_to_json(const Mat& m) {
  return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.v}};
}

inline Mat mat_from_json(const nlohmann::json& j) {
  Mat m(j["rows"].get<std::size_t>(), j["cols"].get<std::size_t>());
  m.v = j["data"].get<std::vector<double>>();
  if (m.v.size() != m.rows * m.cols)
    throw Error(ErrorKind::SchemaViolation, "matrix payload size mismatch");
  return m;
}

inline nlohmann::json net_to_json(const SequenceNet& net) {
  nlohmann::json j;
  j["format_version"] = kNetFormatVersion;
  j["activation"] = net.output_activation == OutputActivation::Sigmoid ? "sigmoid" : "linear";
  j["lstm"] = nlohmann::json::array();
  for (const auto& l : net.params.lstm) {
    nlohmann::json jl;
    jl["input_dim"] = l.input_dim;
    jl["hidden_dim"] = l.hidden_dim;
    for (int g = 0; g < 4; ++g) {
      jl["w"][g] = mat_to_json(l.w[g]);
      jl["u"][g] = mat_to_json(l.u[g]);
      jl["b"][g] = l.b[g];
    }
    j["lstm"].push_back(jl);
  }
  j["dense"] = {{"w", mat_to_json(net.params.dense.w)}, {"b", net.params.dense.b}};
  return j;
}

inline SequenceNet net_from_json(const nlohmann::json& j) {
  if (j.value("format_version", -1) != kNetFormatVersion)
    throw Error(ErrorKind::VersionMismatch, "unsupported net format version");
  SequenceNet net;
  net.output_activation = j["activation"].get<std::string>() == "sigmoid"
                              ? OutputActivation::Sigmoid
                              : OutputActivation::Linear;
  for (const auto& jl : j["lstm"]) {
    LstmLayerParams l;
    l.input_dim = jl["input_dim"].get<std::size_t>();
    l.hidden_dim = jl["hidden_dim"].get<std::size_t>();
    for (int g = 0; g < 4; ++g) {
      l.w[g] = mat_from_json(jl["w"][g]);
      l.u[g] = mat_from_json(jl["u"][g]);
      l.b[g] = jl["b"][g].get<Vec>();
    }
    net.params.lstm.push_back(std::move(l));
  }
  net.params.dense.w = mat_from_json(j["dense"]["w"]);
  net.params.dense.b = j["dense"]["b"].get<Vec>();
  net.bump_version();
  return net;
}

}  // namespace becaptcha
