#pragma once

// Stacked LSTM -> same-padded 1D convolution -> per-step linear head.
//
// Activations are stored time-major as (features x T) column blocks. All
// arithmetic is double precision; backward passes are written by hand.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/features.hpp"

namespace repseg {

enum class Head { Binary, Density, Count };

inline std::string_view to_string(Head h) {
  switch (h) {
    case Head::Binary: return "binary";
    case Head::Density: return "density";
    case Head::Count: return "count";
  }
  return "density";
}

inline Head parse_head(std::string_view s) {
  if (s == "binary") return Head::Binary;
  if (s == "density") return Head::Density;
  if (s == "count") return Head::Count;
  fail(ErrorCode::InvalidArgument, "unknown head '" + std::string(s) + "'");
}

struct ModelConfig {
  int input_dim = 75;
  int hidden_dim = 0;  // 0: twice the input dimension
  int lstm_layers = 1;
  bool use_conv = true;
  int conv_kernel = 5;
  int conv_channels = 0;  // 0: hidden_dim
  Head head = Head::Density;
  std::uint64_t seed = 0;

  /// Fills in the derived defaults and validates.
  ModelConfig resolved() const {
    ModelConfig c = *this;
    if (c.hidden_dim == 0) c.hidden_dim = 2 * c.input_dim;
    if (c.conv_channels == 0) c.conv_channels = c.hidden_dim;
    require(c.input_dim >= 1, ErrorCode::InvalidArgument, "input_dim must be >= 1");
    require(c.hidden_dim >= 1, ErrorCode::InvalidArgument, "hidden_dim must be >= 1");
    require(c.lstm_layers >= 1 && c.lstm_layers <= 3, ErrorCode::InvalidArgument, "lstm_layers must be in [1,3]");
    require(c.conv_kernel >= 1 && c.conv_kernel % 2 == 1, ErrorCode::InvalidArgument, "conv_kernel must be odd");
    require(c.conv_channels >= 1, ErrorCode::InvalidArgument, "conv_channels must be >= 1");
    return c;
  }

  int head_inputs() const { return use_conv ? conv_channels : hidden_dim; }
};

struct NamedTensor {
  std::string name;
  Eigen::MatrixXd value;
};

/// Gradients mirror the model's parameter list, tensor for tensor.
using Gradients = std::vector<Eigen::MatrixXd>;

class SequenceModel {
 public:
  SequenceModel() = default;
  explicit SequenceModel(const ModelConfig& config) : config_(config.resolved()) {
    const int H = config_.hidden_dim;
    for (int l = 0; l < config_.lstm_layers; ++l) {
      const int in = l == 0 ? config_.input_dim : H;
      const std::string p = "lstm" + std::to_string(l) + ".";
      params_.push_back({p + "w_input", Eigen::MatrixXd::Zero(4 * H, in)});
      params_.push_back({p + "w_hidden", Eigen::MatrixXd::Zero(4 * H, H)});
      params_.push_back({p + "bias", Eigen::MatrixXd::Zero(4 * H, 1)});
    }
    if (config_.use_conv) {
      params_.push_back({"conv.weight", Eigen::MatrixXd::Zero(config_.conv_channels, config_.conv_kernel * H)});
      params_.push_back({"conv.bias", Eigen::MatrixXd::Zero(config_.conv_channels, 1)});
    }
    params_.push_back({"head.weight", Eigen::MatrixXd::Zero(1, config_.head_inputs())});
    params_.push_back({"head.bias", Eigen::MatrixXd::Zero(1, 1)});
  }

  const ModelConfig& config() const { return config_; }
  std::vector<NamedTensor>& parameters() { return params_; }
  const std::vector<NamedTensor>& parameters() const { return params_; }

  Gradients zero_gradients() const {
    Gradients g;
    for (const auto& p : params_) g.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    return g;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  // Parameter indices.
  std::size_t lstm_w_input(int layer) const { return static_cast<std::size_t>(3 * layer); }
  std::size_t lstm_w_hidden(int layer) const { return static_cast<std::size_t>(3 * layer + 1); }
  std::size_t lstm_bias(int layer) const { return static_cast<std::size_t>(3 * layer + 2); }
  std::size_t conv_weight() const { return static_cast<std::size_t>(3 * config_.lstm_layers); }
  std::size_t conv_bias() const { return conv_weight() + 1; }
  std::size_t head_weight() const { return static_cast<std::size_t>(3 * config_.lstm_layers + (config_.use_conv ? 2 : 0)); }
  std::size_t head_bias() const { return head_weight() + 1; }

  const Eigen::MatrixXd& param(std::size_t i) const { return params_[i].value; }

 private:
  ModelConfig config_;
  std::vector<NamedTensor> params_;
};

/// Uniform in +-1/sqrt(hidden_dim), forget-gate biases set to 1. Deterministic in the seed.
inline SequenceModel init_model(const ModelConfig& config) {
  SequenceModel model(config);
  const auto& cfg = model.config();
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& p : model.parameters()) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = dist(rng);
  }
  const int H = cfg.hidden_dim;
  for (int l = 0; l < cfg.lstm_layers; ++l) model.parameters()[model.lstm_bias(l)].value.middleRows(H, H).setOnes();
  return model;
}

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace detail

struct LstmLayerCache {
  Eigen::MatrixXd input;   // in x T
  Eigen::MatrixXd gates;   // 4H x T, activated (i, f, g, o)
  Eigen::MatrixXd cell;    // H x T
  Eigen::MatrixXd tanh_cell;
  Eigen::MatrixXd hidden;  // H x T
};

struct ForwardCache {
  std::vector<LstmLayerCache> layers;
  Eigen::MatrixXd conv_out;  // C x T (empty without conv)
  Eigen::RowVectorXd pre_activation;
  Eigen::VectorXd output;
};

namespace detail {

inline void lstm_layer_forward(const Eigen::MatrixXd& w_input, const Eigen::MatrixXd& w_hidden,
                               const Eigen::MatrixXd& bias, LstmLayerCache& c) {
  const Eigen::Index H = w_hidden.cols();
  const Eigen::Index T = c.input.cols();
  c.gates = w_input * c.input;
  c.gates.colwise() += bias.col(0);
  c.cell.resize(H, T);
  c.tanh_cell.resize(H, T);
  c.hidden.resize(H, T);
  Eigen::VectorXd z(4 * H);
  for (Eigen::Index t = 0; t < T; ++t) {
    z = c.gates.col(t);
    if (t > 0) z.noalias() += w_hidden * c.hidden.col(t - 1);
    for (Eigen::Index k = 0; k < H; ++k) {
      const double i = sigmoid(z(k));
      const double f = sigmoid(z(H + k));
      const double g = std::tanh(z(2 * H + k));
      const double o = sigmoid(z(3 * H + k));
      const double cell = f * (t > 0 ? c.cell(k, t - 1) : 0.0) + i * g;
      const double tc = std::tanh(cell);
      c.gates(k, t) = i;
      c.gates(H + k, t) = f;
      c.gates(2 * H + k, t) = g;
      c.gates(3 * H + k, t) = o;
      c.cell(k, t) = cell;
      c.tanh_cell(k, t) = tc;
      c.hidden(k, t) = o * tc;
    }
  }
}

// Backpropagation through time over the full sequence. Returns d(input).
inline Eigen::MatrixXd lstm_layer_backward(const Eigen::MatrixXd& w_input, const Eigen::MatrixXd& w_hidden,
                                           const LstmLayerCache& c, const Eigen::MatrixXd& d_hidden,
                                           Eigen::MatrixXd& g_input, Eigen::MatrixXd& g_hidden,
                                           Eigen::MatrixXd& g_bias, bool need_input_grad = true) {
  const Eigen::Index H = w_hidden.cols();
  const Eigen::Index T = c.input.cols();
  Eigen::MatrixXd dz(4 * H, T);
  Eigen::VectorXd dh_rec = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(H);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    for (Eigen::Index k = 0; k < H; ++k) {
      const double dh = d_hidden(k, t) + dh_rec(k);
      const double i = c.gates(k, t), f = c.gates(H + k, t), g = c.gates(2 * H + k, t), o = c.gates(3 * H + k, t);
      const double tc = c.tanh_cell(k, t);
      const double c_prev = t > 0 ? c.cell(k, t - 1) : 0.0;
      const double d_o = dh * tc;
      const double dc = dh * o * (1.0 - tc * tc) + dc_next(k);
      dz(k, t) = dc * g * i * (1.0 - i);
      dz(H + k, t) = dc * c_prev * f * (1.0 - f);
      dz(2 * H + k, t) = dc * i * (1.0 - g * g);
      dz(3 * H + k, t) = d_o * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    if (t > 0) dh_rec.noalias() = w_hidden.transpose() * dz.col(t);
  }
  g_input.noalias() += dz * c.input.transpose();
  if (T > 1) g_hidden.noalias() += dz.rightCols(T - 1) * c.hidden.leftCols(T - 1).transpose();
  g_bias += dz.rowwise().sum();
  if (!need_input_grad) return {};
  return w_input.transpose() * dz;
}

// Same-length convolution with symmetric zero padding. Weight block k (C x H)
// multiplies the input at time offset k - K/2.
inline Eigen::MatrixXd conv_forward(const Eigen::MatrixXd& weight, const Eigen::MatrixXd& bias,
                                    const Eigen::MatrixXd& in, int kernel) {
  const Eigen::Index H = in.rows(), T = in.cols();
  Eigen::MatrixXd out(weight.rows(), T);
  out.colwise() = bias.col(0);
  const int r = kernel / 2;
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index off = k - r;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -off);
    const Eigen::Index t1 = std::min<Eigen::Index>(T, T - off);
    if (t1 <= t0) continue;
    out.middleCols(t0, t1 - t0).noalias() += weight.middleCols(k * H, H) * in.middleCols(t0 + off, t1 - t0);
  }
  return out;
}

inline Eigen::MatrixXd conv_backward(const Eigen::MatrixXd& weight, const Eigen::MatrixXd& in,
                                     const Eigen::MatrixXd& d_out, int kernel, Eigen::MatrixXd& g_weight,
                                     Eigen::MatrixXd& g_bias) {
  const Eigen::Index H = in.rows(), T = in.cols();
  Eigen::MatrixXd d_in = Eigen::MatrixXd::Zero(H, T);
  const int r = kernel / 2;
  for (int k = 0; k < kernel; ++k) {
    const Eigen::Index off = k - r;
    const Eigen::Index t0 = std::max<Eigen::Index>(0, -off);
    const Eigen::Index t1 = std::min<Eigen::Index>(T, T - off);
    if (t1 <= t0) continue;
    const Eigen::Index n = t1 - t0;
    g_weight.middleCols(k * H, H).noalias() += d_out.middleCols(t0, n) * in.middleCols(t0 + off, n).transpose();
    d_in.middleCols(t0 + off, n).noalias() += weight.middleCols(k * H, H).transpose() * d_out.middleCols(t0, n);
  }
  g_bias += d_out.rowwise().sum();
  return d_in;
}

}  // namespace detail

/// One output per frame: sigmoid for the binary head, softplus for density and count heads.
inline Eigen::VectorXd forward(const SequenceModel& model, const Eigen::MatrixXd& features, ForwardCache* cache = nullptr) {
  const auto& cfg = model.config();
  require(features.cols() == cfg.input_dim, ErrorCode::DimensionMismatch,
          "features have dimension " + std::to_string(features.cols()) + ", model expects " +
              std::to_string(cfg.input_dim));
  require(features.rows() >= 1, ErrorCode::EmptySequence, "forward needs at least one frame");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.layers.assign(static_cast<std::size_t>(cfg.lstm_layers), {});
  for (int l = 0; l < cfg.lstm_layers; ++l) {
    auto& layer = c.layers[static_cast<std::size_t>(l)];
    if (l == 0)
      layer.input = features.transpose();
    else
      layer.input = c.layers[static_cast<std::size_t>(l - 1)].hidden;
    detail::lstm_layer_forward(model.param(model.lstm_w_input(l)), model.param(model.lstm_w_hidden(l)),
                               model.param(model.lstm_bias(l)), layer);
  }
  const Eigen::MatrixXd& top = c.layers.back().hidden;
  if (cfg.use_conv) {
    c.conv_out = detail::conv_forward(model.param(model.conv_weight()), model.param(model.conv_bias()), top,
                                      cfg.conv_kernel);
  } else {
    c.conv_out.resize(0, 0);
  }
  const Eigen::MatrixXd& head_in = cfg.use_conv ? c.conv_out : top;
  c.pre_activation = model.param(model.head_weight()) * head_in;
  c.pre_activation.array() += model.param(model.head_bias())(0, 0);

  c.output.resize(c.pre_activation.size());
  for (Eigen::Index t = 0; t < c.pre_activation.size(); ++t) {
    const double x = c.pre_activation(t);
    c.output(t) = cfg.head == Head::Binary ? detail::sigmoid(x) : detail::softplus(x);
  }
  return c.output;
}

inline Eigen::VectorXd forward(const SequenceModel& model, const FeatureSequence& feats) {
  return forward(model, feats.values);
}

/// Accumulates d(loss)/d(parameters) into `grads`, given d(loss)/d(output).
inline void backward(const SequenceModel& model, const ForwardCache& c, const Eigen::VectorXd& d_output,
                     Gradients& grads) {
  const auto& cfg = model.config();
  const Eigen::Index T = c.output.size();
  require(d_output.size() == T, ErrorCode::LengthMismatch, "output gradient length mismatch");

  Eigen::RowVectorXd d_pre(T);
  for (Eigen::Index t = 0; t < T; ++t) {
    // Both activations have derivative expressible through sigmoid of the pre-activation.
    const double s = detail::sigmoid(c.pre_activation(t));
    d_pre(t) = d_output(t) * (cfg.head == Head::Binary ? s * (1.0 - s) : s);
  }

  const Eigen::MatrixXd& top = c.layers.back().hidden;
  const Eigen::MatrixXd& head_in = cfg.use_conv ? c.conv_out : top;
  grads[model.head_weight()].noalias() += d_pre * head_in.transpose();
  grads[model.head_bias()](0, 0) += d_pre.sum();
  Eigen::MatrixXd d_head_in = model.param(model.head_weight()).transpose() * d_pre;

  Eigen::MatrixXd d_hidden;
  if (cfg.use_conv) {
    d_hidden = detail::conv_backward(model.param(model.conv_weight()), top, d_head_in, cfg.conv_kernel,
                                     grads[model.conv_weight()], grads[model.conv_bias()]);
  } else {
    d_hidden = std::move(d_head_in);
  }
  for (int l = cfg.lstm_layers - 1; l >= 0; --l) {
    d_hidden = detail::lstm_layer_backward(model.param(model.lstm_w_input(l)), model.param(model.lstm_w_hidden(l)),
                                           c.layers[static_cast<std::size_t>(l)], d_hidden,
                                           grads[model.lstm_w_input(l)], grads[model.lstm_w_hidden(l)],
                                           grads[model.lstm_bias(l)], l > 0);
  }
}

/// Many-to-one count: the sum of the per-frame outputs.
inline double predict_count(const SequenceModel& model, const FeatureSequence& feats) {
  require(model.config().head == Head::Count, ErrorCode::HeadMismatch,
          "predict_count needs a count head, model has '" + std::string(to_string(model.config().head)) + "'");
  return forward(model, feats).sum();
}

}  // namespace repseg
