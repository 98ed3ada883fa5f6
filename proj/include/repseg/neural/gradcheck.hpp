#pragma once

// Analytic gradients versus central finite differences.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "repseg/labels.hpp"
#include "repseg/neural/loss.hpp"
#include "repseg/neural/model.hpp"
#include "repseg/neural/train.hpp"

namespace repseg {

struct TensorCheck {
  std::string name;
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
  double max_abs_numeric = 0.0;
};

struct GradCheckReport {
  ModelConfig config;
  std::vector<TensorCheck> tensors;

  double max_relative_error() const {
    double m = 0.0;
    for (const auto& t : tensors) m = std::max(m, t.max_relative_error);
    return m;
  }
  bool passed(double tolerance) const { return max_relative_error() < tolerance; }
};

/// Relative error of a tensor: max_i |analytic_i - numeric_i| / max(max_i |analytic_i|, max_i |numeric_i|).
/// A tensor whose gradients are all exactly zero reports 0.
inline GradCheckReport grad_check(const SequenceModel& model, const FeatureSequence& feats, const LabelBundle& labels,
                                  const LossConfig& loss_cfg = {}, double step = 1e-5) {
  Gradients analytic;
  loss_and_gradients(model, feats, labels, loss_cfg, analytic);

  SequenceModel probe = model;
  auto loss_at = [&]() { return head_loss(probe.config().head, forward(probe, feats.values), labels, loss_cfg); };

  GradCheckReport report{model.config(), {}};
  auto& params = probe.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorCheck tc{params[i].name};
    double max_diff = 0.0;
    for (Eigen::Index k = 0; k < params[i].value.size(); ++k) {
      double& w = params[i].value.data()[k];
      const double saved = w;
      w = saved + step;
      const double up = loss_at();
      w = saved - step;
      const double down = loss_at();
      w = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[i].data()[k];
      max_diff = std::max(max_diff, std::abs(a - numeric));
      tc.max_abs_analytic = std::max(tc.max_abs_analytic, std::abs(a));
      tc.max_abs_numeric = std::max(tc.max_abs_numeric, std::abs(numeric));
    }
    const double scale = std::max(tc.max_abs_analytic, tc.max_abs_numeric);
    tc.max_relative_error = scale > 0 ? max_diff / scale : 0.0;
    report.tensors.push_back(tc);
  }
  return report;
}

/// Builds a random model and sample of length T for `config` and checks every tensor.
inline GradCheckReport grad_check(const ModelConfig& config, int frames, const LossConfig& loss_cfg = {},
                                  double step = 1e-5) {
  const SequenceModel model = init_model(config);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureSequence feats;
  feats.values.resize(frames, model.config().input_dim);
  for (Eigen::Index i = 0; i < feats.values.size(); ++i) feats.values.data()[i] = normal(rng);
  feats.degenerate.assign(static_cast<std::size_t>(frames), 0);

  // Two repetitions covering the middle of the sequence.
  Segments segs;
  if (frames >= 6) {
    const int third = frames / 3;
    segs = {{1, third + 1}, {third + 2, std::min(frames, 2 * third + 2)}};
  }
  const LabelBundle labels = make_labels(RepetitionAnnotation(segs, frames));
  return grad_check(model, feats, labels, loss_cfg, step);
}

/// input_dim 6, hidden 12, every head, 1 to 3 LSTM layers, convolution on and off.
inline std::vector<ModelConfig> default_grad_check_configs(std::uint64_t seed = 7) {
  std::vector<ModelConfig> out;
  for (const Head head : {Head::Binary, Head::Density, Head::Count}) {
    for (int layers = 1; layers <= 3; ++layers) {
      for (const bool conv : {false, true}) {
        ModelConfig c;
        c.input_dim = 6;
        c.hidden_dim = 12;
        c.lstm_layers = layers;
        c.use_conv = conv;
        c.head = head;
        c.seed = seed + out.size();
        out.push_back(c);
      }
    }
  }
  return out;
}

inline constexpr int kGradCheckFrames = 12;
inline constexpr double kGradCheckTolerance = 1e-4;

}  // namespace repseg
