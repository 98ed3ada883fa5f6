#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/neural/model.hpp"

namespace repseg {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

struct OptimizerState {
  AdamConfig config;
  Gradients first_moment;
  Gradients second_moment;
  long step = 0;

  OptimizerState() = default;
  OptimizerState(const SequenceModel& model, AdamConfig cfg)
      : config(cfg), first_moment(model.zero_gradients()), second_moment(model.zero_gradients()) {}
};

/// Throws NonFiniteGradient naming the first offending tensor.
inline void check_finite(const SequenceModel& model, const Gradients& grads) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require(grads[i].allFinite(), ErrorCode::NonFiniteGradient,
            "non-finite gradient in '" + model.parameters()[i].name + "'");
  }
}

/// Bias-corrected Adam update. Gradients are validated before anything is touched.
inline void adam_step(SequenceModel& model, Gradients& grads, OptimizerState& state) {
  check_finite(model, grads);
  const auto& cfg = state.config;
  if (cfg.clip_norm > 0) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > cfg.clip_norm)
      for (auto& g : grads) g *= cfg.clip_norm / norm;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i].array();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    params[i].value.array() -= cfg.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
  }
}

}  // namespace repseg
