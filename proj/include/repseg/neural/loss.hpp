#pragma once

// Weighted KL-divergence + L1 loss on per-frame outputs, and the scalar L1
// loss used by the count head.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/labels.hpp"
#include "repseg/neural/model.hpp"

namespace repseg {

struct LossConfig {
  double kl_weight = 1.0;
  double l1_weight = 1.0;
  double epsilon = 1e-8;

  void validate() const {
    require(kl_weight >= 0 && l1_weight >= 0 && kl_weight + l1_weight > 0, ErrorCode::InvalidArgument,
            "loss weights must be nonnegative with a positive sum");
    require(epsilon > 0, ErrorCode::InvalidArgument, "loss epsilon must be positive");
  }
};

namespace detail {
inline double sign(double x) { return (x > 0) - (x < 0); }
}  // namespace detail

/// kl_weight * KL(target' || pred') + l1_weight * mean|pred - target|, where v' = (v + eps) / sum(v + eps).
/// When `grad` is non-null it receives d(loss)/d(pred).
inline double combined_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, const LossConfig& cfg,
                            Eigen::VectorXd* grad = nullptr) {
  require(pred.size() == target.size(), ErrorCode::LengthMismatch,
          "prediction length " + std::to_string(pred.size()) + " vs target " + std::to_string(target.size()));
  require(pred.size() > 0, ErrorCode::EmptyInput, "empty prediction");
  const Eigen::Index T = pred.size();
  const Eigen::ArrayXd p_raw = target.array() + cfg.epsilon;
  const Eigen::ArrayXd q_raw = pred.array() + cfg.epsilon;
  const double p_sum = p_raw.sum(), q_sum = q_raw.sum();
  const Eigen::ArrayXd p = p_raw / p_sum;
  const Eigen::ArrayXd q = q_raw / q_sum;

  double kl = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) kl += p(t) * std::log(p(t) / q(t));
  const double l1 = (pred - target).cwiseAbs().mean();

  if (grad) {
    grad->resize(T);
    for (Eigen::Index t = 0; t < T; ++t) {
      (*grad)(t) = cfg.kl_weight * (1.0 / q_sum - p(t) / q_raw(t)) +
                   cfg.l1_weight * detail::sign(pred(t) - target(t)) / static_cast<double>(T);
    }
  }
  return cfg.kl_weight * kl + cfg.l1_weight * l1;
}

/// l1_weight * |sum(pred) - count|.
inline double count_loss(const Eigen::VectorXd& pred, double count, const LossConfig& cfg,
                         Eigen::VectorXd* grad = nullptr) {
  require(pred.size() > 0, ErrorCode::EmptyInput, "empty prediction");
  const double diff = pred.sum() - count;
  if (grad) *grad = Eigen::VectorXd::Constant(pred.size(), cfg.l1_weight * detail::sign(diff));
  return cfg.l1_weight * std::abs(diff);
}

/// Dispatches on the head: binary and density heads use the combined loss against
/// their per-frame targets, the count head uses the scalar count loss.
inline double head_loss(Head head, const Eigen::VectorXd& pred, const LabelBundle& labels, const LossConfig& cfg,
                        Eigen::VectorXd* grad = nullptr) {
  switch (head) {
    case Head::Binary: return combined_loss(pred, labels.binary, cfg, grad);
    case Head::Density: return combined_loss(pred, labels.density, cfg, grad);
    case Head::Count: return count_loss(pred, static_cast<double>(labels.count), cfg, grad);
  }
  return 0.0;
}

}  // namespace repseg
