#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "repseg/error.hpp"
#include "repseg/labels.hpp"
#include "repseg/neural/loss.hpp"
#include "repseg/neural/model.hpp"
#include "repseg/neural/optimizer.hpp"

namespace repseg {

struct TrainingExample {
  const FeatureSequence* features = nullptr;
  const LabelBundle* labels = nullptr;
};

struct Schedule {
  int epochs = 60;
  double learning_rate = 1e-3;
  std::uint64_t shuffle_seed = 0;
  double clip_norm = 0.0;
};

struct TrainingLog {
  std::vector<double> epoch_mean_loss;
  friend bool operator==(const TrainingLog&, const TrainingLog&) = default;
};

/// Loss and full-sequence gradients for one sample, without touching the model.
inline double loss_and_gradients(const SequenceModel& model, const FeatureSequence& feats, const LabelBundle& labels,
                                 const LossConfig& loss_cfg, Gradients& grads) {
  require(labels.binary.size() == feats.frames() && labels.density.size() == feats.frames(),
          ErrorCode::LengthMismatch, "labels do not match the feature sequence length");
  ForwardCache cache;
  const Eigen::VectorXd out = forward(model, feats.values, &cache);
  Eigen::VectorXd d_out;
  const double loss = head_loss(model.config().head, out, labels, loss_cfg, &d_out);
  grads = model.zero_gradients();
  backward(model, cache, d_out, grads);
  return loss;
}

/// One Adam step on a single sample. Returns the pre-update loss.
inline double backward_and_step(SequenceModel& model, const FeatureSequence& feats, const LabelBundle& labels,
                                const LossConfig& loss_cfg, OptimizerState& opt) {
  Gradients grads;
  const double loss = loss_and_gradients(model, feats, labels, loss_cfg, grads);
  adam_step(model, grads, opt);
  return loss;
}

/// Per-sample updates, sample order reshuffled every epoch from the schedule seed.
inline TrainingLog train(SequenceModel& model, const std::vector<TrainingExample>& dataset, const Schedule& schedule,
                         const LossConfig& loss_cfg = {}) {
  require(!dataset.empty(), ErrorCode::EmptyInput, "training set is empty");
  loss_cfg.validate();
  for (const auto& ex : dataset) {
    require(ex.features && ex.labels, ErrorCode::InvalidArgument, "null training example");
    require(ex.features->dim() == model.config().input_dim, ErrorCode::DimensionMismatch,
            "training features have dimension " + std::to_string(ex.features->dim()) + ", model expects " +
                std::to_string(model.config().input_dim));
  }
  OptimizerState opt(model, AdamConfig{.learning_rate = schedule.learning_rate, .clip_norm = schedule.clip_norm});
  std::mt19937_64 rng(schedule.shuffle_seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingLog log;
  for (int epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (const std::size_t i : order) {
      total += backward_and_step(model, *dataset[i].features, *dataset[i].labels, loss_cfg, opt);
    }
    log.epoch_mean_loss.push_back(total / static_cast<double>(dataset.size()));
  }
  return log;
}

}  // namespace repseg
