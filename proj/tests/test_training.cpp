#include <gtest/gtest.h>

#include "repseg/harness/synth.hpp"
#include "repseg/neural/gradcheck.hpp"
#include "repseg/neural/train.hpp"
#include "test_util.hpp"

using namespace repseg;
using namespace repseg::testing;

namespace {

FeatureSequence random_features(Rng& rng, int T, int D) {
  FeatureSequence f{Eigen::MatrixXd(T, D), FeatureVariant::Raw, std::vector<std::uint8_t>(static_cast<std::size_t>(T), 0)};
  for (Eigen::Index i = 0; i < f.values.size(); ++i) f.values.data()[i] = uniform(rng, -1, 1);
  return f;
}

bool same_parameters(const SequenceModel& a, const SequenceModel& b) {
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    if (a.param(i) != b.param(i)) return false;
  return true;
}

}  // namespace

TEST(GradCheck, DefaultMatrixBelowTolerance) {
  const auto configs = default_grad_check_configs();
  ASSERT_EQ(configs.size(), 18u);
  for (const auto& cfg : configs) {
    const auto rep = grad_check(cfg, kGradCheckFrames);
    EXPECT_LT(rep.max_relative_error(), kGradCheckTolerance)
        << to_string(cfg.head) << " layers=" << cfg.lstm_layers << " conv=" << cfg.use_conv;
    EXPECT_EQ(rep.tensors.size(), init_model(cfg).parameters().size());
    for (const auto& t : rep.tensors) EXPECT_GT(t.max_abs_numeric, 0.0) << t.name;
  }
}

TEST(GradCheck, LongerSequenceAllHeads) {
  for (const Head head : {Head::Binary, Head::Density, Head::Count}) {
    ModelConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dim = 12;
    cfg.head = head;
    cfg.lstm_layers = 2;
    cfg.seed = 99;
    EXPECT_LT(grad_check(cfg, 20).max_relative_error(), 1e-4) << to_string(head);
  }
}

TEST(GradCheck, WeightedLossTerms) {
  ModelConfig cfg;
  cfg.input_dim = 6;
  cfg.hidden_dim = 12;
  cfg.seed = 5;
  for (const LossConfig lc : {LossConfig{1.0, 0.0, 1e-8}, LossConfig{0.0, 1.0, 1e-8}, LossConfig{0.3, 2.5, 1e-6}}) {
    cfg.head = Head::Density;
    EXPECT_LT(grad_check(cfg, 15, lc).max_relative_error(), 1e-4);
    cfg.head = Head::Binary;
    EXPECT_LT(grad_check(cfg, 15, lc).max_relative_error(), 1e-4);
  }
}

TEST(GradCheck, UnusedInputWeightsGetZeroGradient) {
  const auto model = init_model(default_grad_check_configs().front());
  FeatureSequence zeros{Eigen::MatrixXd::Zero(10, 6), FeatureVariant::Raw, std::vector<std::uint8_t>(10, 0)};
  const auto labels = make_labels(RepetitionAnnotation({{2, 7}}, 10));
  Gradients g;
  loss_and_gradients(model, zeros, labels, {}, g);
  EXPECT_TRUE(g[model.lstm_w_input(0)].isZero(0.0));
  const auto rep = grad_check(model, zeros, labels);
  EXPECT_EQ(rep.tensors[model.lstm_w_input(0)].max_abs_numeric, 0.0);
  EXPECT_EQ(rep.tensors[model.lstm_w_input(0)].max_relative_error, 0.0);
  EXPECT_LT(rep.max_relative_error(), 1e-4);
}

TEST(GradCheck, RepeatedRunsAgreeExactly) {
  const auto cfg = default_grad_check_configs()[7];
  const auto a = grad_check(cfg, 12), b = grad_check(cfg, 12);
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    EXPECT_EQ(a.tensors[i].max_relative_error, b.tensors[i].max_relative_error);
    EXPECT_EQ(a.tensors[i].max_abs_analytic, b.tensors[i].max_abs_analytic);
  }
}

TEST(BackwardAndStep, SingleStepDescends) {
  int decreased = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(1000 + trial);
    ModelConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dim = 8;
    cfg.head = trial % 3 == 0 ? Head::Binary : (trial % 3 == 1 ? Head::Density : Head::Count);
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto model = init_model(cfg);
    const int T = uniform_int(rng, 10, 30);
    const auto feats = random_features(rng, T, 4);
    const auto labels = make_labels(random_annotation(rng, T, 3));
    OptimizerState opt(model, AdamConfig{.learning_rate = 1e-3});
    const double before = backward_and_step(model, feats, labels, {}, opt);
    Gradients g;
    const double after = loss_and_gradients(model, feats, labels, {}, g);
    if (after < before) ++decreased;
  }
  EXPECT_GE(decreased, 95);
}

TEST(BackwardAndStep, ZeroLearningRateLeavesParameters) {
  Rng rng(1);
  auto model = init_model(default_grad_check_configs()[3]);
  const auto before = model;
  OptimizerState opt(model, AdamConfig{.learning_rate = 0.0});
  const auto feats = random_features(rng, 12, 6);
  backward_and_step(model, feats, make_labels(RepetitionAnnotation({{1, 6}}, 12)), {}, opt);
  EXPECT_TRUE(same_parameters(model, before));
}

TEST(BackwardAndStep, LabelLengthMismatch) {
  Rng rng(2);
  auto model = init_model(default_grad_check_configs()[0]);
  OptimizerState opt(model, AdamConfig{});
  EXPECT_ERROR_CODE(backward_and_step(model, random_features(rng, 12, 6), make_labels(RepetitionAnnotation({}, 11)), {}, opt),
                    ErrorCode::LengthMismatch);
}

TEST(Train, ZeroEpochsAndDeterminism) {
  Rng rng(3);
  std::vector<FeatureSequence> feats;
  std::vector<LabelBundle> labels;
  for (int i = 0; i < 4; ++i) {
    const int T = uniform_int(rng, 10, 20);
    feats.push_back(random_features(rng, T, 6));
    labels.push_back(make_labels(random_annotation(rng, T, 3)));
  }
  std::vector<TrainingExample> data;
  for (int i = 0; i < 4; ++i) data.push_back({&feats[static_cast<std::size_t>(i)], &labels[static_cast<std::size_t>(i)]});

  const auto cfg = default_grad_check_configs()[9];
  auto untouched = init_model(cfg);
  Schedule none;
  none.epochs = 0;
  EXPECT_TRUE(train(untouched, data, none).epoch_mean_loss.empty());
  EXPECT_TRUE(same_parameters(untouched, init_model(cfg)));

  Schedule s;
  s.epochs = 5;
  s.shuffle_seed = 17;
  auto a = init_model(cfg), b = init_model(cfg);
  const auto log_a = train(a, data, s), log_b = train(b, data, s);
  EXPECT_EQ(log_a, log_b);
  EXPECT_EQ(log_a.epoch_mean_loss.size(), 5u);
  EXPECT_TRUE(same_parameters(a, b));

  EXPECT_ERROR_CODE(train(a, {}, s), ErrorCode::EmptyInput);
  FeatureSequence wrong = random_features(rng, 10, 5);
  EXPECT_ERROR_CODE(train(a, {{&wrong, &labels[0]}}, s), ErrorCode::DimensionMismatch);
}

TEST(Train, LossDropsOnSyntheticSequences) {
  SynthParams p;
  p.n_sequences = 10;
  p.reps_min = 2;
  p.reps_max = 4;
  p.rep_duration_mean = 16;
  p.gap_mean = 6;
  p.seed = 5;
  FeaturePipeline pipe;
  pipe.variant = FeatureVariant::Angles;
  std::vector<FeatureSequence> feats;
  std::vector<LabelBundle> labels;
  for (const auto& s : synth_generate(p)) {
    feats.push_back(pipe.extract(s.skeleton));
    labels.push_back(make_labels(s.annotation));
  }
  const auto stats = fit_standardize(feats);
  for (auto& f : feats) f = apply_standardize(stats, f);
  std::vector<TrainingExample> data;
  for (std::size_t i = 0; i < feats.size(); ++i) data.push_back({&feats[i], &labels[i]});

  ModelConfig cfg;
  cfg.input_dim = feats.front().dim();
  cfg.hidden_dim = 16;
  cfg.head = Head::Density;
  cfg.seed = 1;
  auto model = init_model(cfg);
  Schedule s;
  s.epochs = 200;
  s.learning_rate = 3e-3;
  s.shuffle_seed = 2;
  const auto log = train(model, data, s);
  ASSERT_EQ(log.epoch_mean_loss.size(), 200u);
  EXPECT_LE(log.epoch_mean_loss.back(), 0.2 * log.epoch_mean_loss.front())
      << "first " << log.epoch_mean_loss.front() << " last " << log.epoch_mean_loss.back();
}
