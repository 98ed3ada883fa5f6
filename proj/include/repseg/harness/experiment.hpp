#pragma once

// Cross-validated experiments: configuration, fold training, scoring, and the
// run directory (checkpoints, reports, per-sample segments, count scatter).

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "repseg/decode.hpp"
#include "repseg/error.hpp"
#include "repseg/features.hpp"
#include "repseg/harness/dataset.hpp"
#include "repseg/harness/folds.hpp"
#include "repseg/harness/synth.hpp"
#include "repseg/labels.hpp"
#include "repseg/metrics.hpp"
#include "repseg/neural/checkpoint.hpp"
#include "repseg/neural/train.hpp"
#include "repseg/seed.hpp"

namespace repseg {

inline constexpr int kRunConfigVersion = 1;

enum class Scope { General, ExerciseSpecific };

inline std::string_view to_string(Scope s) { return s == Scope::General ? "general" : "exercise_specific"; }

inline Scope parse_scope(std::string_view s) {
  if (s == "general") return Scope::General;
  if (s == "exercise_specific") return Scope::ExerciseSpecific;
  fail(ErrorCode::InvalidArgument, "unknown scope '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::string dataset_path;
  std::optional<SynthParams> synthetic;  // used when dataset_path is empty
  FeatureVariant variant = FeatureVariant::Raw;
  AngleSpec angles = default_angle_spec();
  bool standardize = true;
  NormalizationSpec normalization;
  ModelConfig model;  // input_dim is derived from the features
  LossConfig loss;
  Schedule schedule;
  DecodeParams decode;
  double sigma_fraction = kDefaultSigmaFraction;
  int folds = 5;
  Scope scope = Scope::General;
  bool subject_disjoint = false;
  std::uint64_t seed = 0;
  int threads = 1;          // not part of the config hash
  std::string output_dir;   // empty: no artifacts; not part of the config hash

  void validate() const {
    require(folds >= 2, ErrorCode::InvalidArgument, "folds must be >= 2");
    require(!dataset_path.empty() || synthetic.has_value(), ErrorCode::InvalidArgument,
            "config needs a dataset path or synthetic parameters");
    if (!dataset_path.empty())
      require(std::filesystem::exists(dataset_path), ErrorCode::Io, "dataset path '" + dataset_path + "' does not exist");
    require(schedule.epochs >= 0 && schedule.learning_rate >= 0, ErrorCode::InvalidArgument,
            "epochs and learning rate must be nonnegative");
    require(threads >= 1, ErrorCode::InvalidArgument, "threads must be >= 1");
    loss.validate();
    decode.validate();
  }
};

inline Json experiment_config_json(const ExperimentConfig& c) {
  Json dataset = Json::object();
  if (!c.dataset_path.empty()) dataset["path"] = c.dataset_path;
  if (c.synthetic) dataset["synthetic"] = synth_params_json(*c.synthetic);
  Json model = model_config_json(c.model);
  model.erase("input_dim");
  return Json{{"version", kRunConfigVersion},
              {"dataset", dataset},
              {"features",
               {{"variant", std::string(to_string(c.variant))},
                {"angle_spec", angle_spec_json(c.angles)},
                {"standardize", c.standardize}}},
              {"normalization", normalization_json(c.normalization)},
              {"model", model},
              {"loss", {{"kl_weight", c.loss.kl_weight}, {"l1_weight", c.loss.l1_weight}, {"epsilon", c.loss.epsilon}}},
              {"schedule",
               {{"epochs", c.schedule.epochs},
                {"learning_rate", c.schedule.learning_rate},
                {"shuffle_seed", c.schedule.shuffle_seed},
                {"clip_norm", c.schedule.clip_norm}}},
              {"decode", decode_params_json(c.decode)},
              {"sigma_fraction", c.sigma_fraction},
              {"folds", c.folds},
              {"scope", std::string(to_string(c.scope))},
              {"subject_disjoint", c.subject_disjoint},
              {"seed", c.seed},
              {"threads", c.threads},
              {"output_dir", c.output_dir}};
}

/// Missing keys keep the values already in `c`. `base_dir` resolves relative file references.
inline ExperimentConfig experiment_config_from_json(const Json& j, ExperimentConfig c = {},
                                                    const std::filesystem::path& base_dir = {}) {
  try {
    require(j.is_object(), ErrorCode::MalformedJson, "run config must be an object");
    const int version = j.value("version", kRunConfigVersion);
    require(version == kRunConfigVersion, ErrorCode::MalformedJson,
            "unsupported run config version " + std::to_string(version));
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return (path.is_relative() && !base_dir.empty() ? base_dir / path : path).string();
    };
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      if (d.contains("path")) c.dataset_path = resolve(d.at("path").get<std::string>());
      if (d.contains("synthetic")) c.synthetic = synth_params_from_json(d.at("synthetic"));
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      if (f.contains("variant")) c.variant = parse_feature_variant(f.at("variant").get<std::string>());
      if (f.contains("angle_spec")) {
        const auto& a = f.at("angle_spec");
        c.angles = a.is_string() ? angle_spec_from_json(detail::parse_json_text(
                                       read_text_file(resolve(a.get<std::string>())), "angle spec"))
                                 : angle_spec_from_json(a);
      }
      c.standardize = f.value("standardize", c.standardize);
    }
    if (j.contains("normalization")) c.normalization = normalization_from_json(j.at("normalization"), c.normalization);
    if (j.contains("model")) c.model = model_config_from_json(j.at("model"), c.model);
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      c.loss.kl_weight = l.value("kl_weight", c.loss.kl_weight);
      c.loss.l1_weight = l.value("l1_weight", c.loss.l1_weight);
      c.loss.epsilon = l.value("epsilon", c.loss.epsilon);
    }
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      c.schedule.epochs = s.value("epochs", c.schedule.epochs);
      c.schedule.learning_rate = s.value("learning_rate", c.schedule.learning_rate);
      c.schedule.shuffle_seed = s.value("shuffle_seed", c.schedule.shuffle_seed);
      c.schedule.clip_norm = s.value("clip_norm", c.schedule.clip_norm);
    }
    if (j.contains("decode")) c.decode = decode_params_from_json(j.at("decode"), c.decode);
    c.sigma_fraction = j.value("sigma_fraction", c.sigma_fraction);
    c.folds = j.value("folds", c.folds);
    if (j.contains("scope")) c.scope = parse_scope(j.at("scope").get<std::string>());
    c.subject_disjoint = j.value("subject_disjoint", c.subject_disjoint);
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("run config: ") + e.what());
  }
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(detail::parse_json_text(read_text_file(path), "run config"), {},
                                     path.parent_path());
}

/// Hash of everything that influences results (excludes threads and output_dir).
inline std::string config_hash(const ExperimentConfig& c) {
  Json j = experiment_config_json(c);
  j.erase("threads");
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

/// Samples with their unstandardized features and training targets.
struct PreparedData {
  Dataset samples;
  std::vector<FeatureSequence> features;
  std::vector<LabelBundle> labels;
};

inline PreparedData prepare_data(const ExperimentConfig& cfg, Dataset samples) {
  PreparedData d{std::move(samples), {}, {}};
  FeaturePipeline pipe{cfg.normalization, cfg.variant, cfg.angles, std::nullopt};
  for (const auto& s : d.samples) {
    try {
      d.features.push_back(pipe.extract(s.skeleton));
      d.labels.push_back(make_labels(s.annotation, cfg.sigma_fraction));
    } catch (const Error& e) {
      throw Error(e.code(), "sample " + s.id + ": " + e.message());
    }
  }
  return d;
}

inline Dataset load_experiment_dataset(const ExperimentConfig& cfg) {
  return cfg.dataset_path.empty() ? synth_generate(*cfg.synthetic) : load_dataset(cfg.dataset_path);
}

struct SamplePrediction {
  std::size_t index = 0;  // into PreparedData
  SegmentPrediction prediction;
  double raw_count = 0.0;  // sum of the per-frame outputs
};

struct FoldOutcome {
  std::string scope;
  int fold = 0;
  Checkpoint checkpoint;
  TrainingLog log;
  std::vector<SamplePrediction> predictions;
};

/// Decodes one model output according to the head.
inline SamplePrediction decode_output(Head head, const Eigen::VectorXd& out, const DecodeParams& params) {
  SamplePrediction sp;
  sp.raw_count = out.sum();
  switch (head) {
    case Head::Binary: sp.prediction = segments_from_binary(out, params); break;
    case Head::Density: sp.prediction = segments_from_density(out, params); break;
    case Head::Count:
      sp.prediction.source = SegmentSource::CountHead;
      sp.prediction.count = count_from_prediction(sp.raw_count);
      break;
  }
  return sp;
}

/// Standardization stats and the model depend on the training indices only.
inline FoldOutcome run_fold(const ExperimentConfig& cfg, const PreparedData& data,
                            const std::vector<std::size_t>& train_idx, const std::vector<std::size_t>& test_idx,
                            std::uint64_t fold_seed) {
  require(!train_idx.empty(), ErrorCode::EmptyInput, "fold has no training samples");
  FeaturePipeline pipe{cfg.normalization, cfg.variant, cfg.angles, std::nullopt};
  if (cfg.standardize) {
    std::vector<const FeatureSequence*> train_feats;
    for (const auto i : train_idx) train_feats.push_back(&data.features[i]);
    pipe.stats = fit_standardize(train_feats);
  }
  auto prepared = [&](std::size_t i) {
    return pipe.stats ? apply_standardize(*pipe.stats, data.features[i]) : data.features[i];
  };

  std::vector<FeatureSequence> train_feats;
  train_feats.reserve(train_idx.size());
  for (const auto i : train_idx) train_feats.push_back(prepared(i));
  std::vector<TrainingExample> examples;
  for (std::size_t k = 0; k < train_idx.size(); ++k) examples.push_back({&train_feats[k], &data.labels[train_idx[k]]});

  ModelConfig mc = cfg.model;
  mc.input_dim = data.features[train_idx.front()].dim();
  mc.seed = mix_seed(fold_seed, 1);
  Schedule schedule = cfg.schedule;
  schedule.shuffle_seed = mix_seed(fold_seed ^ cfg.schedule.shuffle_seed, 2);

  FoldOutcome out;
  out.checkpoint.model = init_model(mc);
  out.log = train(out.checkpoint.model, examples, schedule, cfg.loss);
  out.checkpoint.pipeline = pipe;
  for (const auto i : test_idx) {
    const Eigen::VectorXd y = forward(out.checkpoint.model, prepared(i).values);
    SamplePrediction sp = decode_output(mc.head, y, cfg.decode);
    sp.index = i;
    out.predictions.push_back(std::move(sp));
  }
  return out;
}

struct ScopeResult {
  std::string scope;
  std::vector<FoldOutcome> folds;
  std::vector<SampleMetrics> samples;
  std::vector<MetricsReport> per_fold;
  MetricsReport overall;
  std::vector<MetricsReport> per_exercise;
};

struct ExperimentResult {
  std::string config_hash;
  std::vector<ScopeResult> scopes;
  MetricsReport overall;  // pooled over every scope
  std::vector<MetricsReport> per_exercise;
  std::vector<SampleMetrics> samples;
  std::filesystem::path run_dir;
  double seconds = 0.0;
};

inline SampleMetrics score_prediction(const PreparedData& data, const SamplePrediction& sp, Head head) {
  const auto& s = data.samples[sp.index];
  return score_sample(s.id, s.skeleton.info().exercise_id, s.annotation.segments(), sp.prediction.count,
                      head == Head::Count ? nullptr : &sp.prediction.segments);
}

namespace detail {

// Runs jobs on up to `threads` workers; each job owns its outputs.
template <typename Job>
void run_parallel(std::size_t n, int threads, Job job) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::mutex m;
  std::size_t next = 0;
  std::exception_ptr error;
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min<int>(threads, static_cast<int>(n)); ++w) {
    pool.emplace_back([&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard lock(m);
          if (next >= n || error) return;
          i = next++;
        }
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

inline void write_run_artifacts(const ExperimentConfig& cfg, const PreparedData& data, const ExperimentResult& result);

/// Cross-validates on already prepared data.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config_hash = config_hash(cfg);

  // Scope name -> member indices.
  std::vector<std::pair<std::string, std::vector<std::size_t>>> scopes;
  if (cfg.scope == Scope::General) {
    std::vector<std::size_t> all(data.samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    scopes.emplace_back("general", std::move(all));
  } else {
    std::map<std::string, std::vector<std::size_t>> by_ex;
    for (std::size_t i = 0; i < data.samples.size(); ++i) by_ex[data.samples[i].skeleton.info().exercise_id].push_back(i);
    for (auto& [ex, members] : by_ex) scopes.emplace_back(ex, std::move(members));
  }

  struct Job {
    std::size_t scope;
    int fold;
    std::vector<std::size_t> train, test;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < scopes.size(); ++s) {
    const auto& members = scopes[s].second;
    std::vector<FoldKey> keys;
    for (const auto i : members) {
      const auto& info = data.samples[i].skeleton.info();
      keys.push_back({data.samples[i].id, info.exercise_id, info.subject_id});
    }
    FoldSplit split;
    try {
      split = make_folds(keys, cfg.folds, mix_seed(cfg.seed, 1000 + s), cfg.subject_disjoint);
    } catch (const Error& e) {
      throw Error(e.code(), "scope '" + scopes[s].first + "': " + e.message());
    }
    for (int f = 0; f < cfg.folds; ++f) {
      Job job{s, f, {}, {}};
      for (const auto k : split.train_indices(f)) job.train.push_back(members[k]);
      for (const auto k : split.test_indices(f)) job.test.push_back(members[k]);
      jobs.push_back(std::move(job));
    }
  }

  std::vector<FoldOutcome> outcomes(jobs.size());
  detail::run_parallel(jobs.size(), cfg.threads, [&](std::size_t j) {
    const auto& job = jobs[j];
    try {
      outcomes[j] = run_fold(cfg, data, job.train, job.test,
                             mix_seed(cfg.seed, static_cast<std::uint64_t>(job.scope * 64 + job.fold)));
    } catch (const Error& e) {
      throw Error(e.code(), "scope '" + scopes[job.scope].first + "', fold " + std::to_string(job.fold) + ": " + e.message());
    }
    outcomes[j].scope = scopes[job.scope].first;
    outcomes[j].fold = job.fold;
  });

  const Head head = cfg.model.head;
  for (std::size_t s = 0; s < scopes.size(); ++s) {
    ScopeResult sr;
    sr.scope = scopes[s].first;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].scope != s) continue;
      std::vector<SampleMetrics> fold_samples;
      for (const auto& sp : outcomes[j].predictions) fold_samples.push_back(score_prediction(data, sp, head));
      if (!fold_samples.empty()) {
        auto rep = aggregate(fold_samples, Grouping::Overall).front();
        rep.group = "fold" + std::to_string(jobs[j].fold);
        sr.per_fold.push_back(rep);
      }
      sr.samples.insert(sr.samples.end(), fold_samples.begin(), fold_samples.end());
      sr.folds.push_back(std::move(outcomes[j]));
    }
    sr.overall = aggregate(sr.samples, Grouping::Overall).front();
    sr.per_exercise = aggregate(sr.samples, Grouping::PerExercise);
    result.samples.insert(result.samples.end(), sr.samples.begin(), sr.samples.end());
    result.scopes.push_back(std::move(sr));
  }
  result.overall = aggregate(result.samples, Grouping::Overall).front();
  result.per_exercise = aggregate(result.samples, Grouping::PerExercise);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!cfg.output_dir.empty()) {
    result.run_dir = std::filesystem::path(cfg.output_dir) / ("run-" + result.config_hash);
    write_run_artifacts(cfg, data, result);
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, prepare_data(cfg, load_experiment_dataset(cfg)));
}

// ---------------------------------------------------------------------------
// Artifacts

inline std::string method_label(const ExperimentConfig& cfg) {
  return std::string(to_string(cfg.model.head)) + "/" + std::string(to_string(cfg.variant)) + "/" +
         std::string(to_string(cfg.scope));
}

inline Json experiment_report_json(const ExperimentConfig& cfg, const ExperimentResult& r) {
  Json scopes = Json::array();
  for (const auto& s : r.scopes) {
    Json folds = Json::array();
    for (std::size_t f = 0; f < s.folds.size(); ++f) {
      Json fj{{"fold", s.folds[f].fold}, {"epoch_mean_loss", s.folds[f].log.epoch_mean_loss}};
      if (f < s.per_fold.size()) fj["metrics"] = metrics_report_json(s.per_fold[f]);
      folds.push_back(std::move(fj));
    }
    Json per_ex = Json::array();
    for (const auto& m : s.per_exercise) per_ex.push_back(metrics_report_json(m));
    scopes.push_back({{"scope", s.scope}, {"overall", metrics_report_json(s.overall)}, {"per_exercise", per_ex},
                      {"folds", folds}});
  }
  Json per_ex = Json::array();
  for (const auto& m : r.per_exercise) per_ex.push_back(metrics_report_json(m));
  return Json{{"version", kRunConfigVersion},
              {"config_hash", r.config_hash},
              {"method", method_label(cfg)},
              {"overall", metrics_report_json(r.overall)},
              {"per_exercise", per_ex},
              {"scopes", scopes}};
}

inline std::string csv_number(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

/// One row per exercise plus a "total" row: method,exercise,mae_abs,mae_norm,obo,iou,mae_f,n_samples.
inline std::string experiment_report_csv(const ExperimentConfig& cfg, const ExperimentResult& r) {
  std::string out = "method,exercise,mae_abs,mae_norm,obo,iou,mae_f,n_samples\n";
  const std::string method = method_label(cfg);
  auto row = [&](const MetricsReport& m, const std::string& name) {
    out += method + "," + name + "," + format_double(m.mae_abs) + "," + format_double(m.mae_norm) + "," +
           format_double(m.obo) + "," + csv_number(m.iou) + "," + csv_number(m.mae_f) + "," +
           std::to_string(m.n_samples) + "\n";
  };
  for (const auto& m : r.per_exercise) row(m, m.group);
  row(r.overall, "total");
  return out;
}

inline std::string counts_scatter_csv(const PreparedData& data, const ExperimentResult& r) {
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : data.samples) by_id[s.id] = &s;
  std::string out = "sample_id,exercise,gt_count,pred_count,population_tag\n";
  for (const auto& m : r.samples) {
    const auto* s = by_id.at(m.sample_id);
    out += m.sample_id + "," + m.exercise + "," + std::to_string(m.gt_count) + "," + std::to_string(m.pred_count) +
           "," + std::string(to_string(s->skeleton.info().population)) + "\n";
  }
  return out;
}

inline void write_run_artifacts(const ExperimentConfig& cfg, const PreparedData& data, const ExperimentResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir = r.run_dir;
  fs::create_directories(dir / "segments");
  fs::create_directories(dir / "checkpoints");
  write_text_file(dir / "run.json", experiment_config_json(cfg).dump(2) + "\n");
  write_text_file(dir / "report.json", experiment_report_json(cfg, r).dump(2) + "\n");
  write_text_file(dir / "report.csv", experiment_report_csv(cfg, r));
  write_text_file(dir / "counts_scatter.csv", counts_scatter_csv(data, r));
  for (const auto& s : r.scopes) {
    for (const auto& f : s.folds) {
      save_checkpoint(f.checkpoint, (dir / "checkpoints" / (s.scope + "_fold" + std::to_string(f.fold) + ".json")).string());
      for (const auto& sp : f.predictions) {
        const auto& sample = data.samples[sp.index];
        Json j = segment_prediction_json(sp.prediction, sample.skeleton.frames(), sample.skeleton.info().exercise_id,
                                         sample.skeleton.info().subject_id);
        j["raw_count"] = sp.raw_count;
        j["fold"] = f.fold;
        write_text_file(dir / "segments" / (sample.id + ".json"), j.dump(2) + "\n");
      }
    }
  }
}

}  // namespace repseg
