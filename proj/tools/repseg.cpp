// repseg command-line tool.
//
//   repseg ingest    --skeleton <csv|dir> --out <dataset dir> [--meta --annotation --id ...]
//   repseg synth     --out <dir> [--n --seed --config ...]
//   repseg train     --config run.json --out model.json [overrides]
//   repseg eval      --config run.json [overrides]          (cross-validation)
//   repseg eval      --model model.json --data <dir>        (score a trained model)
//   repseg segment   --model model.json --skeleton <csv> [--meta --head --out]
//   repseg gradcheck [--head --layers --conv --frames --tolerance]
//
// Exit codes: 0 success, 2 usage, 3 data, 4 numeric. Failures print one JSON
// record on stderr: {"error":{"code":...,"category":...,"message":...}}.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "repseg/repseg.hpp"

namespace fs = std::filesystem;
using namespace repseg;

namespace {

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 3;
}

int report_error(std::string_view code, ErrorCategory cat, const std::string& message) {
  const Json record{{"error", {{"code", code}, {"category", to_string(cat)}, {"message", message}}}};
  std::cerr << record.dump() << "\n";
  return exit_code(cat);
}

Json read_json_file(const fs::path& p) { return detail::parse_json_text(read_text_file(p), p.string()); }

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    write_text_file(path, text);
}

// ---------------------------------------------------------------------------
// Shared option groups

struct RunOverrides {
  std::string config;
  std::string data;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::string head;
  std::string variant;
  std::optional<int> layers;
  std::optional<int> hidden;
  std::optional<bool> conv;
  std::optional<int> folds;
  std::string scope;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string output_dir;
  bool subject_disjoint = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", config, "Run configuration JSON");
    cmd->add_option("--data", data, "Dataset directory (overrides the config)");
    cmd->add_option("--epochs", epochs, "Training epochs");
    cmd->add_option("--lr", lr, "Adam learning rate");
    cmd->add_option("--head", head, "binary | density | count");
    cmd->add_option("--variant", variant, "raw | angles | concat");
    cmd->add_option("--layers", layers, "LSTM layers (1-3)");
    cmd->add_option("--hidden", hidden, "LSTM hidden size (0: twice the input dimension)");
    cmd->add_option("--conv", conv, "Use the temporal convolution (true/false)");
    cmd->add_option("--folds", folds, "Cross-validation folds");
    cmd->add_option("--scope", scope, "general | exercise_specific");
    cmd->add_option("--seed", seed, "Experiment seed");
    cmd->add_option("--threads", threads, "Parallel fold workers");
    cmd->add_option("--output-dir", output_dir, "Directory for run artifacts");
    cmd->add_flag("--subject-disjoint", subject_disjoint, "Keep each subject within one fold");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_experiment_config(config);
    if (!data.empty()) {
      c.dataset_path = data;
      c.synthetic.reset();
    }
    if (epochs) c.schedule.epochs = *epochs;
    if (lr) c.schedule.learning_rate = *lr;
    if (!head.empty()) c.model.head = parse_head(head);
    if (!variant.empty()) c.variant = parse_feature_variant(variant);
    if (layers) c.model.lstm_layers = *layers;
    if (hidden) c.model.hidden_dim = *hidden;
    if (conv) c.model.use_conv = *conv;
    if (folds) c.folds = *folds;
    if (!scope.empty()) c.scope = parse_scope(scope);
    if (seed) c.seed = *seed;
    if (threads) c.threads = *threads;
    if (!output_dir.empty()) c.output_dir = output_dir;
    if (subject_disjoint) c.subject_disjoint = true;
    return c;
  }
};

struct DecodeOverrides {
  std::optional<double> threshold;
  std::optional<int> min_segment;
  std::optional<int> min_gap;
  std::optional<double> prominence;
  std::optional<int> distance;
  std::optional<double> floor;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--binary-threshold", threshold, "Binary head: between-repetition threshold");
    cmd->add_option("--min-segment", min_segment, "Binary head: shortest kept segment (frames)");
    cmd->add_option("--min-gap", min_gap, "Binary head: gaps shorter than this are merged (frames)");
    cmd->add_option("--peak-prominence", prominence, "Density head: minimum prominence (fraction of max)");
    cmd->add_option("--peak-distance", distance, "Density head: minimum peak distance (frames)");
    cmd->add_option("--boundary-floor", floor, "Density head: boundary floor (fraction of peak)");
  }

  DecodeParams apply(DecodeParams p) const {
    if (threshold) p.binary_threshold = *threshold;
    if (min_segment) p.min_segment_frames = *min_segment;
    if (min_gap) p.min_gap_frames = *min_gap;
    if (prominence) p.peak_min_prominence = *prominence;
    if (distance) p.peak_min_distance_frames = *distance;
    if (floor) p.boundary_floor = *floor;
    p.validate();
    return p;
  }
};

// Model files are checkpoints with an optional "decode" record and "sigma_fraction".
struct ModelFile {
  Checkpoint checkpoint;
  DecodeParams decode;
};

ModelFile load_model_file(const fs::path& path) {
  const Json j = read_json_file(path);
  ModelFile m{checkpoint_from_json(j), {}};
  if (j.contains("decode")) m.decode = decode_params_from_json(j.at("decode"));
  return m;
}

// ---------------------------------------------------------------------------
// Subcommands

struct IngestArgs {
  std::string skeleton, meta, annotation, out, id;
  std::string exercise, subject, dataset, population;
  double frame_rate = 0;
  bool allow_unannotated = false;
};

Sample ingest_one(const IngestArgs& a, const fs::path& csv) {
  const bool single = fs::is_regular_file(a.skeleton);
  Sample s = [&] {
    if (!single || (a.meta.empty() && a.annotation.empty())) return load_sample(csv, !a.allow_unannotated);
    const std::string meta = a.meta.empty() ? std::string{} : read_text_file(a.meta);
    SkeletonSequence seq = parse_skeleton(read_text_file(csv), meta);
    RepetitionAnnotation ann({}, seq.frames());
    if (!a.annotation.empty()) {
      ann = parse_annotation(read_text_file(a.annotation));
      require(ann.length() == seq.frames(), ErrorCode::LengthMismatch,
              "annotation length " + std::to_string(ann.length()) + " vs " + std::to_string(seq.frames()) + " frames");
    } else {
      require(a.allow_unannotated, ErrorCode::Io, "no annotation given (use --allow-unannotated)");
    }
    return Sample{csv.stem().string(), std::move(seq), std::move(ann)};
  }();
  if (single && !a.id.empty()) s.id = a.id;

  SequenceInfo info = s.skeleton.info();
  if (!a.exercise.empty()) info.exercise_id = a.exercise;
  if (!a.subject.empty()) info.subject_id = a.subject;
  if (!a.dataset.empty()) info.dataset_id = a.dataset;
  if (!a.population.empty()) info.population = parse_population(a.population);
  if (a.frame_rate > 0) info.frame_rate = a.frame_rate;
  s.skeleton = s.skeleton.with_info(info);
  s.annotation = RepetitionAnnotation(s.annotation.segments(), s.annotation.length(), info.exercise_id, info.subject_id);
  // Reject recordings that cannot be normalized before they reach a dataset.
  normalize(s.skeleton, NormalizationSpec{});
  return s;
}

int run_ingest(const IngestArgs& a) {
  std::vector<fs::path> inputs;
  if (fs::is_directory(a.skeleton)) {
    require(a.meta.empty() && a.annotation.empty() && a.id.empty(), ErrorCode::InvalidArgument,
            "--meta, --annotation and --id apply to a single file");
    for (const auto& e : fs::directory_iterator(a.skeleton))
      if (e.is_regular_file() && e.path().extension() == ".csv") inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    require(!inputs.empty(), ErrorCode::EmptyInput, "no .csv files in '" + a.skeleton + "'");
  } else {
    require(fs::is_regular_file(a.skeleton), ErrorCode::Io, "'" + a.skeleton + "' not found");
    inputs.push_back(a.skeleton);
  }
  Json summary = Json::array();
  for (const auto& p : inputs) {
    try {
      const Sample s = ingest_one(a, p);
      save_sample(a.out, s);
      summary.push_back({{"id", s.id},
                         {"frames", s.skeleton.frames()},
                         {"joints", s.skeleton.joints()},
                         {"count", s.annotation.count()},
                         {"exercise", s.skeleton.info().exercise_id}});
    } catch (const Error& e) {
      throw Error(e.code(), p.filename().string() + ": " + e.message());
    }
  }
  std::cout << Json{{"ingested", summary}}.dump(2) << "\n";
  return 0;
}

struct SynthArgs {
  std::string config, out;
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> reps_min, reps_max;
  std::optional<double> noise;
};

int run_synth(const SynthArgs& a) {
  SynthParams p;
  if (!a.config.empty()) {
    const Json j = read_json_file(a.config);
    if (j.contains("dataset")) {
      require(j.at("dataset").contains("synthetic"), ErrorCode::MalformedJson, "run config has no dataset.synthetic");
      p = synth_params_from_json(j.at("dataset").at("synthetic"));
    } else {
      p = synth_params_from_json(j);
    }
  }
  if (a.n) p.n_sequences = *a.n;
  if (a.seed) p.seed = *a.seed;
  if (a.reps_min) p.reps_min = *a.reps_min;
  if (a.reps_max) p.reps_max = *a.reps_max;
  if (a.noise) p.joint_noise_std = *a.noise;
  p.validate();
  const Dataset ds = synth_generate(p);
  save_dataset(a.out, ds);
  write_text_file(fs::path(a.out) / "synth_params.json", synth_params_json(p).dump(2) + "\n");
  std::cout << Json{{"sequences", ds.size()}, {"out", a.out}}.dump() << "\n";
  return 0;
}

struct TrainArgs {
  RunOverrides run;
  std::string out;
};

int run_train(const TrainArgs& a) {
  ExperimentConfig cfg = a.run.resolve();
  cfg.validate();
  const PreparedData data = prepare_data(cfg, load_experiment_dataset(cfg));
  std::vector<std::size_t> all(data.samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const FoldOutcome fit = run_fold(cfg, data, all, {}, mix_seed(cfg.seed, 0xFFFF));
  Json j = checkpoint_json(fit.checkpoint);
  j["decode"] = decode_params_json(cfg.decode);
  j["sigma_fraction"] = cfg.sigma_fraction;
  j["training"] = {{"samples", data.samples.size()}, {"epoch_mean_loss", fit.log.epoch_mean_loss}};
  write_text_file(a.out, j.dump() + "\n");
  const auto& losses = fit.log.epoch_mean_loss;
  std::cout << Json{{"out", a.out},
                    {"samples", data.samples.size()},
                    {"final_loss", losses.empty() ? Json(nullptr) : Json(losses.back())}}
                   .dump()
            << "\n";
  return 0;
}

struct EvalArgs {
  RunOverrides run;
  DecodeOverrides decode;
  std::string model;
  std::string out;
};

int run_eval_model(const EvalArgs& a) {
  require(!a.run.data.empty(), ErrorCode::InvalidArgument, "--model needs --data");
  const ModelFile mf = load_model_file(a.model);
  const DecodeParams params = a.decode.apply(mf.decode);
  const Head head = mf.checkpoint.model.config().head;
  const Dataset ds = load_dataset(a.run.data);
  std::vector<SampleMetrics> rows;
  for (const auto& s : ds) {
    try {
      const FeatureSequence f = mf.checkpoint.pipeline.apply(s.skeleton);
      const auto sp = decode_output(head, forward(mf.checkpoint.model, f.values), params);
      rows.push_back(score_sample(s.id, s.skeleton.info().exercise_id, s.annotation.segments(), sp.prediction.count,
                                  head == Head::Count ? nullptr : &sp.prediction.segments));
      if (!a.run.output_dir.empty()) {
        Json j = segment_prediction_json(sp.prediction, s.skeleton.frames(), s.skeleton.info().exercise_id,
                                         s.skeleton.info().subject_id);
        write_text_file(fs::path(a.run.output_dir) / "segments" / (s.id + ".json"), j.dump(2) + "\n");
      }
    } catch (const Error& e) {
      throw Error(e.code(), s.id + ": " + e.message());
    }
  }
  Json per_ex = Json::array();
  for (const auto& r : aggregate(rows, Grouping::PerExercise)) per_ex.push_back(metrics_report_json(r));
  const Json report{{"overall", metrics_report_json(aggregate(rows, Grouping::Overall).front())},
                    {"per_exercise", per_ex}};
  write_output(a.out, report.dump(2) + "\n");
  return 0;
}

int run_eval(const EvalArgs& a) {
  if (!a.model.empty()) return run_eval_model(a);
  ExperimentConfig cfg = a.run.resolve();
  cfg.decode = a.decode.apply(cfg.decode);
  const ExperimentResult r = run_experiment(cfg);
  Json report = experiment_report_json(cfg, r);
  report["seconds"] = r.seconds;
  if (!r.run_dir.empty()) report["run_dir"] = r.run_dir.string();
  write_output(a.out, report.dump(2) + "\n");
  return 0;
}

struct SegmentArgs {
  std::string model, skeleton, meta, head, out;
  DecodeOverrides decode;
};

int run_segment(const SegmentArgs& a) {
  const ModelFile mf = load_model_file(a.model);
  const Head head = mf.checkpoint.model.config().head;
  if (!a.head.empty()) {
    const Head wanted = parse_head(a.head);
    require(wanted == head, ErrorCode::HeadMismatch,
            "requested head '" + a.head + "' but the model has '" + std::string(to_string(head)) + "'");
  }
  const std::string meta = a.meta.empty() ? std::string{} : read_text_file(a.meta);
  const SkeletonSequence seq = parse_skeleton(read_text_file(a.skeleton), meta);
  const FeatureSequence f = mf.checkpoint.pipeline.apply(seq);
  const auto sp = decode_output(head, forward(mf.checkpoint.model, f.values), a.decode.apply(mf.decode));
  Json j;
  if (head == Head::Count) {
    j = Json{{"length", seq.frames()},
             {"count", sp.prediction.count},
             {"raw_count", sp.raw_count},
             {"source", std::string(to_string(sp.prediction.source))},
             {"exercise", seq.info().exercise_id},
             {"subject", seq.info().subject_id}};
  } else {
    j = segment_prediction_json(sp.prediction, seq.frames(), seq.info().exercise_id, seq.info().subject_id);
  }
  write_output(a.out, j.dump(2) + "\n");
  return 0;
}

struct GradcheckArgs {
  std::string head;
  std::optional<int> layers;
  std::optional<bool> conv;
  int frames = kGradCheckFrames;
  double tolerance = kGradCheckTolerance;
  std::uint64_t seed = 7;
};

int run_gradcheck(const GradcheckArgs& a) {
  std::vector<ModelConfig> configs;
  for (const auto& c : default_grad_check_configs(a.seed)) {
    if (!a.head.empty() && c.head != parse_head(a.head)) continue;
    if (a.layers && c.lstm_layers != *a.layers) continue;
    if (a.conv && c.use_conv != *a.conv) continue;
    configs.push_back(c);
  }
  require(!configs.empty(), ErrorCode::InvalidArgument, "no gradient-check configuration matches the filters");
  double worst = 0.0;
  Json rows = Json::array();
  for (const auto& c : configs) {
    const auto rep = grad_check(c, a.frames);
    worst = std::max(worst, rep.max_relative_error());
    rows.push_back({{"head", std::string(to_string(c.head))},
                    {"layers", c.lstm_layers},
                    {"conv", c.use_conv},
                    {"max_relative_error", rep.max_relative_error()}});
  }
  std::cout << Json{{"configs", rows}, {"max_relative_error", worst}, {"tolerance", a.tolerance}}.dump(2) << "\n";
  require(worst < a.tolerance, ErrorCode::GradientCheckFailed,
          "max relative error " + format_double(worst) + " exceeds " + format_double(a.tolerance));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repetition segmentation and counting for skeleton sequences"};
  app.require_subcommand(1);

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate recordings and copy them into a dataset directory");
  c_ingest->add_option("--skeleton", ingest.skeleton, "Skeleton CSV, or a directory of CSV/sidecar/annotation files")
      ->required();
  c_ingest->add_option("--meta", ingest.meta, "Sidecar metadata JSON (single file)");
  c_ingest->add_option("--annotation", ingest.annotation, "Annotation JSON (single file)");
  c_ingest->add_option("--out", ingest.out, "Dataset directory")->required();
  c_ingest->add_option("--id", ingest.id, "Recording id (single file)");
  c_ingest->add_option("--exercise", ingest.exercise, "Override the exercise id");
  c_ingest->add_option("--subject", ingest.subject, "Override the subject id");
  c_ingest->add_option("--dataset", ingest.dataset, "Override the dataset id");
  c_ingest->add_option("--population", ingest.population, "healthy | patient | unknown");
  c_ingest->add_option("--frame-rate", ingest.frame_rate, "Override the frame rate (Hz)");
  c_ingest->add_flag("--allow-unannotated", ingest.allow_unannotated, "Accept recordings without annotations");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic dataset with exact annotations");
  c_synth->add_option("--config", synth.config, "Synthetic parameters JSON, or a run config with dataset.synthetic");
  c_synth->add_option("--n", synth.n, "Number of sequences");
  c_synth->add_option("--seed", synth.seed, "Generator seed");
  c_synth->add_option("--reps-min", synth.reps_min, "Fewest repetitions per sequence");
  c_synth->add_option("--reps-max", synth.reps_max, "Most repetitions per sequence");
  c_synth->add_option("--noise", synth.noise, "Joint noise standard deviation (meters)");
  c_synth->add_option("--out", synth.out, "Output dataset directory")->required();

  TrainArgs train_args;
  auto* c_train = app.add_subcommand("train", "Train one model on a whole dataset");
  train_args.run.add_to(c_train);
  c_train->add_option("--out", train_args.out, "Model file to write")->required();

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Cross-validate a configuration, or score a trained model");
  eval.run.add_to(c_eval);
  eval.decode.add_to(c_eval);
  c_eval->add_option("--model", eval.model, "Trained model file (skips cross-validation)");
  c_eval->add_option("--out", eval.out, "Report file (default: stdout)");

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Segment one recording with a trained model");
  c_seg->add_option("--model", seg.model, "Trained model file")->required();
  c_seg->add_option("--skeleton", seg.skeleton, "Skeleton CSV")->required();
  c_seg->add_option("--meta", seg.meta, "Sidecar metadata JSON");
  c_seg->add_option("--head", seg.head, "Expected model head");
  c_seg->add_option("--out", seg.out, "Segment JSON file (default: stdout)");
  seg.decode.add_to(c_seg);

  GradcheckArgs gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
  c_gc->add_option("--head", gc.head, "Restrict to one head");
  c_gc->add_option("--layers", gc.layers, "Restrict to one LSTM depth");
  c_gc->add_option("--conv", gc.conv, "Restrict to convolution on or off");
  c_gc->add_option("--frames", gc.frames, "Sequence length");
  c_gc->add_option("--tolerance", gc.tolerance, "Maximum accepted relative error");
  c_gc->add_option("--seed", gc.seed, "Model seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("Usage", ErrorCategory::Usage, e.what());
  }

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_synth) return run_synth(synth);
    if (*c_train) return run_train(train_args);
    if (*c_eval) return run_eval(eval);
    if (*c_seg) return run_segment(seg);
    if (*c_gc) return run_gradcheck(gc);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.category(), e.message());
  } catch (const fs::filesystem_error& e) {
    return report_error(to_string(ErrorCode::Io), ErrorCategory::Data, e.what());
  } catch (const Json::exception& e) {
    return report_error(to_string(ErrorCode::MalformedJson), ErrorCategory::Data, e.what());
  } catch (const std::exception& e) {
    return report_error("Internal", ErrorCategory::Data, e.what());
  }
  return 2;
}
