// Acceptance run: one PASS/FAIL line per criterion. Optional arguments select
// criteria by name (e.g. `acceptance A1 A3`); the default runs A1-A6.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include "oracles.hpp"
#include "repseg/repseg.hpp"
#include "test_util.hpp"

using namespace repseg;
using namespace repseg::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

Outcome a1_gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  bool every_tensor = true;
  const auto configs = default_grad_check_configs();
  for (const auto& cfg : configs) {
    const auto rep = grad_check(cfg, kGradCheckFrames, {}, 1e-5);
    for (const auto& t : rep.tensors) {
      worst = std::max(worst, t.max_relative_error);
      every_tensor = every_tensor && t.max_relative_error < kGradCheckTolerance;
    }
  }
  const double secs = seconds_since(t0);
  return {every_tensor && configs.size() == 18 && secs < 60,
          fmt("%zu configs, max relative error %.3g, %.1f s", configs.size(), worst, secs)};
}

Outcome a2_labels() {
  const auto t0 = Clock::now();
  Rng rng(2);
  int bad_mass = 0, bad_support = 0, bad_peak = 0;
  double worst_mass = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto ann = random_annotation(rng, uniform_int(rng, 1, 400), 15);
    const auto lb = make_labels(ann);
    const double err = std::abs(lb.density.sum() - lb.count);
    worst_mass = std::max(worst_mass, err);
    bad_mass += err > 1e-6;
    for (Eigen::Index t = 0; t < lb.density.size(); ++t)
      if ((lb.density(t) > 0) == (lb.binary(t) == 1.0)) {
        ++bad_support;
        break;
      }
    for (const auto& s : ann.segments()) {
      // The segment's mode sits at its midpoint and dominates its own frames.
      Eigen::Index arg = 0;
      const double peak = lb.density.segment(s.start, s.length()).maxCoeff(&arg);
      bad_peak += !(peak > 0 && std::abs(static_cast<double>(s.start + arg) - s.midpoint()) <= 0.5);
    }
  }
  const double secs = seconds_since(t0);
  return {bad_mass == 0 && bad_support == 0 && bad_peak == 0 && secs < 10,
          fmt("1000 annotations, worst |mass-count| %.2g, support violations %d, peak violations %d, %.2f s",
              worst_mass, bad_support, bad_peak, secs)};
}

Outcome a3_decoder() {
  const auto t0 = Clock::now();
  long cases = 0, mismatches = 0;
  for (int T = 0; T <= 12; ++T) {
    for (int mask = 0; mask < (1 << T); ++mask) {
      std::vector<int> bits(static_cast<std::size_t>(T));
      Eigen::VectorXd probs(T);
      for (int t = 0; t < T; ++t) {
        bits[static_cast<std::size_t>(t)] = (mask >> t) & 1;
        probs(t) = bits[static_cast<std::size_t>(t)] ? 0.9 : 0.1;
      }
      for (int ms = 0; ms <= 3; ++ms) {
        for (int mg = 0; mg <= 3; ++mg) {
          DecodeParams p;
          p.min_segment_frames = ms;
          p.min_gap_frames = mg;
          ++cases;
          mismatches += segments_from_binary(probs, p).segments != binary_oracle(bits, ms, mg);
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30, fmt("%ld cases, %ld mismatches, %.2f s", cases, mismatches, secs)};
}

Outcome a4_metrics() {
  const Segments x{{3, 20}, {25, 40}, {52, 80}};
  const auto cm = count_metrics({3, 7, 0}, {3, 7, 0});
  bool ok = cm.mae_abs == 0 && cm.obo == 1 && segmentation_iou(x, x) == 1.0 && *mae_frames(x, x).mae_frames == 0.0;
  for (int k = 1; k <= 4; ++k) {
    Segments shifted;
    for (const auto& s : x) shifted.push_back({s.start + k, s.end + k});
    ok = ok && *mae_frames(x, shifted).mae_frames == static_cast<double>(k);
  }
  const double third = segmentation_iou({{0, 10}}, {{5, 15}});
  ok = ok && std::abs(third - 1.0 / 3.0) <= 1e-12;
  return {ok, fmt("identity, +k shift for k=1..4, IoU([0,10),[5,15)) = %.15f", third)};
}

ExperimentConfig benchmark_config() {
  return load_experiment_config(std::filesystem::path(REPSEG_SOURCE_DIR) / "config" / "benchmark_synth.json");
}

// Density-head runs are shared between A5 (seed 1) and A6 (seeds 1-3).
std::map<std::pair<Head, std::uint64_t>, ExperimentResult> runs;

const ExperimentResult& benchmark_run(Head head, std::uint64_t seed) {
  const auto key = std::pair(head, seed);
  if (auto it = runs.find(key); it != runs.end()) return it->second;
  auto cfg = benchmark_config();
  cfg.model.head = head;
  cfg.seed = seed;
  cfg.threads = 1;
  return runs.emplace(key, run_experiment(cfg)).first->second;
}

Outcome a5_benchmark() {
  const auto cfg = benchmark_config();
  const auto& r = benchmark_run(Head::Density, cfg.seed);
  const auto& o = r.overall;
  const bool pass = cfg.synthetic && cfg.synthetic->n_sequences == 300 && cfg.folds == 5 && o.obo >= 0.90 &&
                    o.iou && *o.iou >= 0.65 && o.mae_f && *o.mae_f <= 10 && o.mae_abs <= 0.6 && r.seconds <= 1200;
  return {pass, fmt("OBO %.4f, IoU %.4f, MAE-F %.2f, MAE %.4f (norm %.4f), %.0f s on 1 thread", o.obo,
                    o.iou.value_or(-1), o.mae_f.value_or(-1), o.mae_abs, o.mae_norm, r.seconds)};
}

Outcome a6_head_ordering() {
  const std::uint64_t base = benchmark_config().seed;
  double density = 0.0, count = 0.0;
  std::string per_seed;
  for (std::uint64_t s = base; s < base + 3; ++s) {
    const double d = benchmark_run(Head::Density, s).overall.obo;
    const double c = benchmark_run(Head::Count, s).overall.obo;
    density += d / 3;
    count += c / 3;
    per_seed += fmt(" seed %llu: %.4f vs %.4f;", static_cast<unsigned long long>(s), d, c);
  }
  return {density >= count, fmt("mean OBO density %.4f vs count %.4f;%s", density, count, per_seed.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"A1", a1_gradients}, {"A2", a2_labels}, {"A3", a3_decoder},
      {"A4", a4_metrics},   {"A5", a5_benchmark}, {"A6", a6_head_ordering}};
  std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    failures += !out.pass;
    std::printf("%s %s %s\n", name.c_str(), out.pass ? "PASS" : "FAIL", out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
