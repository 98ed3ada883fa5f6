#pragma once

// Model outputs -> repetition segments and counts.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

enum class SegmentSource { Binary, Density, CountHead };

inline std::string_view to_string(SegmentSource s) {
  switch (s) {
    case SegmentSource::Binary: return "binary";
    case SegmentSource::Density: return "density";
    case SegmentSource::CountHead: return "count_head";
  }
  return "binary";
}

struct SegmentPrediction {
  Segments segments;
  std::vector<double> confidence;  // per segment: peak height, or mean(1 - prob)
  int count = 0;
  SegmentSource source = SegmentSource::Binary;
};

struct DecodeParams {
  double binary_threshold = 0.5;
  int min_segment_frames = 5;
  int min_gap_frames = 1;
  double peak_min_prominence = 0.05;  // fraction of the map's maximum
  int peak_min_distance_frames = 10;
  double boundary_floor = 0.01;  // fraction of the peak height where a segment boundary stops

  void validate() const {
    require(binary_threshold > 0 && binary_threshold < 1, ErrorCode::InvalidArgument,
            "binary_threshold must be in (0,1)");
    require(min_segment_frames >= 0 && min_gap_frames >= 0 && peak_min_prominence >= 0 &&
                peak_min_distance_frames >= 0 && boundary_floor >= 0 && boundary_floor < 1,
            ErrorCode::InvalidArgument, "decode parameters must be nonnegative");
  }
};

inline Json decode_params_json(const DecodeParams& p) {
  return Json{{"binary_threshold", p.binary_threshold},
              {"min_segment_frames", p.min_segment_frames},
              {"min_gap_frames", p.min_gap_frames},
              {"peak_min_prominence", p.peak_min_prominence},
              {"peak_min_distance_frames", p.peak_min_distance_frames},
              {"boundary_floor", p.boundary_floor}};
}

inline DecodeParams decode_params_from_json(const Json& j, DecodeParams p = {}) {
  try {
    p.binary_threshold = j.value("binary_threshold", p.binary_threshold);
    p.min_segment_frames = j.value("min_segment_frames", p.min_segment_frames);
    p.min_gap_frames = j.value("min_gap_frames", p.min_gap_frames);
    p.peak_min_prominence = j.value("peak_min_prominence", p.peak_min_prominence);
    p.peak_min_distance_frames = j.value("peak_min_distance_frames", p.peak_min_distance_frames);
    p.boundary_floor = j.value("boundary_floor", p.boundary_floor);
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("decode params: ") + e.what());
  }
  p.validate();
  return p;
}

/// Frames with prob >= threshold are "between repetitions"; maximal runs below it are
/// candidate repetitions. Candidates shorter than min_segment_frames are dropped, then
/// neighbours separated by fewer than min_gap_frames are merged left to right.
inline SegmentPrediction segments_from_binary(const Eigen::VectorXd& probs, const DecodeParams& params = {}) {
  params.validate();
  const int T = static_cast<int>(probs.size());
  Segments runs;
  for (int t = 0; t < T;) {
    if (probs(t) >= params.binary_threshold) {
      ++t;
      continue;
    }
    const int start = t;
    while (t < T && probs(t) < params.binary_threshold) ++t;
    if (t - start >= params.min_segment_frames) runs.push_back({start, t});
  }

  Segments merged;
  for (const auto& s : runs) {
    if (!merged.empty() && s.start - merged.back().end < params.min_gap_frames)
      merged.back().end = s.end;
    else
      merged.push_back(s);
  }

  SegmentPrediction out;
  out.source = SegmentSource::Binary;
  out.segments = std::move(merged);
  for (const auto& s : out.segments) out.confidence.push_back(1.0 - probs.segment(s.start, s.length()).mean());
  out.count = static_cast<int>(out.segments.size());
  return out;
}

struct Peak {
  int position = 0;  // plateau centre (left-middle for even plateaus)
  int plateau_left = 0;
  int plateau_right = 0;
  double height = 0.0;
  double prominence = 0.0;
};

/// Local maxima of a nonnegative map (zero padding outside [0, T)), filtered by a
/// prominence threshold relative to the map's maximum and then by minimum distance
/// (taller peaks win).
inline std::vector<Peak> find_peaks(const Eigen::VectorXd& x, double min_prominence_fraction, int min_distance) {
  const int T = static_cast<int>(x.size());
  auto at = [&](int i) { return i < 0 || i >= T ? 0.0 : x(i); };

  std::vector<Peak> peaks;
  for (int i = 0; i < T;) {
    int j = i;
    while (j + 1 < T && x(j + 1) == x(i)) ++j;
    if (x(i) > at(i - 1) && x(i) > at(j + 1)) peaks.push_back({(i + j) / 2, i, j, x(i), 0.0});
    i = j + 1;
  }

  const double max_value = T > 0 ? x.maxCoeff() : 0.0;
  const double threshold = min_prominence_fraction * max_value;
  std::vector<Peak> kept;
  for (auto& p : peaks) {
    double left_min = p.height;
    for (int i = p.plateau_left - 1; i >= -1; --i) {
      const double v = at(i);
      if (v > p.height) break;
      left_min = std::min(left_min, v);
      if (i < 0) break;
    }
    double right_min = p.height;
    for (int i = p.plateau_right + 1; i <= T; ++i) {
      const double v = at(i);
      if (v > p.height) break;
      right_min = std::min(right_min, v);
      if (i >= T) break;
    }
    p.prominence = p.height - std::max(left_min, right_min);
    if (p.prominence > 0 && p.prominence >= threshold) kept.push_back(p);
  }

  if (min_distance > 1 && kept.size() > 1) {
    std::vector<std::size_t> by_height(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) by_height[i] = i;
    std::stable_sort(by_height.begin(), by_height.end(),
                     [&](std::size_t a, std::size_t b) { return kept[a].height > kept[b].height; });
    std::vector<bool> removed(kept.size(), false);
    for (const std::size_t i : by_height) {
      if (removed[i]) continue;
      for (std::size_t k = 0; k < kept.size(); ++k) {
        if (k != i && !removed[k] && std::abs(kept[k].position - kept[i].position) < min_distance) removed[k] = true;
      }
    }
    std::vector<Peak> spaced;
    for (std::size_t i = 0; i < kept.size(); ++i)
      if (!removed[i]) spaced.push_back(kept[i]);
    kept = std::move(spaced);
  }
  return kept;
}

/// One repetition per detected peak. Each segment extends from the peak plateau down
/// to the nearest local minimum on either side, or to the first frame below
/// boundary_floor * peak height (stopping frames excluded), but never past the
/// midpoint to a neighbouring peak.
inline SegmentPrediction segments_from_density(const Eigen::VectorXd& density, const DecodeParams& params = {}) {
  params.validate();
  const int T = static_cast<int>(density.size());
  auto at = [&](int i) { return i < 0 || i >= T ? 0.0 : density(i); };
  const auto peaks = find_peaks(density, params.peak_min_prominence, params.peak_min_distance_frames);

  SegmentPrediction out;
  out.source = SegmentSource::Density;
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const auto& p = peaks[k];
    const double floor = params.boundary_floor * p.height;
    int left = p.plateau_left;
    while (left >= 0 && at(left) >= floor && at(left - 1) < at(left)) --left;
    int right = p.plateau_right;
    while (right < T && at(right) >= floor && at(right + 1) < at(right)) ++right;
    int start = left + 1;
    int end = right;
    start = std::min(start, p.plateau_left);
    end = std::max(end, p.plateau_right + 1);
    if (k > 0) start = std::max(start, (peaks[k - 1].position + p.position + 1) / 2);
    if (k + 1 < peaks.size()) end = std::min(end, (p.position + peaks[k + 1].position + 1) / 2);
    start = std::clamp(start, 0, T);
    end = std::clamp(end, 0, T);
    if (end <= start) continue;
    out.segments.push_back({start, end});
    out.confidence.push_back(p.height);
  }
  out.count = static_cast<int>(out.segments.size());
  return out;
}

/// Count for a segment-producing head.
inline int count_from_prediction(const SegmentPrediction& pred) { return static_cast<int>(pred.segments.size()); }

/// Count-head scalar: round half away from zero, clip at zero.
inline int count_from_prediction(double scalar) {
  if (!std::isfinite(scalar)) return 0;
  return std::max(0, static_cast<int>(std::lround(scalar)));
}

inline Json segment_prediction_json(const SegmentPrediction& pred, int length, const std::string& exercise = {},
                                    const std::string& subject = {}) {
  return Json{{"length", length},
              {"segments", segments_json(pred.segments)},
              {"confidence", pred.confidence},
              {"count", pred.count},
              {"source", std::string(to_string(pred.source))},
              {"exercise", exercise},
              {"subject", subject}};
}

}  // namespace repseg
