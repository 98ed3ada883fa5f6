#pragma once

// Counting metrics (MAE, off-by-one accuracy) and segmentation metrics
// (matched-segment IoU, mean boundary error in frames).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "repseg/error.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

struct CountMetrics {
  double mae_abs = 0.0;
  double mae_norm = 0.0;
  double obo = 0.0;
};

inline CountMetrics count_metrics(const std::vector<int>& preds, const std::vector<int>& gts) {
  require(preds.size() == gts.size(), ErrorCode::LengthMismatch, "prediction and ground-truth counts differ in length");
  require(!preds.empty(), ErrorCode::EmptyInput, "no counts to score");
  CountMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int err = std::abs(preds[i] - gts[i]);
    m.mae_abs += err;
    m.mae_norm += static_cast<double>(err) / std::max(gts[i], 1);
    m.obo += err <= 1 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(preds.size());
  m.mae_abs /= n;
  m.mae_norm /= n;
  m.obo /= n;
  return m;
}

inline double segment_iou(const Segment& a, const Segment& b) {
  const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const int uni = a.length() + b.length() - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

struct MatchedPair {
  int gt = 0;
  int pred = 0;
  double iou = 0.0;
};

struct SegmentMatching {
  std::vector<MatchedPair> pairs;
  std::vector<int> unmatched_gt;
  std::vector<int> unmatched_pred;

  double total_iou() const {
    double s = 0.0;
    for (const auto& p : pairs) s += p.iou;
    return s;
  }
};

/// Greedy one-to-one matching in descending IoU order. Ties go to the earlier gt
/// segment, then the earlier pred segment, compared by (start, end) so the result does
/// not depend on list order. Pairs with zero overlap are never matched.
inline SegmentMatching match_segments(const Segments& gt, const Segments& pred) {
  std::vector<MatchedPair> candidates;
  for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
    for (int j = 0; j < static_cast<int>(pred.size()); ++j) {
      const double iou = segment_iou(gt[static_cast<std::size_t>(i)], pred[static_cast<std::size_t>(j)]);
      if (iou > 0) candidates.push_back({i, j, iou});
    }
  }
  auto key = [](const Segment& s) { return std::pair(s.start, s.end); };
  std::stable_sort(candidates.begin(), candidates.end(), [&](const MatchedPair& a, const MatchedPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    const auto &ga = gt[static_cast<std::size_t>(a.gt)], &gb = gt[static_cast<std::size_t>(b.gt)];
    if (key(ga) != key(gb)) return key(ga) < key(gb);
    return key(pred[static_cast<std::size_t>(a.pred)]) < key(pred[static_cast<std::size_t>(b.pred)]);
  });
  std::vector<bool> gt_used(gt.size(), false), pred_used(pred.size(), false);
  SegmentMatching m;
  for (const auto& c : candidates) {
    if (gt_used[static_cast<std::size_t>(c.gt)] || pred_used[static_cast<std::size_t>(c.pred)]) continue;
    gt_used[static_cast<std::size_t>(c.gt)] = pred_used[static_cast<std::size_t>(c.pred)] = true;
    m.pairs.push_back(c);
  }
  std::sort(m.pairs.begin(), m.pairs.end(), [](const MatchedPair& a, const MatchedPair& b) { return a.gt < b.gt; });
  for (std::size_t i = 0; i < gt.size(); ++i)
    if (!gt_used[i]) m.unmatched_gt.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < pred.size(); ++j)
    if (!pred_used[j]) m.unmatched_pred.push_back(static_cast<int>(j));
  return m;
}

/// Sum of matched IoUs over max(|gt|, |pred|). Two empty lists score 1.
inline double segmentation_iou(const Segments& gt, const Segments& pred) {
  const std::size_t denom = std::max(gt.size(), pred.size());
  if (denom == 0) return 1.0;
  return match_segments(gt, pred).total_iou() / static_cast<double>(denom);
}

struct BoundaryError {
  std::optional<double> mae_frames;  // empty when nothing matched
  double coverage = 0.0;             // matched pairs / max(|gt|, |pred|)
};

/// Mean over matched pairs of (|start_p - start_g| + |end_p - end_g|) / 2.
inline BoundaryError mae_frames(const Segments& gt, const Segments& pred) {
  const auto m = match_segments(gt, pred);
  BoundaryError out;
  const std::size_t denom = std::max(gt.size(), pred.size());
  out.coverage = denom == 0 ? 1.0 : static_cast<double>(m.pairs.size()) / static_cast<double>(denom);
  if (m.pairs.empty()) return out;
  double total = 0.0;
  for (const auto& p : m.pairs) {
    const auto& g = gt[static_cast<std::size_t>(p.gt)];
    const auto& q = pred[static_cast<std::size_t>(p.pred)];
    total += 0.5 * (std::abs(q.start - g.start) + std::abs(q.end - g.end));
  }
  out.mae_frames = total / static_cast<double>(m.pairs.size());
  return out;
}

/// Scores for one evaluated recording.
struct SampleMetrics {
  std::string sample_id;
  std::string exercise;
  int gt_count = 0;
  int pred_count = 0;
  std::optional<double> iou;         // absent for the count head
  std::optional<double> mae_frames;  // absent for the count head or when nothing matched
  double coverage = 0.0;
};

inline SampleMetrics score_sample(std::string sample_id, std::string exercise, const Segments& gt,
                                  int pred_count, const Segments* pred_segments) {
  SampleMetrics s{std::move(sample_id), std::move(exercise), static_cast<int>(gt.size()), pred_count, {}, {}, 0.0};
  if (pred_segments) {
    s.iou = segmentation_iou(gt, *pred_segments);
    const auto be = mae_frames(gt, *pred_segments);
    s.mae_frames = be.mae_frames;
    s.coverage = be.coverage;
  }
  return s;
}

enum class Grouping { Overall, PerExercise };

struct MetricsReport {
  std::string group;  // "overall" or the exercise id
  double mae_abs = 0.0;
  double mae_norm = 0.0;
  double obo = 0.0;
  std::optional<double> iou;
  std::optional<double> mae_f;
  double coverage = 0.0;
  int n_samples = 0;
  int n_mae_f_excluded = 0;  // samples with no matched pair
};

namespace detail {

inline MetricsReport aggregate_group(const std::string& name, const std::vector<const SampleMetrics*>& rows) {
  require(!rows.empty(), ErrorCode::EmptyGroup, "group '" + name + "' has no samples");
  std::vector<int> preds, gts;
  for (const auto* r : rows) {
    preds.push_back(r->pred_count);
    gts.push_back(r->gt_count);
  }
  const auto cm = count_metrics(preds, gts);
  MetricsReport rep{name, cm.mae_abs, cm.mae_norm, cm.obo, {}, {}, 0.0, static_cast<int>(rows.size()), 0};
  double iou = 0.0, maef = 0.0, coverage = 0.0;
  int n_iou = 0, n_maef = 0;
  for (const auto* r : rows) {
    if (!r->iou) continue;
    iou += *r->iou;
    coverage += r->coverage;
    ++n_iou;
    if (r->mae_frames) {
      maef += *r->mae_frames;
      ++n_maef;
    } else {
      ++rep.n_mae_f_excluded;
    }
  }
  if (n_iou > 0) {
    rep.iou = iou / n_iou;
    rep.coverage = coverage / n_iou;
  }
  if (n_maef > 0) rep.mae_f = maef / n_maef;
  return rep;
}

}  // namespace detail

/// Unweighted means over samples: one overall row, or one row per exercise (sorted by id).
inline std::vector<MetricsReport> aggregate(const std::vector<SampleMetrics>& samples, Grouping grouping) {
  require(!samples.empty(), ErrorCode::EmptyGroup, "no samples to aggregate");
  std::vector<const SampleMetrics*> all;
  for (const auto& s : samples) all.push_back(&s);
  if (grouping == Grouping::Overall) return {detail::aggregate_group("overall", all)};
  std::map<std::string, std::vector<const SampleMetrics*>> groups;
  for (const auto* s : all) groups[s->exercise].push_back(s);
  std::vector<MetricsReport> out;
  for (const auto& [name, rows] : groups) out.push_back(detail::aggregate_group(name, rows));
  return out;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json metrics_report_json(const MetricsReport& r) {
  return Json{{"group", r.group},
              {"mae_abs", r.mae_abs},
              {"mae_norm", r.mae_norm},
              {"obo", r.obo},
              {"iou", optional_json(r.iou)},
              {"mae_f", optional_json(r.mae_f)},
              {"coverage", r.coverage},
              {"n_samples", r.n_samples},
              {"n_mae_f_excluded", r.n_mae_f_excluded}};
}

}  // namespace repseg
