#pragma once

// Skeleton sequences, repetition annotations, and their interchange formats.
//
// Skeleton CSV:   frame,<joint0>_x,<joint0>_y,<joint0>_z,...   (one row per frame)
// Sidecar JSON:   {"frame_rate": 30, "subject": "...", "exercise": "...",
//                  "dataset": "...", "population": "healthy|patient|unknown"}
// Annotation JSON: {"length": T, "segments": [[start, end], ...],
//                   "exercise": "...", "subject": "..."}
//
// Segments are half-open [start, end) frame intervals.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "repseg/error.hpp"

namespace repseg {

using Json = nlohmann::json;

enum class Population { Healthy, Patient, Unknown };

inline std::string_view to_string(Population p) {
  switch (p) {
    case Population::Healthy: return "healthy";
    case Population::Patient: return "patient";
    case Population::Unknown: return "unknown";
  }
  return "unknown";
}

inline Population parse_population(std::string_view s) {
  if (s == "healthy") return Population::Healthy;
  if (s == "patient") return Population::Patient;
  if (s == "unknown" || s.empty()) return Population::Unknown;
  fail(ErrorCode::MalformedJson, "unknown population tag '" + std::string(s) + "'");
}

/// Kinect v2 joint order, used for the default 25-joint skeleton.
inline const std::vector<std::string>& kinect_joint_names() {
  static const std::vector<std::string> names = {
      "SpineBase",     "SpineMid",  "Neck",       "Head",         "ShoulderLeft",
      "ElbowLeft",     "WristLeft", "HandLeft",   "ShoulderRight", "ElbowRight",
      "WristRight",    "HandRight", "HipLeft",    "KneeLeft",      "AnkleLeft",
      "FootLeft",      "HipRight",  "KneeRight",  "AnkleRight",    "FootRight",
      "SpineShoulder", "HandTipLeft", "ThumbLeft", "HandTipRight", "ThumbRight"};
  return names;
}

namespace joint {
inline constexpr int SpineBase = 0, SpineMid = 1, Neck = 2, Head = 3;
inline constexpr int ShoulderLeft = 4, ElbowLeft = 5, WristLeft = 6, HandLeft = 7;
inline constexpr int ShoulderRight = 8, ElbowRight = 9, WristRight = 10, HandRight = 11;
inline constexpr int HipLeft = 12, KneeLeft = 13, AnkleLeft = 14, FootLeft = 15;
inline constexpr int HipRight = 16, KneeRight = 17, AnkleRight = 18, FootRight = 19;
inline constexpr int SpineShoulder = 20, HandTipLeft = 21, ThumbLeft = 22;
inline constexpr int HandTipRight = 23, ThumbRight = 24;
inline constexpr int Count = 25;
}  // namespace joint

struct SequenceInfo {
  double frame_rate = 30.0;
  std::string subject_id;
  std::string exercise_id;
  std::string dataset_id;
  Population population = Population::Unknown;
};

/// T frames x J joints x 3 coordinates. Row t holds frame t, joint-major (x,y,z per joint).
class SkeletonSequence {
 public:
  SkeletonSequence(Eigen::MatrixXd coords, std::vector<std::string> joint_names, SequenceInfo info = {})
      : coords_(std::move(coords)), joint_names_(std::move(joint_names)), info_(std::move(info)) {
    require(coords_.rows() >= 2, ErrorCode::EmptySequence,
            "sequence needs at least 2 frames, got " + std::to_string(coords_.rows()));
    require(coords_.cols() >= 3 && coords_.cols() % 3 == 0, ErrorCode::InconsistentJointCount,
            "coordinate columns must be a positive multiple of 3");
    if (joint_names_.empty()) {
      for (Eigen::Index j = 0; j < coords_.cols() / 3; ++j) joint_names_.push_back("j" + std::to_string(j));
    }
    require(static_cast<Eigen::Index>(joint_names_.size()) * 3 == coords_.cols(),
            ErrorCode::InconsistentJointCount, "joint name count does not match coordinate columns");
    require(coords_.allFinite(), ErrorCode::MalformedRow, "non-finite coordinate");
  }

  int frames() const { return static_cast<int>(coords_.rows()); }
  int joints() const { return static_cast<int>(coords_.cols() / 3); }

  Eigen::Vector3d position(int frame, int j) const {
    return coords_.block<1, 3>(frame, 3 * j).transpose();
  }

  const Eigen::MatrixXd& coords() const { return coords_; }
  const std::vector<std::string>& joint_names() const { return joint_names_; }
  const SequenceInfo& info() const { return info_; }

  SkeletonSequence with_coords(Eigen::MatrixXd coords) const {
    return SkeletonSequence(std::move(coords), joint_names_, info_);
  }
  SkeletonSequence with_info(SequenceInfo info) const { return SkeletonSequence(coords_, joint_names_, std::move(info)); }

 private:
  Eigen::MatrixXd coords_;
  std::vector<std::string> joint_names_;
  SequenceInfo info_;
};

struct Segment {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  double midpoint() const { return 0.5 * (start + end - 1); }
  friend bool operator==(const Segment&, const Segment&) = default;
};

using Segments = std::vector<Segment>;

/// Sorted, non-overlapping half-open repetition segments within [0, length).
class RepetitionAnnotation {
 public:
  RepetitionAnnotation() = default;

  /// Unsorted input is accepted and sorted; overlap or out-of-range segments are rejected.
  RepetitionAnnotation(Segments segments, int length, std::string exercise = {}, std::string subject = {})
      : segments_(std::move(segments)), length_(length), exercise_(std::move(exercise)), subject_(std::move(subject)) {
    require(length_ >= 0, ErrorCode::OutOfRangeSegment, "negative annotation length");
    std::sort(segments_.begin(), segments_.end(),
              [](const Segment& a, const Segment& b) { return a.start < b.start || (a.start == b.start && a.end < b.end); });
    for (const auto& s : segments_) {
      require(s.end != s.start, ErrorCode::ZeroLengthSegment,
              "segment [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") is empty");
      require(s.start >= 0 && s.end > s.start && s.end <= length_, ErrorCode::OutOfRangeSegment,
              "segment [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") outside [0," +
                  std::to_string(length_) + ")");
    }
    for (std::size_t i = 1; i < segments_.size(); ++i) {
      require(segments_[i].start >= segments_[i - 1].end, ErrorCode::OverlappingSegments,
              "segments [" + std::to_string(segments_[i - 1].start) + "," + std::to_string(segments_[i - 1].end) +
                  ") and [" + std::to_string(segments_[i].start) + "," + std::to_string(segments_[i].end) +
                  ") overlap");
    }
  }

  const Segments& segments() const { return segments_; }
  int length() const { return length_; }
  int count() const { return static_cast<int>(segments_.size()); }
  const std::string& exercise() const { return exercise_; }
  const std::string& subject() const { return subject_; }

 private:
  Segments segments_;
  int length_ = 0;
  std::string exercise_;
  std::string subject_;
};

struct NormalizationSpec {
  int root_joint = joint::SpineBase;
  int scale_joint_a = joint::SpineBase;
  int scale_joint_b = joint::SpineShoulder;
  bool enabled = true;
};

// ---------------------------------------------------------------------------
// Number formatting / parsing (locale independent, shortest round-trip).

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline bool parse_finite_double(std::string_view cell, double& out) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    auto next = line.find(',', pos);
    if (next == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return cells;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto next = text.find('\n', pos);
    auto line = text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline Json parse_json_text(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline SequenceInfo parse_sequence_info(std::string_view sidecar_json) {
  SequenceInfo info;
  if (sidecar_json.empty()) return info;
  const Json j = detail::parse_json_text(sidecar_json, "skeleton sidecar");
  try {
    info.frame_rate = j.value("frame_rate", 30.0);
    info.subject_id = j.value("subject", std::string{});
    info.exercise_id = j.value("exercise", std::string{});
    info.dataset_id = j.value("dataset", std::string{});
    info.population = parse_population(j.value("population", std::string{"unknown"}));
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("skeleton sidecar: ") + e.what());
  }
  require(info.frame_rate > 0 && std::isfinite(info.frame_rate), ErrorCode::MalformedJson,
          "frame_rate must be positive");
  return info;
}

inline Json sequence_info_json(const SequenceInfo& info) {
  return Json{{"frame_rate", info.frame_rate},
              {"subject", info.subject_id},
              {"exercise", info.exercise_id},
              {"dataset", info.dataset_id},
              {"population", std::string(to_string(info.population))}};
}

/// Parses the skeleton CSV. Metadata comes from the sidecar JSON (may be empty).
inline SkeletonSequence parse_skeleton(std::string_view csv, std::string_view sidecar_json = {}) {
  const auto lines = detail::split_lines(csv);
  require(!lines.empty(), ErrorCode::EmptySequence, "empty skeleton stream");

  const auto header = detail::split_commas(lines.front());
  require(header.size() >= 4 && (header.size() - 1) % 3 == 0 && header.front() == "frame",
          ErrorCode::InconsistentJointCount, "header must be 'frame' followed by x,y,z triples per joint");
  std::vector<std::string> names;
  for (std::size_t c = 1; c < header.size(); c += 3) {
    const std::string_view hx = header[c], hy = header[c + 1], hz = header[c + 2];
    auto stem = [](std::string_view h, char axis) -> std::string_view {
      if (h.size() < 3 || h[h.size() - 2] != '_' || h.back() != axis) return {};
      return h.substr(0, h.size() - 2);
    };
    const auto nx = stem(hx, 'x'), ny = stem(hy, 'y'), nz = stem(hz, 'z');
    require(!nx.empty() && nx == ny && nx == nz, ErrorCode::InconsistentJointCount,
            "malformed joint header near column " + std::to_string(c));
    names.emplace_back(nx);
  }

  const Eigen::Index cols = static_cast<Eigen::Index>(names.size() * 3);
  const Eigen::Index rows = static_cast<Eigen::Index>(lines.size() - 1);
  require(rows >= 2, ErrorCode::EmptySequence, "sequence needs at least 2 frames, got " + std::to_string(rows));
  Eigen::MatrixXd coords(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto cells = detail::split_commas(lines[static_cast<std::size_t>(r) + 1]);
    require(cells.size() == header.size(), ErrorCode::InconsistentJointCount,
            "row " + std::to_string(r) + " has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(header.size()));
    double v = 0;
    require(parse_finite_double(cells[0], v), ErrorCode::MalformedRow,
            "row " + std::to_string(r) + ": bad frame index '" + std::string(cells[0]) + "'");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto cell = cells[static_cast<std::size_t>(c) + 1];
      require(parse_finite_double(cell, v), ErrorCode::MalformedRow,
              "row " + std::to_string(r) + ", column " + std::to_string(c + 1) + ": '" + std::string(cell) + "'");
      coords(r, c) = v;
    }
  }
  return SkeletonSequence(std::move(coords), std::move(names), parse_sequence_info(sidecar_json));
}

inline std::string serialize_skeleton(const SkeletonSequence& seq) {
  std::string out = "frame";
  for (const auto& name : seq.joint_names()) out += "," + name + "_x," + name + "_y," + name + "_z";
  out += '\n';
  const auto& m = seq.coords();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out += std::to_string(r);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

inline RepetitionAnnotation annotation_from_json(const Json& j) {
  try {
    require(j.is_object(), ErrorCode::MalformedJson, "annotation must be an object");
    const int length = j.at("length").get<int>();
    Segments segs;
    for (const auto& s : j.at("segments")) {
      require(s.is_array() && s.size() == 2, ErrorCode::MalformedJson, "segment must be [start, end]");
      segs.push_back({s[0].get<int>(), s[1].get<int>()});
    }
    return RepetitionAnnotation(std::move(segs), length, j.value("exercise", std::string{}),
                                j.value("subject", std::string{}));
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("annotation: ") + e.what());
  }
}

inline RepetitionAnnotation parse_annotation(std::string_view text) {
  return annotation_from_json(detail::parse_json_text(text, "annotation"));
}

inline Json segments_json(const Segments& segs) {
  Json arr = Json::array();
  for (const auto& s : segs) arr.push_back({s.start, s.end});
  return arr;
}

inline Json annotation_json(const RepetitionAnnotation& a) {
  return Json{{"length", a.length()},
              {"segments", segments_json(a.segments())},
              {"exercise", a.exercise()},
              {"subject", a.subject()}};
}

/// Root joint to the origin in every frame, then divide by the mean scale-pair distance.
inline SkeletonSequence normalize(const SkeletonSequence& seq, const NormalizationSpec& spec) {
  if (!spec.enabled) return seq;
  const int J = seq.joints();
  require(spec.root_joint >= 0 && spec.root_joint < J && spec.scale_joint_a >= 0 && spec.scale_joint_a < J &&
              spec.scale_joint_b >= 0 && spec.scale_joint_b < J,
          ErrorCode::InvalidArgument, "normalization joint index out of range");
  require(spec.scale_joint_a != spec.scale_joint_b, ErrorCode::InvalidArgument, "scale joints must differ");

  const int T = seq.frames();
  double scale = 0.0;
  for (int t = 0; t < T; ++t) scale += (seq.position(t, spec.scale_joint_a) - seq.position(t, spec.scale_joint_b)).norm();
  scale /= T;
  require(scale >= 1e-9, ErrorCode::DegenerateScale, "mean scale distance " + format_double(scale));

  Eigen::MatrixXd out = seq.coords();
  for (int t = 0; t < T; ++t) {
    const Eigen::Vector3d root = seq.position(t, spec.root_joint);
    for (int j = 0; j < J; ++j) out.block<1, 3>(t, 3 * j) = (out.block<1, 3>(t, 3 * j) - root.transpose()) / scale;
  }
  return seq.with_coords(std::move(out));
}

}  // namespace repseg
