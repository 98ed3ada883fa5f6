#pragma once

// Per-frame feature variants: flattened raw joints, joint-angle features, and
// their concatenation, plus training-set standardization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

enum class FeatureVariant { Raw, Angles, Concat };

inline std::string_view to_string(FeatureVariant v) {
  switch (v) {
    case FeatureVariant::Raw: return "raw";
    case FeatureVariant::Angles: return "angles";
    case FeatureVariant::Concat: return "concat";
  }
  return "raw";
}

inline FeatureVariant parse_feature_variant(std::string_view s) {
  if (s == "raw") return FeatureVariant::Raw;
  if (s == "angles") return FeatureVariant::Angles;
  if (s == "concat") return FeatureVariant::Concat;
  fail(ErrorCode::InvalidArgument, "unknown feature variant '" + std::string(s) + "'");
}

/// T x D feature matrix; one row per frame.
struct FeatureSequence {
  Eigen::MatrixXd values;
  FeatureVariant variant = FeatureVariant::Raw;
  /// Per-frame flag: 1 when some angle entry hit a degenerate limb and was set to 0.
  std::vector<std::uint8_t> degenerate;

  int frames() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

struct AngleEntry {
  enum class Kind { Triplet, Vertical };
  Kind kind = Kind::Triplet;
  int a = 0;
  int b = 0;
  int c = 0;  // unused for Vertical

  static AngleEntry triplet(int a, int b, int c) { return {Kind::Triplet, a, b, c}; }
  static AngleEntry vertical(int a, int b) { return {Kind::Vertical, a, b, 0}; }
  friend bool operator==(const AngleEntry&, const AngleEntry&) = default;
};

using AngleSpec = std::vector<AngleEntry>;

/// Default 43-entry angle set over the Kinect v2 skeleton (y axis up).
inline AngleSpec default_angle_spec() {
  using namespace joint;
  using E = AngleEntry;
  AngleSpec spec;
  // Bilateral limb angles.
  const int sides[2][8] = {{ShoulderLeft, ElbowLeft, WristLeft, HandLeft, HipLeft, KneeLeft, AnkleLeft, FootLeft},
                           {ShoulderRight, ElbowRight, WristRight, HandRight, HipRight, KneeRight, AnkleRight, FootRight}};
  for (const auto& s : sides) {
    const int sh = s[0], el = s[1], wr = s[2], ha = s[3], hp = s[4], kn = s[5], an = s[6], ft = s[7];
    spec.push_back(E::triplet(el, sh, hp));             // shoulder flexion/abduction vs trunk side
    spec.push_back(E::triplet(el, sh, SpineShoulder));  // shoulder vs shoulder girdle
    spec.push_back(E::triplet(sh, el, wr));             // elbow
    spec.push_back(E::triplet(el, wr, ha));             // wrist
    spec.push_back(E::triplet(wr, sh, hp));             // shoulder-wrist
    spec.push_back(E::triplet(sh, hp, kn));             // hip (trunk-thigh)
    spec.push_back(E::triplet(SpineBase, hp, kn));      // hip (pelvis-thigh)
    spec.push_back(E::triplet(hp, kn, an));             // knee
    spec.push_back(E::triplet(kn, an, ft));             // ankle
    spec.push_back(E::triplet(SpineMid, SpineShoulder, sh));
  }
  for (const auto& s : sides) {
    spec.push_back(E::vertical(s[0], s[1]));  // upper arm
    spec.push_back(E::vertical(s[1], s[2]));  // forearm
    spec.push_back(E::vertical(s[0], s[2]));  // shoulder-wrist line
    spec.push_back(E::vertical(s[4], s[5]));  // thigh
    spec.push_back(E::vertical(s[5], s[6]));  // shank
  }
  // Trunk tilt.
  spec.push_back(E::vertical(SpineBase, SpineMid));
  spec.push_back(E::vertical(SpineMid, SpineShoulder));
  spec.push_back(E::vertical(SpineShoulder, Neck));
  spec.push_back(E::vertical(Neck, Head));
  spec.push_back(E::vertical(SpineBase, SpineShoulder));
  // Trunk rotation and cross-body angles.
  spec.push_back(E::triplet(HipLeft, SpineBase, ShoulderRight));
  spec.push_back(E::triplet(HipRight, SpineBase, ShoulderLeft));
  spec.push_back(E::triplet(KneeLeft, SpineBase, KneeRight));
  spec.push_back(E::triplet(ElbowLeft, SpineShoulder, ElbowRight));
  spec.push_back(E::triplet(WristLeft, SpineMid, WristRight));
  spec.push_back(E::triplet(HipLeft, SpineBase, SpineMid));
  spec.push_back(E::triplet(HipRight, SpineBase, SpineMid));
  spec.push_back(E::triplet(Neck, SpineShoulder, SpineMid));
  return spec;
}

inline Json angle_spec_json(const AngleSpec& spec) {
  Json arr = Json::array();
  for (const auto& e : spec) {
    if (e.kind == AngleEntry::Kind::Triplet)
      arr.push_back({{"type", "triplet"}, {"a", e.a}, {"b", e.b}, {"c", e.c}});
    else
      arr.push_back({{"type", "vertical"}, {"a", e.a}, {"b", e.b}});
  }
  return arr;
}

inline AngleSpec angle_spec_from_json(const Json& j) {
  try {
    require(j.is_array(), ErrorCode::MalformedJson, "angle spec must be an array");
    AngleSpec spec;
    for (const auto& e : j) {
      const auto type = e.at("type").get<std::string>();
      if (type == "triplet")
        spec.push_back(AngleEntry::triplet(e.at("a").get<int>(), e.at("b").get<int>(), e.at("c").get<int>()));
      else if (type == "vertical")
        spec.push_back(AngleEntry::vertical(e.at("a").get<int>(), e.at("b").get<int>()));
      else
        fail(ErrorCode::MalformedJson, "unknown angle entry type '" + type + "'");
    }
    return spec;
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("angle spec: ") + e.what());
  }
}

inline void validate_angle_spec(const AngleSpec& spec, int joints) {
  auto ok = [joints](int i) { return i >= 0 && i < joints; };
  for (const auto& e : spec) {
    const bool valid = e.kind == AngleEntry::Kind::Triplet
                           ? ok(e.a) && ok(e.b) && ok(e.c) && e.a != e.b && e.c != e.b
                           : ok(e.a) && ok(e.b) && e.a != e.b;
    require(valid, ErrorCode::InvalidArgument, "invalid angle entry for a " + std::to_string(joints) + "-joint skeleton");
  }
}

inline FeatureSequence raw_features(const SkeletonSequence& seq) {
  return {seq.coords(), FeatureVariant::Raw, std::vector<std::uint8_t>(static_cast<std::size_t>(seq.frames()), 0)};
}

namespace detail {

constexpr double kDegenerateLimb = 1e-9;

// Angle between u and v in [0, pi]; false when either vector is degenerate.
inline bool vector_angle(const Eigen::Vector3d& u, const Eigen::Vector3d& v, double& out) {
  const double nu = u.norm(), nv = v.norm();
  if (nu < kDegenerateLimb || nv < kDegenerateLimb) return false;
  out = std::acos(std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0));
  return true;
}

}  // namespace detail

inline FeatureSequence angle_features(const SkeletonSequence& seq, const AngleSpec& spec) {
  validate_angle_spec(spec, seq.joints());
  const int T = seq.frames();
  FeatureSequence fs{Eigen::MatrixXd::Zero(T, static_cast<Eigen::Index>(spec.size())), FeatureVariant::Angles,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(T), 0)};
  const Eigen::Vector3d up(0.0, 1.0, 0.0);
  for (int t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const auto& e = spec[k];
      double angle = 0.0;
      bool ok = false;
      if (e.kind == AngleEntry::Kind::Triplet) {
        const Eigen::Vector3d vb = seq.position(t, e.b);
        ok = detail::vector_angle(seq.position(t, e.a) - vb, seq.position(t, e.c) - vb, angle);
      } else {
        ok = detail::vector_angle(seq.position(t, e.b) - seq.position(t, e.a), up, angle);
      }
      if (ok)
        fs.values(t, static_cast<Eigen::Index>(k)) = angle;
      else
        fs.degenerate[static_cast<std::size_t>(t)] = 1;
    }
  }
  return fs;
}

/// Raw columns first, angle columns after.
inline FeatureSequence concat_features(const FeatureSequence& raw, const FeatureSequence& angles) {
  require(raw.frames() == angles.frames(), ErrorCode::LengthMismatch,
          "feature sequences have " + std::to_string(raw.frames()) + " and " + std::to_string(angles.frames()) +
              " frames");
  FeatureSequence out;
  out.variant = FeatureVariant::Concat;
  out.values.resize(raw.frames(), raw.dim() + angles.dim());
  out.values << raw.values, angles.values;
  out.degenerate.assign(static_cast<std::size_t>(raw.frames()), 0);
  for (std::size_t t = 0; t < out.degenerate.size(); ++t) {
    const bool r = t < raw.degenerate.size() && raw.degenerate[t];
    const bool a = t < angles.degenerate.size() && angles.degenerate[t];
    out.degenerate[t] = r || a;
  }
  return out;
}

inline FeatureSequence extract_features(const SkeletonSequence& seq, FeatureVariant variant, const AngleSpec& spec) {
  switch (variant) {
    case FeatureVariant::Raw: return raw_features(seq);
    case FeatureVariant::Angles: return angle_features(seq, spec);
    case FeatureVariant::Concat: return concat_features(raw_features(seq), angle_features(seq, spec));
  }
  return raw_features(seq);
}

inline int feature_dim(FeatureVariant variant, int joints, const AngleSpec& spec) {
  const int angles = static_cast<int>(spec.size());
  switch (variant) {
    case FeatureVariant::Raw: return 3 * joints;
    case FeatureVariant::Angles: return angles;
    case FeatureVariant::Concat: return 3 * joints + angles;
  }
  return 3 * joints;
}

struct StandardizationStats {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd std;

  int dim() const { return static_cast<int>(mean.size()); }
};

inline constexpr double kStdFloor = 1e-6;

/// Per-dimension mean and population std over all pooled training frames.
inline StandardizationStats fit_standardize(const std::vector<const FeatureSequence*>& train) {
  require(!train.empty(), ErrorCode::EmptyInput, "standardization needs at least one training sequence");
  const Eigen::Index D = train.front()->values.cols();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(D);
  double n = 0;
  for (const auto* fs : train) {
    require(fs->values.cols() == D, ErrorCode::DimensionMismatch, "training features disagree on dimension");
    sum += fs->values.colwise().sum();
    n += static_cast<double>(fs->values.rows());
  }
  const Eigen::RowVectorXd mean = sum / n;
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(D);
  for (const auto* fs : train) sq += (fs->values.rowwise() - mean).array().square().matrix().colwise().sum();
  Eigen::RowVectorXd sd = (sq / n).array().sqrt().max(kStdFloor).matrix();
  return {mean, sd};
}

inline StandardizationStats fit_standardize(const std::vector<FeatureSequence>& train) {
  std::vector<const FeatureSequence*> ptrs;
  for (const auto& f : train) ptrs.push_back(&f);
  return fit_standardize(ptrs);
}

inline FeatureSequence apply_standardize(const StandardizationStats& stats, const FeatureSequence& fs) {
  require(stats.dim() == fs.dim(), ErrorCode::DimensionMismatch,
          "stats have dimension " + std::to_string(stats.dim()) + ", features " + std::to_string(fs.dim()));
  FeatureSequence out = fs;
  out.values = ((fs.values.rowwise() - stats.mean).array().rowwise() / stats.std.array()).matrix();
  return out;
}

/// Skeleton -> normalized skeleton -> features -> (optionally) standardized features.
struct FeaturePipeline {
  NormalizationSpec normalization;
  FeatureVariant variant = FeatureVariant::Raw;
  AngleSpec angles = default_angle_spec();
  std::optional<StandardizationStats> stats;

  FeatureSequence extract(const SkeletonSequence& seq) const {
    return extract_features(normalize(seq, normalization), variant, angles);
  }

  FeatureSequence apply(const SkeletonSequence& seq) const {
    FeatureSequence fs = extract(seq);
    return stats ? apply_standardize(*stats, fs) : fs;
  }
};

}  // namespace repseg
