#pragma once

// Training targets derived from a repetition annotation.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

struct LabelBundle {
  Eigen::VectorXd binary;   // 1 outside every repetition, 0 inside
  Eigen::VectorXd density;  // one unit of Gaussian mass per repetition
  int count = 0;
};

inline constexpr double kDefaultSigmaFraction = 1.0 / 6.0;

inline Eigen::VectorXd binary_labels(const RepetitionAnnotation& ann) {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(ann.length());
  for (const auto& s : ann.segments()) out.segment(s.start, s.length()).setZero();
  return out;
}

/// Gaussian over each segment: mean at the segment midpoint, std = sigma_fraction * length,
/// truncated to the segment and renormalized to unit mass.
inline Eigen::VectorXd density_map(const RepetitionAnnotation& ann, double sigma_fraction = kDefaultSigmaFraction) {
  require(sigma_fraction > 0 && std::isfinite(sigma_fraction), ErrorCode::InvalidArgument,
          "sigma_fraction must be positive");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ann.length());
  for (const auto& s : ann.segments()) {
    require(s.length() > 0, ErrorCode::ZeroLengthSegment, "zero-length segment");
    const double mu = s.midpoint();
    const double sigma = sigma_fraction * s.length();
    auto bump = out.segment(s.start, s.length());
    for (int t = s.start; t < s.end; ++t) {
      const double z = (t - mu) / sigma;
      bump(t - s.start) = std::exp(-0.5 * z * z);
    }
    bump /= bump.sum();
  }
  return out;
}

inline int count_label(const RepetitionAnnotation& ann) { return ann.count(); }

inline LabelBundle make_labels(const RepetitionAnnotation& ann, double sigma_fraction = kDefaultSigmaFraction) {
  return {binary_labels(ann), density_map(ann, sigma_fraction), count_label(ann)};
}

}  // namespace repseg
