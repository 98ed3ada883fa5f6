#pragma once

// Random generators and small helpers shared by the test suites.

#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "repseg/skeleton.hpp"

namespace repseg::testing {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

/// Random valid annotation on T frames; gaps (including the edges) may be empty.
inline RepetitionAnnotation random_annotation(Rng& rng, int T, int max_segments) {
  Segments segs;
  int cursor = 0;
  const int n = uniform_int(rng, 0, max_segments);
  for (int k = 0; k < n && cursor < T; ++k) {
    const int start = cursor + uniform_int(rng, 0, std::max(0, (T - cursor) / 4));
    if (start >= T) break;
    const int end = std::min(T, start + uniform_int(rng, 1, std::max(1, T / std::max(1, n))));
    segs.push_back({start, end});
    cursor = end;
  }
  return RepetitionAnnotation(segs, T);
}

/// Random skeleton with J joints whose scale-pair distance stays well above zero.
inline SkeletonSequence random_skeleton(Rng& rng, int T, int J = joint::Count) {
  Eigen::MatrixXd m(T, 3 * J);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1.0, 1.0);
  return SkeletonSequence(m, J == joint::Count ? kinect_joint_names() : std::vector<std::string>{});
}

inline Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Vector3d axis(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
  if (axis.norm() < 1e-3) axis = Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(uniform(rng, -3.1, 3.1), axis.normalized()).toRotationMatrix();
}

/// Applies x -> alpha * R x + t to every joint.
inline SkeletonSequence transform(const SkeletonSequence& s, const Eigen::Matrix3d& R, double alpha,
                                  const Eigen::Vector3d& t) {
  Eigen::MatrixXd m = s.coords();
  for (int f = 0; f < s.frames(); ++f)
    for (int j = 0; j < s.joints(); ++j)
      m.block<1, 3>(f, 3 * j) = (alpha * (R * s.position(f, j)) + t).transpose();
  return s.with_coords(m);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("repseg_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace repseg::testing

#define EXPECT_ERROR_CODE(stmt, expected)                                        \
  do {                                                                           \
    try {                                                                        \
      stmt;                                                                      \
      ADD_FAILURE() << "expected " << repseg::to_string(expected) << ", no throw"; \
    } catch (const repseg::Error& e_) {                                          \
      EXPECT_EQ(e_.code(), expected) << e_.what();                               \
    }                                                                            \
  } while (0)
