#pragma once

// Synthetic rehabilitation-exercise recordings with exact repetition annotations.
//
// A rest-pose 25-joint skeleton is animated by forward kinematics. Each
// repetition is one sinusoidal half-cycle of the exercise's driving angle
// (0 -> amplitude -> 0); between repetitions the subject holds the rest pose.
// Every recording starts and ends with a rest gap.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "repseg/error.hpp"
#include "repseg/seed.hpp"
#include "repseg/skeleton.hpp"

namespace repseg {

struct Sample {
  std::string id;
  SkeletonSequence skeleton;
  RepetitionAnnotation annotation;
};

using Dataset = std::vector<Sample>;

struct SynthParams {
  int n_sequences = 10;
  int reps_min = 3;
  int reps_max = 12;
  double rep_duration_mean = 30.0;  // frames
  double rep_duration_jitter = 0.0;  // uniform +- frames
  double gap_mean = 10.0;
  double gap_jitter = 0.0;
  double joint_noise_std = 0.0;  // meters
  double amplitude_variation = 0.0;  // relative, uniform +-
  double frame_rate = 30.0;
  int n_subjects = 10;
  std::vector<std::string> exercises = {"arm_raise", "squat", "lateral_tilt", "elbow_flexion"};
  std::uint64_t seed = 0;

  void validate() const {
    require(n_sequences >= 1, ErrorCode::InvalidArgument, "n_sequences must be >= 1");
    require(reps_min >= 1 && reps_min <= reps_max, ErrorCode::InvalidArgument, "need 1 <= reps_min <= reps_max");
    require(rep_duration_mean >= 2 && gap_mean >= 1, ErrorCode::InvalidArgument,
            "rep duration must be >= 2 frames and gaps >= 1 frame");
    require(rep_duration_jitter >= 0 && gap_jitter >= 0 && joint_noise_std >= 0 && amplitude_variation >= 0 &&
                amplitude_variation < 1,
            ErrorCode::InvalidArgument, "jitter, noise and amplitude variation must be nonnegative");
    require(frame_rate > 0 && n_subjects >= 1 && !exercises.empty(), ErrorCode::InvalidArgument,
            "frame_rate, n_subjects and exercises must be positive/non-empty");
  }
};

inline Json synth_params_json(const SynthParams& p) {
  return Json{{"n_sequences", p.n_sequences},
              {"reps_range", {p.reps_min, p.reps_max}},
              {"rep_duration_frames", {p.rep_duration_mean, p.rep_duration_jitter}},
              {"gap_frames", {p.gap_mean, p.gap_jitter}},
              {"joint_noise_std", p.joint_noise_std},
              {"amplitude_variation", p.amplitude_variation},
              {"frame_rate", p.frame_rate},
              {"n_subjects", p.n_subjects},
              {"exercises", p.exercises},
              {"seed", p.seed}};
}

inline SynthParams synth_params_from_json(const Json& j, SynthParams p = {}) {
  try {
    p.n_sequences = j.value("n_sequences", p.n_sequences);
    if (j.contains("reps_range")) {
      p.reps_min = j.at("reps_range").at(0).get<int>();
      p.reps_max = j.at("reps_range").at(1).get<int>();
    }
    if (j.contains("rep_duration_frames")) {
      p.rep_duration_mean = j.at("rep_duration_frames").at(0).get<double>();
      p.rep_duration_jitter = j.at("rep_duration_frames").at(1).get<double>();
    }
    if (j.contains("gap_frames")) {
      p.gap_mean = j.at("gap_frames").at(0).get<double>();
      p.gap_jitter = j.at("gap_frames").at(1).get<double>();
    }
    p.joint_noise_std = j.value("joint_noise_std", p.joint_noise_std);
    p.amplitude_variation = j.value("amplitude_variation", p.amplitude_variation);
    p.frame_rate = j.value("frame_rate", p.frame_rate);
    p.n_subjects = j.value("n_subjects", p.n_subjects);
    if (j.contains("exercises")) p.exercises = j.at("exercises").get<std::vector<std::string>>();
    p.seed = j.value("seed", p.seed);
  } catch (const Json::exception& e) {
    fail(ErrorCode::MalformedJson, std::string("synthetic params: ") + e.what());
  }
  p.validate();
  return p;
}

namespace synth {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

inline Mat3 rot_x(double a) { return Eigen::AngleAxisd(a, Vec3::UnitX()).toRotationMatrix(); }
inline Mat3 rot_y(double a) { return Eigen::AngleAxisd(a, Vec3::UnitY()).toRotationMatrix(); }
inline Mat3 rot_z(double a) { return Eigen::AngleAxisd(a, Vec3::UnitZ()).toRotationMatrix(); }

struct Bone {
  int joint;
  int parent;  // -1 for the root
  Vec3 offset;
};

// Parents precede children. y is up, the subject faces -z (towards the camera), left is +x.
inline const std::vector<Bone>& kinect_bones() {
  using namespace joint;
  static const std::vector<Bone> bones = {
      {SpineBase, -1, {0, 0, 0}},
      {SpineMid, SpineBase, {0, 0.25, 0}},
      {SpineShoulder, SpineMid, {0, 0.25, 0}},
      {Neck, SpineShoulder, {0, 0.08, 0}},
      {joint::Head, Neck, {0, 0.15, 0}},
      {ShoulderLeft, SpineShoulder, {0.18, -0.03, 0}},
      {ElbowLeft, ShoulderLeft, {0, -0.28, 0}},
      {WristLeft, ElbowLeft, {0, -0.25, 0}},
      {HandLeft, WristLeft, {0, -0.08, 0}},
      {HandTipLeft, HandLeft, {0, -0.06, 0}},
      {ThumbLeft, WristLeft, {0.03, -0.07, -0.02}},
      {ShoulderRight, SpineShoulder, {-0.18, -0.03, 0}},
      {ElbowRight, ShoulderRight, {0, -0.28, 0}},
      {WristRight, ElbowRight, {0, -0.25, 0}},
      {HandRight, WristRight, {0, -0.08, 0}},
      {HandTipRight, HandRight, {0, -0.06, 0}},
      {ThumbRight, WristRight, {-0.03, -0.07, -0.02}},
      {HipLeft, SpineBase, {0.09, -0.05, 0}},
      {KneeLeft, HipLeft, {0, -0.42, 0}},
      {AnkleLeft, KneeLeft, {0, -0.40, 0}},
      {FootLeft, AnkleLeft, {0, -0.05, -0.12}},
      {HipRight, SpineBase, {-0.09, -0.05, 0}},
      {KneeRight, HipRight, {0, -0.42, 0}},
      {AnkleRight, KneeRight, {0, -0.40, 0}},
      {FootRight, AnkleRight, {0, -0.05, -0.12}},
  };
  return bones;
}

using LocalRotations = std::array<Mat3, joint::Count>;

/// Joint-local rotations for an exercise at driving angle `a` (radians, 0 = rest).
inline LocalRotations exercise_pose(const std::string& exercise, double a) {
  using namespace joint;
  LocalRotations r;
  r.fill(Mat3::Identity());
  if (exercise == "arm_raise") {  // bilateral shoulder flexion
    r[ShoulderLeft] = rot_x(a);
    r[ShoulderRight] = rot_x(a);
  } else if (exercise == "arm_abduction") {
    r[ShoulderLeft] = rot_z(a);
    r[ShoulderRight] = rot_z(-a);
  } else if (exercise == "elbow_flexion") {
    r[ElbowLeft] = rot_x(a);
    r[ElbowRight] = rot_x(a);
  } else if (exercise == "squat") {  // hips flex by a, knees by 2a, trunk leans forward
    r[HipLeft] = rot_x(a);
    r[HipRight] = rot_x(a);
    r[KneeLeft] = rot_x(-2 * a);
    r[KneeRight] = rot_x(-2 * a);
    r[AnkleLeft] = rot_x(a);
    r[AnkleRight] = rot_x(a);
    r[SpineMid] = rot_x(0.4 * a);
  } else if (exercise == "lateral_tilt") {
    r[SpineMid] = rot_z(a);
  } else if (exercise == "trunk_rotation") {
    r[SpineMid] = rot_y(a);
  } else {
    fail(ErrorCode::InvalidArgument, "unknown synthetic exercise '" + exercise + "'");
  }
  return r;
}

inline double exercise_amplitude(const std::string& exercise) {
  constexpr double deg = std::numbers::pi / 180.0;
  if (exercise == "arm_raise") return 100 * deg;
  if (exercise == "arm_abduction") return 80 * deg;
  if (exercise == "elbow_flexion") return 110 * deg;
  if (exercise == "squat") return 45 * deg;
  if (exercise == "lateral_tilt") return 25 * deg;
  if (exercise == "trunk_rotation") return 35 * deg;
  fail(ErrorCode::InvalidArgument, "unknown synthetic exercise '" + exercise + "'");
}

/// World joint positions (25 x 3 rows) for the given local rotations, root at the origin.
inline Eigen::Matrix<double, joint::Count, 3> forward_kinematics(const LocalRotations& local, double body_scale) {
  Eigen::Matrix<double, joint::Count, 3> pos;
  std::array<Mat3, joint::Count> world;
  for (const auto& b : kinect_bones()) {
    if (b.parent < 0) {
      pos.row(b.joint).setZero();
      world[static_cast<std::size_t>(b.joint)] = local[static_cast<std::size_t>(b.joint)];
      continue;
    }
    const Mat3& pw = world[static_cast<std::size_t>(b.parent)];
    pos.row(b.joint) = pos.row(b.parent) + (pw * (body_scale * b.offset)).transpose();
    world[static_cast<std::size_t>(b.joint)] = pw * local[static_cast<std::size_t>(b.joint)];
  }
  return pos;
}

}  // namespace synth

/// Generates one recording per sequence; sequence i performs exercises[i % n] and belongs
/// to subject i % n_subjects (odd subjects tagged as patients).
inline Dataset synth_generate(const SynthParams& params) {
  params.validate();
  using namespace synth;
  Dataset out;
  out.reserve(static_cast<std::size_t>(params.n_sequences));
  const Eigen::Matrix<double, joint::Count, 3> rest = forward_kinematics(exercise_pose("arm_raise", 0.0), 1.0);
  const double rest_ankle_y = 0.5 * (rest(joint::AnkleLeft, 1) + rest(joint::AnkleRight, 1));

  for (int i = 0; i < params.n_sequences; ++i) {
    std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::string& exercise = params.exercises[static_cast<std::size_t>(i) % params.exercises.size()];
    const int subject = i % params.n_subjects;

    std::uniform_int_distribution<int> reps_dist(params.reps_min, params.reps_max);
    const int reps = reps_dist(rng);
    auto draw = [&](double mean, double jitter, int floor) {
      const double v = mean + (jitter > 0 ? jitter * unit(rng) : 0.0);
      return std::max(floor, static_cast<int>(std::lround(v)));
    };
    std::vector<int> gaps, durations;
    std::vector<double> amplitudes;
    const double base_amp = exercise_amplitude(exercise);
    for (int r = 0; r < reps; ++r) {
      gaps.push_back(draw(params.gap_mean, params.gap_jitter, 1));
      durations.push_back(draw(params.rep_duration_mean, params.rep_duration_jitter, 2));
      amplitudes.push_back(base_amp * (1.0 + (params.amplitude_variation > 0 ? params.amplitude_variation * unit(rng) : 0.0)));
    }
    gaps.push_back(draw(params.gap_mean, params.gap_jitter, 1));

    int T = 0;
    for (int g : gaps) T += g;
    for (int d : durations) T += d;

    // Driving angle per frame and the exact annotation.
    std::vector<double> angle(static_cast<std::size_t>(T), 0.0);
    Segments segs;
    int t = gaps[0];
    for (int r = 0; r < reps; ++r) {
      const int d = durations[static_cast<std::size_t>(r)];
      for (int k = 0; k < d; ++k)
        angle[static_cast<std::size_t>(t + k)] =
            amplitudes[static_cast<std::size_t>(r)] * std::sin(std::numbers::pi * (k + 0.5) / d);
      segs.push_back({t, t + d});
      t += d + gaps[static_cast<std::size_t>(r) + 1];
    }

    // Sensor placement and body size vary per recording.
    const double body_scale = 1.0 + 0.08 * unit(rng);
    const double yaw = 0.3 * unit(rng);
    const Vec3 origin(0.3 * unit(rng), 0.9 + 0.05 * unit(rng), 2.5 + 0.3 * unit(rng));
    const Mat3 placement = rot_y(yaw);

    Eigen::MatrixXd coords(T, 3 * joint::Count);
    for (int f = 0; f < T; ++f) {
      auto pos = forward_kinematics(exercise_pose(exercise, angle[static_cast<std::size_t>(f)]), body_scale);
      // Keep the feet on the floor.
      const double ankle_y = 0.5 * (pos(joint::AnkleLeft, 1) + pos(joint::AnkleRight, 1));
      const double lift = body_scale * rest_ankle_y - ankle_y;
      for (int j = 0; j < joint::Count; ++j) {
        Vec3 p = pos.row(j).transpose();
        p.y() += lift;
        p = placement * p + origin;
        for (int c = 0; c < 3; ++c) {
          double v = p(c);
          if (params.joint_noise_std > 0) v += params.joint_noise_std * noise(rng);
          coords(f, 3 * j + c) = v;
        }
      }
    }

    char id[32];
    std::snprintf(id, sizeof(id), "synth_%04d", i);
    SequenceInfo info{params.frame_rate, "s" + std::to_string(subject), exercise, "synthetic",
                      subject % 2 == 1 ? Population::Patient : Population::Healthy};
    out.push_back({id, SkeletonSequence(std::move(coords), kinect_joint_names(), info),
                   RepetitionAnnotation(std::move(segs), T, exercise, info.subject_id)});
  }
  return out;
}

}  // namespace repseg
