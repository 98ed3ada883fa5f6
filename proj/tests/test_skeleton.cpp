#include <gtest/gtest.h>

#include "repseg/harness/synth.hpp"
#include "repseg/skeleton.hpp"
#include "test_util.hpp"

using namespace repseg;
using namespace repseg::testing;

namespace {

std::string zero_csv(int frames, int joints) {
  std::string csv = "frame";
  for (int j = 0; j < joints; ++j) {
    const std::string n = "j" + std::to_string(j);
    csv += "," + n + "_x," + n + "_y," + n + "_z";
  }
  csv += "\n";
  for (int t = 0; t < frames; ++t) {
    csv += std::to_string(t);
    for (int c = 0; c < 3 * joints; ++c) csv += ",0";
    csv += "\n";
  }
  return csv;
}

}  // namespace

TEST(ParseSkeleton, TwoFrameZeroFile) {
  const auto seq = parse_skeleton(zero_csv(2, 25));
  EXPECT_EQ(seq.frames(), 2);
  EXPECT_EQ(seq.joints(), 25);
  EXPECT_EQ(seq.coords().cols(), 75);
  EXPECT_TRUE(seq.coords().isZero(0.0));
  EXPECT_EQ(seq.joint_names()[3], "j3");
}

TEST(ParseSkeleton, RejectsNaNCell) {
  std::string csv = zero_csv(3, 2);
  csv.replace(csv.rfind(",0"), 2, ",NaN");
  EXPECT_ERROR_CODE(parse_skeleton(csv), ErrorCode::MalformedRow);
}

TEST(ParseSkeleton, RejectsNonNumericAndInfinite) {
  std::string csv = zero_csv(3, 1);
  const auto bad = [&](const std::string& cell) {
    std::string c = csv;
    c.replace(c.rfind(",0"), 2, "," + cell);
    return c;
  };
  EXPECT_ERROR_CODE(parse_skeleton(bad("abc")), ErrorCode::MalformedRow);
  EXPECT_ERROR_CODE(parse_skeleton(bad("inf")), ErrorCode::MalformedRow);
  EXPECT_ERROR_CODE(parse_skeleton(bad("1,5")), ErrorCode::InconsistentJointCount);
  EXPECT_ERROR_CODE(parse_skeleton(bad("")), ErrorCode::MalformedRow);
}

TEST(ParseSkeleton, RejectsShortSequences) {
  EXPECT_ERROR_CODE(parse_skeleton(zero_csv(1, 25)), ErrorCode::EmptySequence);
  EXPECT_ERROR_CODE(parse_skeleton(""), ErrorCode::EmptySequence);
}

TEST(ParseSkeleton, RejectsRaggedRowsAndBadHeaders) {
  std::string csv = zero_csv(3, 2);
  csv += "3,0,0,0\n";
  EXPECT_ERROR_CODE(parse_skeleton(csv), ErrorCode::InconsistentJointCount);
  EXPECT_ERROR_CODE(parse_skeleton("frame,a_x,a_y\n0,1,2\n1,1,2\n"), ErrorCode::InconsistentJointCount);
  EXPECT_ERROR_CODE(parse_skeleton("frame,a_x,a_y,b_z\n0,1,2,3\n1,1,2,3\n"), ErrorCode::InconsistentJointCount);
}

TEST(ParseSkeleton, AcceptsCrlfAndTrailingBlankLines) {
  std::string csv = "frame,a_x,a_y,a_z\r\n0,1,2,3\r\n1,4,5,6.5\r\n\r\n";
  const auto seq = parse_skeleton(csv);
  EXPECT_EQ(seq.frames(), 2);
  EXPECT_DOUBLE_EQ(seq.position(1, 0).z(), 6.5);
}

TEST(ParseSkeleton, ReadsSidecar) {
  const auto seq = parse_skeleton(zero_csv(2, 1),
                                  R"({"frame_rate": 15, "subject": "s1", "exercise": "squat", "dataset": "kimore",
                                      "population": "patient"})");
  EXPECT_DOUBLE_EQ(seq.info().frame_rate, 15.0);
  EXPECT_EQ(seq.info().subject_id, "s1");
  EXPECT_EQ(seq.info().exercise_id, "squat");
  EXPECT_EQ(seq.info().dataset_id, "kimore");
  EXPECT_EQ(seq.info().population, Population::Patient);
  EXPECT_ERROR_CODE(parse_skeleton(zero_csv(2, 1), "{not json"), ErrorCode::MalformedJson);
  EXPECT_ERROR_CODE(parse_skeleton(zero_csv(2, 1), R"({"frame_rate": -1})"), ErrorCode::MalformedJson);
}

TEST(ParseSkeleton, SerializeParseRoundTripOnGeneratedSequences) {
  SynthParams p;
  p.n_sequences = 8;
  p.joint_noise_std = 0.02;
  p.rep_duration_jitter = 5;
  p.amplitude_variation = 0.3;
  p.seed = 11;
  for (const auto& s : synth_generate(p)) {
    const auto back = parse_skeleton(serialize_skeleton(s.skeleton), sequence_info_json(s.skeleton.info()).dump());
    ASSERT_EQ(back.coords().rows(), s.skeleton.coords().rows());
    EXPECT_LE((back.coords() - s.skeleton.coords()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.joint_names(), s.skeleton.joint_names());
    EXPECT_EQ(back.info().exercise_id, s.skeleton.info().exercise_id);
    EXPECT_EQ(back.info().population, s.skeleton.info().population);
  }
}

TEST(ParseSkeleton, RoundTripRandomMagnitudes) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd m(uniform_int(rng, 2, 20), 3 * uniform_int(rng, 1, 30));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng, -1, 1) * std::pow(10.0, uniform_int(rng, -8, 8));
    const SkeletonSequence s(m, {});
    EXPECT_EQ(parse_skeleton(serialize_skeleton(s)).coords(), m);
  }
}

TEST(Annotation, Examples) {
  EXPECT_EQ(parse_annotation(R"({"length": 100, "segments": []})").count(), 0);
  EXPECT_EQ(parse_annotation(R"({"length": 100, "segments": [[0,50],[50,100]]})").count(), 2);
  EXPECT_ERROR_CODE(parse_annotation(R"({"length": 100, "segments": [[10,60],[40,90]]})"),
                    ErrorCode::OverlappingSegments);
}

TEST(Annotation, SortsAndValidates) {
  const auto a = parse_annotation(R"({"length": 50, "segments": [[30,40],[0,10]], "exercise": "e", "subject": "s"})");
  ASSERT_EQ(a.count(), 2);
  EXPECT_EQ(a.segments()[0], (Segment{0, 10}));
  EXPECT_EQ(a.segments()[1], (Segment{30, 40}));
  EXPECT_EQ(a.exercise(), "e");
  EXPECT_EQ(a.subject(), "s");
  EXPECT_ERROR_CODE(RepetitionAnnotation({{-1, 5}}, 10), ErrorCode::OutOfRangeSegment);
  EXPECT_ERROR_CODE(RepetitionAnnotation({{5, 11}}, 10), ErrorCode::OutOfRangeSegment);
  EXPECT_ERROR_CODE(RepetitionAnnotation({{6, 4}}, 10), ErrorCode::OutOfRangeSegment);
  EXPECT_ERROR_CODE(RepetitionAnnotation({{4, 4}}, 10), ErrorCode::ZeroLengthSegment);
  EXPECT_ERROR_CODE(parse_annotation(R"({"segments": []})"), ErrorCode::MalformedJson);
  EXPECT_ERROR_CODE(parse_annotation(R"({"length": 10, "segments": [[1,2,3]]})"), ErrorCode::MalformedJson);
  EXPECT_NO_THROW(RepetitionAnnotation({{0, 10}}, 10));
}

TEST(Annotation, JsonRoundTrip) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_annotation(rng, uniform_int(rng, 1, 200), 10);
    const auto b = parse_annotation(annotation_json(a).dump());
    EXPECT_EQ(a.segments(), b.segments());
    EXPECT_EQ(a.length(), b.length());
  }
}

TEST(Normalize, TranslateOnlyMovesRootToOrigin) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 75);
  for (int t = 0; t < 4; ++t) {
    for (int j = 0; j < 25; ++j) m.block<1, 3>(t, 3 * j) << 1, 2, 3;
    m.block<1, 3>(t, 3 * joint::SpineShoulder) << 1, 2.5 + t, 3;
  }
  const auto n = normalize(SkeletonSequence(m, kinect_joint_names()), NormalizationSpec{});
  for (int t = 0; t < 4; ++t) EXPECT_LE(n.position(t, joint::SpineBase).norm(), 1e-15);
}

TEST(Normalize, DisabledIsIdentity) {
  Rng rng(1);
  const auto s = random_skeleton(rng, 10);
  NormalizationSpec spec;
  spec.enabled = false;
  EXPECT_EQ(normalize(s, spec).coords(), s.coords());
}

TEST(Normalize, ScaleInvariance) {
  Rng rng(2);
  const auto s = random_skeleton(rng, 30);
  const auto doubled = s.with_coords(2.0 * s.coords());
  EXPECT_LE((normalize(doubled, {}).coords() - normalize(s, {}).coords()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Normalize, IdempotentProperty) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_skeleton(rng, uniform_int(rng, 2, 40));
    const auto once = normalize(s, {});
    EXPECT_LE((normalize(once, {}).coords() - once.coords()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Normalize, SimilarityInvarianceProperty) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = random_skeleton(rng, uniform_int(rng, 2, 40));
    const double alpha = std::exp(uniform(rng, -3, 3));
    const Eigen::Vector3d t(uniform(rng, -10, 10), uniform(rng, -10, 10), uniform(rng, -10, 10));
    const auto moved = transform(s, Eigen::Matrix3d::Identity(), alpha, t);
    EXPECT_LE((normalize(moved, {}).coords() - normalize(s, {}).coords()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Normalize, Errors) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(3, 75);
  const SkeletonSequence s(m, kinect_joint_names());
  EXPECT_ERROR_CODE(normalize(s, {}), ErrorCode::DegenerateScale);
  NormalizationSpec bad;
  bad.root_joint = 25;
  EXPECT_ERROR_CODE(normalize(s, bad), ErrorCode::InvalidArgument);
  bad = {};
  bad.scale_joint_b = bad.scale_joint_a;
  EXPECT_ERROR_CODE(normalize(s, bad), ErrorCode::InvalidArgument);
}

TEST(SkeletonSequence, ConstructorValidates) {
  EXPECT_ERROR_CODE(SkeletonSequence(Eigen::MatrixXd::Zero(1, 3), {}), ErrorCode::EmptySequence);
  EXPECT_ERROR_CODE(SkeletonSequence(Eigen::MatrixXd::Zero(2, 4), {}), ErrorCode::InconsistentJointCount);
  EXPECT_ERROR_CODE(SkeletonSequence(Eigen::MatrixXd::Zero(2, 6), {"a"}), ErrorCode::InconsistentJointCount);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 3);
  m(1, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_ERROR_CODE(SkeletonSequence(m, {}), ErrorCode::MalformedRow);
  EXPECT_EQ(kinect_joint_names().size(), 25u);
}
