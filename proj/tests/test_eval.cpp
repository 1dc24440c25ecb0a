#include <gtest/gtest.h>

#include "fflogo/eval/metrics.hpp"
#include "test_support.hpp"

using namespace fflogo;
namespace ts = test_support;

TEST(RotationError, IdenticalRotationsScoreZero) {
  const auto T = ts::random_transform(1);
  EXPECT_NEAR(rotation_error_deg(T.rotation, T.rotation), 0.0, 1e-6);
}

TEST(RotationError, HalfTurnAboutZIs180) {
  const auto R = RigidTransform::from_axis_angle({0, 0, 1}, M_PI).rotation;
  EXPECT_NEAR(rotation_error_deg(Eigen::Matrix3d::Identity(), R), 180.0, 1e-6);
  EXPECT_NEAR(rotation_error_deg(R, Eigen::Matrix3d::Identity()), 180.0, 1e-6);
}

TEST(RotationError, QuarterTurnAboutAnyAxisIs90) {
  fflogo::Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const auto R = RigidTransform::from_axis_angle(rng.unit_vector3(), M_PI / 2).rotation;
    EXPECT_NEAR(rotation_error_deg(R, Eigen::Matrix3d::Identity()), 90.0, 1e-6);
  }
}

TEST(RotationError, ClampingHandlesDriftAtZero) {
  // A rotation times its own transpose accumulates drift that can push the
  // trace argument past 1; the clamp keeps acos in domain.
  const auto T = ts::random_transform(3);
  Eigen::Matrix3d nearly = T.rotation * T.rotation.transpose() * T.rotation;
  EXPECT_NO_THROW(rotation_error_deg(nearly, T.rotation));
  EXPECT_LT(rotation_error_deg(nearly, T.rotation), 1e-5);
}

TEST(RotationError, Symmetric) {
  for (int i = 0; i < 20; ++i) {
    const auto A = ts::random_transform(100 + i).rotation;
    const auto B = ts::random_transform(200 + i).rotation;
    EXPECT_NEAR(rotation_error_deg(A, B), rotation_error_deg(B, A), 1e-9);
  }
}

TEST(RotationError, BiInvariant) {
  for (int i = 0; i < 20; ++i) {
    const auto A = ts::random_transform(300 + i).rotation;
    const auto B = ts::random_transform(400 + i).rotation;
    const auto Q = ts::random_transform(500 + i).rotation;
    EXPECT_NEAR(rotation_error_deg(Q * A, Q * B), rotation_error_deg(A, B), 1e-9);
    EXPECT_NEAR(rotation_error_deg(A * Q, B * Q), rotation_error_deg(A, B), 1e-9);
  }
}

TEST(RotationError, RejectsNonRotations) {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity() * 2.0;
  EXPECT_THROW(rotation_error_deg(bad, Eigen::Matrix3d::Identity()), std::invalid_argument);
}

TEST(TranslationError, BasicCases) {
  const Eigen::Vector3d t(0.4, -0.2, 0.9);
  EXPECT_EQ(translation_error(t, t), 0.0);
  EXPECT_NEAR(translation_error(t + Eigen::Vector3d(0.3, 0, 0), t), 0.3, 1e-15);
  EXPECT_NEAR(translation_error(t + Eigen::Vector3d(0.1, 0.2, 0.2), t), 0.3, 1e-12);
}

// ---- recall ------------------------------------------------------------------

namespace {

PairEvaluation eval_with(double re, double te) {
  PairEvaluation e;
  e.re_deg = re;
  e.te_m = te;
  e.recalled = re < 15.0 && te < 0.3;
  return e;
}

}  // namespace

TEST(Recall, AllExactIsOne) {
  std::vector<PairEvaluation> evals(5, eval_with(0.0, 0.0));
  EXPECT_EQ(recall(evals), 1.0);
}

TEST(Recall, BoundaryIsStrict) {
  EXPECT_EQ(recall({eval_with(15.0, 0.0)}), 0.0);
  EXPECT_EQ(recall({eval_with(0.0, 0.3)}), 0.0);
  EXPECT_EQ(recall({eval_with(14.999999, 0.299999)}), 1.0);
}

TEST(Recall, CountsFraction) {
  const std::vector<PairEvaluation> evals = {eval_with(1, 0.01), eval_with(2, 0.02),
                                             eval_with(3, 0.03), eval_with(20, 0.5)};
  EXPECT_EQ(recall(evals), 0.75);
}

TEST(Recall, MonotoneInThresholds) {
  fflogo::Rng rng(4);
  std::vector<PairEvaluation> evals;
  for (int i = 0; i < 50; ++i)
    evals.push_back(eval_with(rng.uniform(0.0, 30.0), rng.uniform(0.0, 0.6)));
  double previous = -1.0;
  for (double scale : {0.5, 1.0, 1.5, 2.0}) {
    const double r = recall(evals, 15.0 * scale, 0.3 * scale);
    EXPECT_GE(r, previous);
    previous = r;
  }
}

TEST(Recall, EmptySetThrows) {
  EXPECT_THROW(recall({}), std::invalid_argument);
}

TEST(EvaluatePair, TiesRecallFlagToThresholds) {
  const auto gt = ts::random_transform(5);
  const auto close = compose(RigidTransform::from_axis_angle({0, 0, 1}, 0.001, {0.01, 0, 0}), gt);
  const auto eval = evaluate_pair("p", close, gt);
  EXPECT_TRUE(eval.recalled);
  EXPECT_LT(eval.re_deg, 1.0);

  const auto far = compose(RigidTransform::from_axis_angle({0, 0, 1}, 1.0, {1.0, 0, 0}), gt);
  EXPECT_FALSE(evaluate_pair("p", far, gt).recalled);
}

TEST(RecalledOnlyAggregation, DroppingUnrecalledPairChangesNothing) {
  // Mean RE/TE are defined over recalled pairs only, so removing a
  // non-recalled pair must leave them identical.
  std::vector<PairEvaluation> with = {eval_with(1.0, 0.01), eval_with(2.0, 0.02),
                                      eval_with(25.0, 0.9)};
  std::vector<PairEvaluation> without = {with[0], with[1]};
  auto recalled_mean = [](const std::vector<PairEvaluation>& evals) {
    double re = 0, te = 0;
    int n = 0;
    for (const auto& e : evals)
      if (e.recalled) {
        re += e.re_deg;
        te += e.te_m;
        ++n;
      }
    return std::pair{re / n, te / n};
  };
  EXPECT_EQ(recalled_mean(with), recalled_mean(without));
}
