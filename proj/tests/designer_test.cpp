// Copyright 2026 The chi2mech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chi2mech/designer.hpp"
#include "test_support.hpp"

namespace chi2mech {
namespace {

using testing::Bsc;
using testing::BinaryLeakage;
using testing::BinaryLeakagePy;
using testing::RareOutcomeLeakage;
using testing::RareOutcomePy;

// Independent 2x2 construction of W through the adjugate inverse.
Eigen::Matrix2d ReferenceW2x2(const ChannelMatrix& m, const ProbVector& py) {
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  const double det = a * d - b * c;
  Eigen::Matrix2d inv;
  inv << d / det, -b / det, -c / det, a / det;
  const double px0 = a * py[0] + b * py[1];
  const double px1 = c * py[0] + d * py[1];
  Eigen::Matrix2d w;
  for (int y = 0; y < 2; ++y) {
    w(y, 0) = inv(y, 0) * std::sqrt(px0) / std::sqrt(py[y]);
    w(y, 1) = inv(y, 1) * std::sqrt(px1) / std::sqrt(py[y]);
  }
  return w;
}

TEST(DerivePxTest, Examples) {
  const ProbVector px = DerivePx(BinaryLeakage(), BinaryLeakagePy());
  EXPECT_NEAR(px[0], 0.3625, 1e-15);
  EXPECT_NEAR(px[1], 0.6375, 1e-15);
  const ProbVector py{0.2, 0.3, 0.5};
  const ChannelMatrix id(Eigen::Matrix3d::Identity());
  EXPECT_LE(MaxAbsDifference(DerivePx(id, py).values(), py.values()), 0.0);
  EXPECT_NEAR(DerivePx(RareOutcomeLeakage(), RareOutcomePy())[1], 0.101, 1e-15);
}

TEST(DerivePxTest, Errors) {
  EXPECT_THROW(DerivePx(BinaryLeakage(), ProbVector{0.2, 0.3, 0.5}), Error);
  // Column 1 puts no mass on x = 0 and P_Y is concentrated on it.
  const ChannelMatrix m = ChannelMatrix::FromRows({{0.5, 0.0}, {0.5, 1.0}});
  EXPECT_THROW(DerivePx(m, ProbVector{0.0, 1.0}), Error);
}

TEST(BuildWTest, BinaryLeakage) {
  const DesignMatrix w = BuildW(BinaryLeakage(), BinaryLeakagePy());
  Eigen::Matrix2d printed;
  printed << -4.8166, 4.2583, 3.4761, -1.5366;
  EXPECT_LE((w.w - printed).cwiseAbs().maxCoeff(), 5e-4);
  EXPECT_LE((w.w - ReferenceW2x2(BinaryLeakage(), BinaryLeakagePy())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(w.SigmaMax(), 7.4012, 5e-4);
  EXPECT_NEAR(w.SigmaMin(), 1.0, 5e-4);
}

TEST(BuildWTest, RareOutcome) {
  const DesignMatrix w = BuildW(RareOutcomeLeakage(), RareOutcomePy());
  Eigen::Matrix2d printed;
  printed << 1.4501, -0.2277, -0.0386, 1.0355;
  // The printed matrix orders both alphabets as (1, 0).
  Eigen::Matrix2d swap;
  swap << 0, 1, 1, 0;
  EXPECT_LE((swap * w.w * swap - printed).cwiseAbs().maxCoeff(), 5e-4);
  EXPECT_LE((w.w - ReferenceW2x2(RareOutcomeLeakage(), RareOutcomePy())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BuildWTest, IdentityLeakageGivesIdentity) {
  const ChannelMatrix id(Eigen::Matrix3d::Identity());
  const DesignMatrix w = BuildW(id, ProbVector{0.2, 0.3, 0.5});
  EXPECT_LE((w.w - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(BuildWTest, Errors) {
  const ChannelMatrix singular = ChannelMatrix::FromRows({{0.5, 0.5}, {0.5, 0.5}});
  try {
    BuildW(singular, BinaryLeakagePy());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumerical);
  }
  EXPECT_THROW(BuildW(BinaryLeakage(), ProbVector::FromStd({0.0, 1.0})), Error);
}

TEST(PrincipalDirectionTest, BinaryLeakage) {
  const ProbVector px = DerivePx(BinaryLeakage(), BinaryLeakagePy());
  const PrincipalDirection p = FindPrincipalDirection(BuildW(BinaryLeakage(), BinaryLeakagePy()), px);
  EXPECT_FALSE(p.degenerate);
  EXPECT_NEAR(p.direction.l(0), 0.7984, 5e-4);
  EXPECT_NEAR(p.direction.l(1), -0.6021, 5e-4);
  EXPECT_NEAR(p.direction.l.norm(), 1.0, 1e-14);
  EXPECT_NEAR(p.sigma, 7.4012, 5e-4);
}

TEST(PrincipalDirectionTest, BinarySymmetricClosedForm) {
  for (double alpha : {0.1, 0.25, 0.4}) {
    const ProbVector py{0.25, 0.75};
    const ProbVector px = DerivePx(Bsc(alpha), py);
    const PrincipalDirection p = FindPrincipalDirection(BuildW(Bsc(alpha), py), px);
    const Eigen::Vector2d printed(-std::sqrt((3 - 2 * alpha) / 4), std::sqrt((2 * alpha + 1) / 4));
    EXPECT_NEAR(std::abs(p.direction.l.dot(printed)), 1.0, 1e-12) << alpha;
  }
}

TEST(PrincipalDirectionTest, DegenerateSpectrumUsesDeterministicTieBreak) {
  const ChannelMatrix id(Eigen::Matrix3d::Identity());
  const ProbVector py{0.2, 0.3, 0.5};
  const DesignMatrix w = BuildW(id, py);
  const PrincipalDirection a = FindPrincipalDirection(w, py);
  const PrincipalDirection b = FindPrincipalDirection(w, py);
  EXPECT_TRUE(a.degenerate);
  EXPECT_NEAR(a.sigma, 1.0, 1e-12);
  EXPECT_LE(std::abs(a.direction.l.dot(py.Sqrt())), 1e-12);
  EXPECT_EQ(a.direction.l, b.direction.l);
  // The mechanism is still valid and has utility coefficient 1/2.
  const Design d = DesignMechanism(id, py, 0.01);
  EXPECT_NEAR(d.report.UtilityCoefficientNats(), 0.5, 1e-9);
  EXPECT_FALSE(d.report.warnings.empty());
}

TEST(PrincipalDirectionTest, RejectsForeignMatrix) {
  // A matrix not built from this prior: the top vector is not orthogonal to sqrt(P_X).
  const DesignMatrix w = DesignMatrix::FromMatrix(Eigen::Matrix2d(Eigen::Vector2d(3.0, 1.0).asDiagonal()));
  EXPECT_THROW(FindPrincipalDirection(w, ProbVector{0.5, 0.5}), Error);
}

TEST(EpsilonBoundsTest, BinaryLeakage) {
  const ProbVector px = DerivePx(BinaryLeakage(), BinaryLeakagePy());
  const PrincipalDirection p = FindPrincipalDirection(BuildW(BinaryLeakage(), BinaryLeakagePy()), px);
  const EpsilonBounds b = ComputeEpsilonBounds(BinaryLeakage(), BinaryLeakagePy(), px, p.direction);
  EXPECT_NEAR(b.posthoc, 0.078, 1e-3);
  EXPECT_NEAR(b.posthoc, 0.25 / 3.2048, 1e-4);
  EXPECT_NEAR(b.leakage_expansion, 0.3625 / std::sqrt(0.6375), 1e-15);
  EXPECT_NEAR(b.leakage_expansion, 0.4540, 5e-5);
  // sigma_min of the leakage matrix, independently: sqrt of the smaller
  // eigenvalue of M^T M.
  const Eigen::Matrix2d mtm = BinaryLeakage().matrix().transpose() * BinaryLeakage().matrix();
  const double tr = mtm.trace(), det = mtm.determinant();
  const double smin = std::sqrt(0.5 * (tr - std::sqrt(tr * tr - 4 * det)));
  EXPECT_NEAR(b.utility_expansion, smin * 0.25 / std::sqrt(0.6375), 1e-12);
}

TEST(EpsilonBoundsTest, BinarySymmetricClosedForm) {
  for (double alpha : {0.1, 0.25, 0.4}) {
    const ProbVector py{0.25, 0.75};
    const ProbVector px = DerivePx(Bsc(alpha), py);
    const PrincipalDirection p = FindPrincipalDirection(BuildW(Bsc(alpha), py), px);
    const EpsilonBounds b = ComputeEpsilonBounds(Bsc(alpha), py, px, p.direction);
    EXPECT_NEAR(b.posthoc,
                std::abs(2 * alpha - 1) / std::sqrt((3 - 2 * alpha) * (2 * alpha + 1)), 1e-12);
  }
}

TEST(DesignMechanismTest, BinaryLeakageConditionals) {
  for (double eps : {0.001, 0.01, 0.05}) {
    const Design d = DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), eps);
    const Mechanism& m = d.mechanism;
    EXPECT_DOUBLE_EQ(m.pu[0], 0.5);
    EXPECT_NEAR(m.output_conditionals[0][0], 0.25 - 3.2048 * eps, 5e-4 * eps);
    EXPECT_NEAR(m.output_conditionals[0][1], 0.75 + 3.2048 * eps, 5e-4 * eps);
    EXPECT_NEAR(m.output_conditionals[1][0], 0.25 + 3.2048 * eps, 5e-4 * eps);
    EXPECT_NEAR(d.report.approx_utility_nats, 0.5 * eps * eps * d.report.sigma_max * d.report.sigma_max,
                1e-18);
    EXPECT_NEAR(d.report.UtilityCoefficientNats(), 27.39, 0.05);
    EXPECT_NEAR(d.report.lambda_min * d.report.sigma_max * d.report.sigma_max, 1.0, 1e-12);
  }
}

TEST(DesignMechanismTest, BinarySymmetricConditionals) {
  const double alpha = 0.25, eps = 0.05;
  const ProbVector py{0.25, 0.75};
  const Design d = DesignMechanism(Bsc(alpha), py, eps);
  const double shift = eps * std::sqrt((3 - 2 * alpha) * (2 * alpha + 1)) / (4 * (2 * alpha - 1));
  // Either orientation of L* is optimal; the sign convention picks the one
  // whose U = 0 favours Y = 0.
  EXPECT_NEAR(std::abs(d.mechanism.output_conditionals[0][0] - 0.25), std::abs(shift), 1e-14);
  EXPECT_NEAR(d.mechanism.output_conditionals[0][0], 0.25 - shift, 1e-14);
  EXPECT_NEAR(d.report.sigma_max * d.report.sigma_max,
              (2 * alpha + 1) * (3 - 2 * alpha) / (3 * (2 * alpha - 1) * (2 * alpha - 1)), 1e-12);
}

TEST(DesignMechanismTest, RareOutcomeUtilityCoefficients) {
  const Design d = DesignMechanism(RareOutcomeLeakage(), RareOutcomePy(), 0.005);
  EXPECT_NEAR(d.report.UtilityCoefficientNats(), 1.1141, 2e-3);
  EXPECT_NEAR(d.report.UtilityCoefficientBits(), 1.6073, 2e-3);
}

TEST(DesignMechanismTest, EpsilonPolicy) {
  const auto code_of = [](double eps) {
    try {
      DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), eps);
    } catch (const Error& e) {
      return static_cast<int>(e.code());
    }
    return -1;
  };
  EXPECT_EQ(code_of(0.0), static_cast<int>(ErrorCode::kInfeasibleEpsilon));
  EXPECT_EQ(code_of(-0.01), static_cast<int>(ErrorCode::kInfeasibleEpsilon));
  EXPECT_EQ(code_of(0.0781), static_cast<int>(ErrorCode::kInfeasibleEpsilon));
  EXPECT_EQ(code_of(NAN), static_cast<int>(ErrorCode::kInvalidArgument));
  EXPECT_EQ(code_of(0.07), -1);
  // Between the a-priori bounds and the post-hoc bound: valid but flagged.
  const Design d = DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), 0.07);
  EXPECT_FALSE(d.report.warnings.empty());
  EXPECT_TRUE(DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), 0.01).report.warnings.empty());
}

TEST(TightnessTest, Examples) {
  const TightnessResult t = CheckUpperBoundTightness(BinaryLeakage(), BinaryLeakagePy());
  EXPECT_NEAR(t.lambda_min, 1.0 / (7.4012 * 7.4012), 1e-5);
  const ChannelMatrix id(Eigen::Matrix2d::Identity());
  EXPECT_NEAR(CheckUpperBoundTightness(id, BinaryLeakagePy()).lambda_min, 1.0, 1e-12);
}

TEST(TightnessTest, QIsInverseOfW) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Index k = 2 + trial % 4;
    const ChannelMatrix m = testing::RandomInvertibleChannel(rng, k);
    const ProbVector py = testing::RandomDistribution(rng, k);
    const TightnessResult t = CheckUpperBoundTightness(m, py);
    const DesignMatrix w = BuildW(m, py);
    EXPECT_LE((t.q * w.w - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-9);
  }
}

// Smallest singular value 1 at sqrt(P_X), all others at least 1.
TEST(DesignProperty, UnitSingularValueAtSqrtPx) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 2 + trial % 4;
    const ChannelMatrix m = testing::RandomInvertibleChannel(rng, k);
    const ProbVector py = testing::RandomDistribution(rng, k);
    const ProbVector px = DerivePx(m, py);
    const DesignMatrix w = BuildW(m, py);
    EXPECT_NEAR(w.SigmaMin(), 1.0, 1e-7);
    EXPECT_NEAR(std::abs(w.RightVector(k - 1).dot(px.Sqrt())), 1.0, 1e-7);
    EXPECT_GE(w.singular_values().minCoeff(), 1.0 - 1e-9);
  }
}

TEST(DesignProperty, ConsistencyAndSaturation) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 2 + trial % 4;
    const ChannelMatrix m = testing::RandomInvertibleChannel(rng, k);
    const ProbVector py = testing::RandomDistribution(rng, k);
    const ProbVector px = DerivePx(m, py);
    const PrincipalDirection p = FindPrincipalDirection(BuildW(m, py), px);
    const double eps = ComputeEpsilonBounds(m, py, px, p.direction).posthoc / 4;
    const Design d = DesignMechanism(m, py, eps);
    EXPECT_LE(d.report.audit.output_mixture_error, 1e-10);
    EXPECT_LE(d.report.audit.posterior_mixture_error, 1e-10);
    for (double c : d.report.chi2_per_letter) EXPECT_NEAR(c, eps * eps, 1e-12);
    EXPECT_NEAR(d.report.chi2_information, eps * eps, 1e-12);
    // The kernel regenerates the output conditionals by Bayes.
    for (Index u = 0; u < 2; ++u) {
      const Eigen::VectorXd back = (d.mechanism.kernel.matrix().row(u).transpose().cwiseProduct(
                                       py.values())) / d.mechanism.pu[u];
      EXPECT_LE(MaxAbsDifference(back, d.mechanism.output_conditionals[u].values()), 1e-12);
    }
  }
}

TEST(DesignProperty, LeakageResidualShrinksFasterThanEpsSquared) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Index k = 2 + trial % 3;
    const ChannelMatrix m = testing::RandomInvertibleChannel(rng, k, 0.2);
    const ProbVector py = testing::RandomDistribution(rng, k, 0.1);
    double previous = INFINITY;
    for (double eps : {0.01, 0.005, 0.0025}) {
      const Design d = DesignMechanism(m, py, eps);
      const double leak = d.report.leakage_mi_nats;
      EXPECT_LE(leak, 0.5 * eps * eps * (1.0 + eps));
      const double ratio = std::abs(leak - 0.5 * eps * eps) / (eps * eps);
      EXPECT_LT(ratio, previous);
      previous = ratio;
    }
  }
}

TEST(DesignProperty, UtilityApproximationImprovesAsEpsHalves) {
  double previous = INFINITY;
  for (double eps : {0.02, 0.01, 0.005, 0.0025}) {
    const Design d = DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), eps);
    const double ratio =
        std::abs(d.report.exact_utility_nats - d.report.approx_utility_nats) / (eps * eps);
    EXPECT_LT(ratio, previous);
    previous = ratio;
  }
}

TEST(DesignProperty, FlippingDirectionSwapsLabels) {
  const Design d = DesignMechanism(BinaryLeakage(), BinaryLeakagePy(), 0.02);
  Mechanism flipped = d.mechanism;
  std::swap(flipped.output_conditionals[0], flipped.output_conditionals[1]);
  std::swap(flipped.posteriors[0], flipped.posteriors[1]);
  EXPECT_NEAR(UtilityNats(flipped), d.report.exact_utility_nats, 1e-16);
  EXPECT_NEAR(LeakageNats(flipped), d.report.leakage_mi_nats, 1e-16);
  const ProbVector px = DerivePx(BinaryLeakage(), BinaryLeakagePy());
  const MechanismAudit a = AuditMechanism(flipped, BinaryLeakagePy(), px, 0.02 * 0.02);
  EXPECT_TRUE(a.Consistent());
  EXPECT_NEAR(a.chi2_max, d.report.audit.chi2_max, 1e-18);
}

}  // namespace
}  // namespace chi2mech
