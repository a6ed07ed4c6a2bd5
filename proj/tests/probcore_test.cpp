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
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "chi2mech/probcore.hpp"
#include "test_support.hpp"

namespace chi2mech {
namespace {

using testing::RandomDistribution;

TEST(ProbVectorTest, AcceptsValidDistribution) {
  const ProbVector p{0.3, 0.7};
  EXPECT_EQ(p.size(), 2);
  EXPECT_DOUBLE_EQ(p[1], 0.7);
  EXPECT_TRUE(p.StrictlyPositive());
}

TEST(ProbVectorTest, RejectsBadSum) {
  EXPECT_THROW((ProbVector{0.3, 0.6}), Error);
  // Within the summation tolerance.
  EXPECT_NO_THROW((ProbVector{0.3, 0.7 + 5e-13}));
}

TEST(ProbVectorTest, ClampsRoundingNoiseButRejectsNegatives) {
  const ProbVector p{-1e-15, 1.0 + 1e-15};
  EXPECT_EQ(p[0], 0.0);
  EXPECT_THROW((ProbVector{-1e-6, 1.0 + 1e-6}), Error);
}

TEST(ProbVectorTest, StrictModeRejectsZeros) {
  EXPECT_THROW(ProbVector::FromStd({0.0, 1.0}, Support::kStrictlyPositive), Error);
  EXPECT_NO_THROW(ProbVector::FromStd({0.0, 1.0}));
}

TEST(ProbVectorTest, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(ProbVector::FromStd({NAN, 1.0}), Error);
  EXPECT_THROW(ProbVector::FromStd({}), Error);
}

TEST(ProbVectorTest, LabelCountMustMatch) {
  EXPECT_THROW(ProbVector(Eigen::Vector2d(0.5, 0.5), Support::kAllowZeros, {"a"}), Error);
  const ProbVector p(Eigen::Vector2d(0.5, 0.5), Support::kAllowZeros, {"a", "b"});
  EXPECT_EQ(p.labels()[1], "b");
}

TEST(ChannelMatrixTest, ValidatesColumns) {
  EXPECT_NO_THROW(ChannelMatrix::FromRows({{0.25, 0.4}, {0.75, 0.6}}));
  EXPECT_THROW(ChannelMatrix::FromRows({{0.25, 0.4}, {0.7, 0.6}}), Error);
  EXPECT_THROW(ChannelMatrix::FromRows({{0.25, 0.4}, {0.75}}), Error);
}

TEST(ChannelMatrixTest, InvertibilityThreshold) {
  const ChannelMatrix singular = ChannelMatrix::FromRows({{0.5, 0.5}, {0.5, 0.5}});
  try {
    singular.RequireInvertible();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumerical);
  }
  const ChannelMatrix rectangular = ChannelMatrix::FromRows({{0.5, 0.5, 1.0}, {0.5, 0.5, 0.0}});
  try {
    rectangular.RequireInvertible();
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  // A custom threshold can reject a well-posed but nearly singular matrix.
  const ChannelMatrix near = ChannelMatrix::FromRows({{0.5, 0.501}, {0.5, 0.499}});
  EXPECT_NO_THROW(near.RequireInvertible());
  EXPECT_THROW(near.RequireInvertible(0.01), Error);
}

TEST(ChannelMatrixTest, InverseIsInverse) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const ChannelMatrix m = testing::RandomInvertibleChannel(rng, 4);
    const Eigen::MatrixXd prod = m.matrix() * m.Inverse();
    EXPECT_LE((prod - Eigen::MatrixXd::Identity(4, 4)).norm(), 1e-10);
  }
}

TEST(JointDistributionTest, MarginalsAndTranspose) {
  const ProbVector pu{0.4, 0.6};
  const std::vector<ProbVector> cond{ProbVector{0.1, 0.9}, ProbVector{0.5, 0.5}};
  const JointDistribution j = JointDistribution::FromConditionals(pu, cond);
  EXPECT_NEAR(j.ColumnMarginal()[0], 0.4, 1e-15);
  EXPECT_NEAR(j.RowMarginal()[0], 0.4 * 0.1 + 0.6 * 0.5, 1e-15);
  EXPECT_EQ(j.Transposed().matrix().rows(), 2);
  EXPECT_THROW(JointDistribution(Eigen::Matrix2d::Constant(0.3)), Error);
}

TEST(KlDivergenceTest, Examples) {
  EXPECT_EQ(KlDivergence(ProbVector{0.3, 0.7}, ProbVector{0.3, 0.7}), 0.0);
  EXPECT_NEAR(KlDivergence(ProbVector{1.0, 0.0}, ProbVector{0.5, 0.5}), std::numbers::ln2, 1e-15);
}

TEST(KlDivergenceTest, SmallPerturbationMatchesDirectSum) {
  const ProbVector p{0.25 - 0.032, 0.75 + 0.032};
  const ProbVector q{0.25, 0.75};
  double direct = 0.0;
  for (int i = 0; i < 2; ++i) direct += p[i] * std::log(p[i] / q[i]);
  EXPECT_NEAR(KlDivergence(p, q), direct, 1e-15);
  // Second-order behaviour: close to chi^2 / 2.
  EXPECT_NEAR(KlDivergence(p, q) / (0.5 * Chi2Divergence(p, q)), 1.0, 0.1);
}

TEST(KlDivergenceTest, Errors) {
  EXPECT_THROW(KlDivergence(ProbVector{0.5, 0.5}, ProbVector{1.0, 0.0}), Error);
  EXPECT_THROW(KlDivergence(ProbVector{0.5, 0.5}, ProbVector{0.2, 0.3, 0.5}), Error);
  EXPECT_NO_THROW(KlDivergence(ProbVector{1.0, 0.0}, ProbVector{1.0, 0.0}));
}

TEST(Chi2DivergenceTest, SaturatesOnUnitDirection) {
  const ProbVector px{0.3625, 0.6375};
  Eigen::Vector2d l(-std::sqrt(px[1]), std::sqrt(px[0]));  // unit and orthogonal to sqrt(P_X)
  const double eps = 0.05;
  const ProbVector post(px.values() + eps * px.Sqrt().cwiseProduct(l));
  EXPECT_NEAR(Chi2Divergence(post, px), eps * eps, 1e-16);
  EXPECT_EQ(Chi2Divergence(px, px), 0.0);
}

TEST(DivergenceProperty, KlBoundedByChi2OnRandomPairs) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> dim(2, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = dim(rng);
    const ProbVector p = RandomDistribution(rng, k, 0.0);
    const ProbVector q = RandomDistribution(rng, k, 0.01);
    const double kl = KlDivergence(p, q);
    EXPECT_GE(kl, 0.0);
    EXPECT_LE(kl, Chi2Divergence(p, q) * (1.0 + 1e-12) + 1e-15) << "trial " << trial;
  }
}

TEST(MutualInformationTest, Examples) {
  EXPECT_NEAR(MutualInformation(JointDistribution(Eigen::Matrix2d::Constant(0.25))), 0.0, 1e-16);
  Eigen::Matrix2d diag;
  diag << 0.5, 0.0, 0.0, 0.5;
  EXPECT_NEAR(MutualInformation(JointDistribution(diag)), std::numbers::ln2, 1e-15);
}

TEST(MutualInformationProperty, SymmetricAndEqualsAverageKl) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 2 + trial % 4;
    const Index m = 2 + trial % 3;
    const ProbVector pu = RandomDistribution(rng, m);
    std::vector<ProbVector> cond;
    for (Index u = 0; u < m; ++u) cond.push_back(RandomDistribution(rng, k));
    const JointDistribution j = JointDistribution::FromConditionals(pu, cond);
    const double mi = MutualInformation(j);
    EXPECT_NEAR(mi, MutualInformation(j.Transposed()), 1e-14);
    const ProbVector py = j.RowMarginal();
    double avg = 0.0;
    for (Index u = 0; u < m; ++u) avg += pu[u] * KlDivergence(cond[u], py);
    EXPECT_NEAR(mi, avg, 1e-12);
  }
}

TEST(Chi2InformationTest, Basics) {
  const ProbVector prior{0.4, 0.6};
  const ProbVector pu{0.5, 0.5};
  EXPECT_EQ(Chi2Information(std::vector<ProbVector>{prior, prior}, pu, prior), 0.0);
  EXPECT_THROW(Chi2Information(std::vector<ProbVector>{prior}, pu, prior), Error);
}

TEST(Chi2InformationProperty, BoundedByMaxAndInvariantUnderRelabeling) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Index k = 3;
    const ProbVector pu = RandomDistribution(rng, 3);
    const ProbVector prior = RandomDistribution(rng, k);
    std::vector<ProbVector> posts;
    double worst = 0.0;
    for (int u = 0; u < 3; ++u) {
      posts.push_back(RandomDistribution(rng, k));
      worst = std::max(worst, Chi2Divergence(posts.back(), prior));
    }
    const double info = Chi2Information(posts, pu, prior);
    EXPECT_LE(info, worst + 1e-15);
    const ProbVector pu_perm(Eigen::Vector3d(pu[2], pu[0], pu[1]));
    const std::vector<ProbVector> posts_perm{posts[2], posts[0], posts[1]};
    EXPECT_NEAR(Chi2Information(posts_perm, pu_perm, prior), info, 1e-14);
  }
}

// X - U - U': the averaged criterion can only shrink under post-processing.
TEST(Chi2InformationProperty, PostProcessing) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const Index k = 2 + trial % 4;
    const Index m = 2 + trial % 3;
    const Index m2 = 2 + (trial / 3) % 3;
    const ProbVector pu = RandomDistribution(rng, m);
    std::vector<ProbVector> posts;
    for (Index u = 0; u < m; ++u) posts.push_back(RandomDistribution(rng, k));
    const ProbVector px(Mixture(pu, posts));
    const ChannelMatrix chan = testing::RandomChannel(rng, m2, m);  // P_{U'|U}
    const ProbVector pu2 = chan.Push(pu);
    std::vector<ProbVector> posts2;
    for (Index v = 0; v < m2; ++v) {
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(k);
      for (Index u = 0; u < m; ++u) acc += chan(v, u) * pu[u] * posts[u].values();
      posts2.emplace_back(acc / acc.sum());
    }
    EXPECT_LE(Chi2Information(posts2, pu2, px), Chi2Information(posts, pu, px) + 1e-14);
  }
}

TEST(MmseBinaryTest, Examples) {
  EXPECT_DOUBLE_EQ(MmseBinary(ProbVector{0.5, 0.5}), 0.25);
  EXPECT_DOUBLE_EQ(MmseBinary(ProbVector{1.0, 0.0}), 0.0);
  // Prior of the binary symmetric example at crossover 0.25.
  EXPECT_DOUBLE_EQ(MmseBinary(ProbVector{0.625, 0.375}), 0.234375);
  EXPECT_THROW(MmseBinary(ProbVector{0.2, 0.3, 0.5}), Error);
}

TEST(ErrorProbabilityTest, Examples) {
  const ProbVector uniform{0.5, 0.5};
  EXPECT_DOUBLE_EQ(ErrorProbability(uniform, std::vector<ProbVector>{uniform, uniform}), 0.5);
  EXPECT_DOUBLE_EQ(ErrorProbability(uniform, std::vector<ProbVector>{ProbVector{1.0, 0.0},
                                                                      ProbVector{0.0, 1.0}}),
                   0.0);
  EXPECT_THROW(ErrorProbability(ProbVector{0.2, 0.3, 0.5}, std::vector<ProbVector>{uniform, uniform}),
               Error);
}

}  // namespace
}  // namespace chi2mech
