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

// Design when the adversary observes U' instead of U.
//
// The released U reaches the adversary through a fixed invertible binary
// channel P_{U|U'} (Markov chain X - Y - U - U'), and the privacy budget is
// imposed on the adversary's posteriors P_{X|U'=u'}. Writing the inverse
// channel as [[a, c], [b, d]], the optimal P_U is no longer uniform and the
// small-eps utility is 2 r^2 sigma^2 (c - 1/2)(1/2 - a), with r the
// per-letter radius of the budget convention in force.

#ifndef CHI2MECH_ADVERSARY_HPP_
#define CHI2MECH_ADVERSARY_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/designer.hpp"
#include "chi2mech/error.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/probcore.hpp"

namespace chi2mech {

// Channels with |xt - zy| at or below this are rejected.
inline constexpr double kChannelDeterminantThreshold = 1e-9;

enum class ChannelClass {
  kA1,  // a <= 0, d <= 0, b >= 1, c >= 1 (determinant negative)
  kA2,  // a >= 1, d >= 1, b <= 0, c <= 0 (determinant positive)
};

inline std::string ToString(ChannelClass klass) {
  return klass == ChannelClass::kA1 ? "A1" : "A2";
}

// P_{U|U'} = [[x, y], [z, t]] (rows u, columns u') with inverse [[a, c], [b, d]].
struct BinaryChannel {
  ChannelMatrix forward;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  ChannelClass klass = ChannelClass::kA2;

  double determinant() const {
    return forward(0, 0) * forward(1, 1) - forward(1, 0) * forward(0, 1);
  }
  Eigen::Matrix2d InverseMatrix() const {
    Eigen::Matrix2d m;
    m << a, c, b, d;
    return m;
  }
};

inline BinaryChannel InvertBinaryChannel(const ChannelMatrix& forward) {
  Require(forward.outputs() == 2 && forward.inputs() == 2, ErrorCode::kInvalidArgument,
          "adversary channel must be 2x2");
  BinaryChannel ch;
  ch.forward = forward;
  const double x = forward(0, 0);
  const double y = forward(0, 1);
  const double z = forward(1, 0);
  const double t = forward(1, 1);
  const double det = x * t - z * y;
  Require(std::abs(det) > kChannelDeterminantThreshold, ErrorCode::kNumerical,
          "adversary channel is singular (determinant " + std::to_string(det) + ")");
  ch.a = t / det;
  ch.b = -z / det;
  ch.c = -y / det;
  ch.d = x / det;
  ch.klass = det > 0.0 ? ChannelClass::kA2 : ChannelClass::kA1;

  Require(std::abs(ch.a + ch.b - 1.0) <= 1e-12 * std::max(1.0, std::abs(ch.a)) &&
              std::abs(ch.c + ch.d - 1.0) <= 1e-12 * std::max(1.0, std::abs(ch.c)),
          ErrorCode::kInternal, "inverse channel columns do not sum to 1");
  constexpr double kSlack = 1e-12;
  const bool a1 = ch.a <= kSlack && ch.d <= kSlack && ch.b >= 1.0 - kSlack && ch.c >= 1.0 - kSlack;
  const bool a2 = ch.a >= 1.0 - kSlack && ch.d >= 1.0 - kSlack && ch.b <= kSlack && ch.c <= kSlack;
  Require(ch.klass == ChannelClass::kA1 ? a1 : a2, ErrorCode::kInternal,
          "inverse channel coefficients fall outside their class");
  return ch;
}

// Per-u bounds on chi^2(P_{X|U=u} || P_X) induced by the per-u' bound on the
// adversary side, in the form eps^2 (a^2 + b^2), eps^2 (c^2 + d^2). The form
// assumes each adversary posterior is within chi^2 distance eps^2 / 2.
inline std::pair<double, double> InducedUConstraint(const BinaryChannel& ch, double eps) {
  const double e2 = eps * eps;
  return {e2 * (ch.a * ch.a + ch.b * ch.b), e2 * (ch.c * ch.c + ch.d * ch.d)};
}

struct AdversaryDesignReport {
  BinaryChannel channel;
  BudgetConvention budget = BudgetConvention::kEpsSquared;
  double epsilon = 0.0;
  double radius = 0.0;  // per-letter radius r; the budget at U' is r^2
  double sigma = 0.0;
  PerturbationDirection psi;
  bool degenerate = false;
  ProbVector pu;
  ProbVector pu_prime;
  double coeff_u0 = 0.0;  // a - b
  double coeff_u1 = 0.0;  // c - d
  double approx_utility_nats = 0.0;
  double exact_utility_nats = 0.0;
  double leakage_mi_nats = 0.0;  // I(U;X)
  // Adversary side.
  std::vector<ProbVector> adversary_posteriors;
  std::vector<double> chi2_adversary;
  double chi2_information_adversary = 0.0;
  // Agent side.
  std::vector<double> chi2_u;
  std::pair<double, double> induced_bounds;
  double chi2_information_u = 0.0;
  double posthoc_bound = 0.0;  // on epsilon
  MechanismAudit audit;
  std::vector<std::string> warnings;

  // Utility per eps^2 in the small-leakage limit.
  double UtilityCoefficientNats() const {
    return approx_utility_nats / (epsilon * epsilon);
  }
};

struct AdversaryDesign {
  Mechanism mechanism;
  AdversaryDesignReport report;
};

inline AdversaryDesign DesignAdversarialMechanism(
    const ChannelMatrix& leakage, const ProbVector& py, const BinaryChannel& ch, double eps,
    BudgetConvention budget = BudgetConvention::kEpsSquared,
    const DesignOptions& options = {}) {
  const ProbVector px = DerivePx(leakage, py);
  const DesignMatrix w = BuildW(leakage, py, options);
  const PrincipalDirection principal = FindPrincipalDirection(w, px);
  const Eigen::VectorXd shift =
      leakage.Inverse(options.invertibility_threshold) * principal.direction.j;

  const double coeff0 = ch.a - ch.b;
  const double coeff1 = ch.c - ch.d;
  const double max_coeff = std::max({std::abs(coeff0), std::abs(coeff1), 1.0});
  const double radius_per_eps = PerLetterRadius(1.0, budget);
  const double posthoc_radius = std::min(SimplexBound(py, shift, max_coeff),
                                         SimplexBound(px, principal.direction.j, max_coeff));
  const double posthoc = posthoc_radius / radius_per_eps;
  internal::RequireEpsilonInRange(eps, posthoc);
  const double r = PerLetterRadius(eps, budget);

  const double denom = ch.c - ch.a;
  ProbVector pu{(ch.c - 0.5) / denom, (0.5 - ch.a) / denom};

  AdversaryDesign d;
  d.mechanism = internal::BinaryPerturbationMechanism(
      pu, py, shift, px, principal.direction.j, py, Eigen::Vector2d(coeff0, coeff1), r,
      /*observed_is_output=*/true);
  d.mechanism.epsilon = eps;

  AdversaryDesignReport& rep = d.report;
  rep.channel = ch;
  rep.budget = budget;
  rep.epsilon = eps;
  rep.radius = r;
  rep.sigma = principal.sigma;
  rep.psi = principal.direction;
  rep.degenerate = principal.degenerate;
  rep.pu = pu;
  rep.pu_prime = ProbVector(Eigen::Vector2d(ch.InverseMatrix() * pu.values()));
  rep.coeff_u0 = coeff0;
  rep.coeff_u1 = coeff1;
  rep.approx_utility_nats =
      2.0 * r * r * rep.sigma * rep.sigma * (ch.c - 0.5) * (0.5 - ch.a);
  rep.exact_utility_nats = UtilityNats(d.mechanism);
  rep.leakage_mi_nats = LeakageNats(d.mechanism);
  rep.posthoc_bound = posthoc;

  rep.adversary_posteriors.emplace_back(px.values() + r * principal.direction.j);
  rep.adversary_posteriors.emplace_back(px.values() - r * principal.direction.j);
  for (const ProbVector& post : rep.adversary_posteriors) {
    rep.chi2_adversary.push_back(Chi2Divergence(post, px));
  }
  rep.chi2_information_adversary =
      Chi2Information(rep.adversary_posteriors, rep.pu_prime, px);

  // Budget r^2 at U' corresponds to eps^2 / 2 in the induced form with
  // eps = sqrt(2) r.
  rep.induced_bounds = InducedUConstraint(ch, std::sqrt(2.0) * r);
  rep.audit = AuditMechanism(d.mechanism, py, px,
                             std::max(rep.induced_bounds.first, rep.induced_bounds.second));
  rep.chi2_u = rep.audit.chi2_per_letter;
  rep.chi2_information_u = rep.audit.chi2_information;

  Require(rep.audit.Consistent(), ErrorCode::kInternal,
          "adversarial mechanism is not consistent with the marginals");
  Require(std::abs(rep.pu_prime[0] - 0.5) <= 1e-10, ErrorCode::kInternal,
          "adversary marginal is not uniform");
  for (double v : rep.chi2_adversary) {
    Require(v <= r * r * (1.0 + 1e-9) + kChi2AbsoluteSlack, ErrorCode::kInternal,
            "adversary posterior exceeds the per-letter budget");
  }
  Require(rep.chi2_u[0] <= rep.induced_bounds.first * (1.0 + 1e-9) + kChi2AbsoluteSlack &&
              rep.chi2_u[1] <= rep.induced_bounds.second * (1.0 + 1e-9) + kChi2AbsoluteSlack,
          ErrorCode::kInternal, "agent posterior exceeds the induced bound");

  if (principal.degenerate) {
    rep.warnings.push_back("largest singular value is repeated; psi is a deterministic tie-break");
  }
  return d;
}

}  // namespace chi2mech

#endif  // CHI2MECH_ADVERSARY_HPP_
