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

// Design for a data provider that holds X, wants to disclose about Y and
// must protect Z, with (Z, Y) - X - U. The relevant operator is W1 W2 with
//
//   W1 = diag(1/sqrt(P_Y)) P_{Y|X} diag(sqrt(P_X))        (|Y| x K)
//   W2 = diag(1/sqrt(P_X)) P_{Z|X}^{-1} diag(sqrt(P_Z))   (K x K)
//
// sqrt(P_Z) is always a right singular vector of W1 W2 with value 1, but 1
// need not be the smallest singular value here, so the maximizer over the
// complement of sqrt(P_Z) is either the top right vector (sigma_max > 1) or
// the best direction once sqrt(P_Z) is removed.

#ifndef CHI2MECH_PROVIDER_HPP_
#define CHI2MECH_PROVIDER_HPP_

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/designer.hpp"
#include "chi2mech/error.hpp"
#include "chi2mech/linalg.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/probcore.hpp"

namespace chi2mech {

// sigma_max(W1 W2) above 1 + kProviderCaseTolerance selects the top vector.
inline constexpr double kProviderCaseTolerance = 1e-7;

struct ProviderScenario {
  ChannelMatrix p_y_given_x;  // |Y| x K
  ChannelMatrix p_z_given_x;  // K x K, invertible
  ProbVector px;
  ProbVector py;  // derived
  ProbVector pz;  // derived

  static ProviderScenario Make(ChannelMatrix p_y_given_x, ChannelMatrix p_z_given_x,
                               ProbVector px) {
    Require(px.StrictlyPositive(), ErrorCode::kInvalidArgument, "P_X must be strictly positive");
    Require(p_y_given_x.inputs() == px.size(), ErrorCode::kInvalidArgument,
            "P_{Y|X} has " + std::to_string(p_y_given_x.inputs()) +
                " columns but P_X has " + std::to_string(px.size()) + " entries");
    Require(p_z_given_x.inputs() == px.size() && p_z_given_x.outputs() == px.size(),
            ErrorCode::kInvalidArgument, "P_{Z|X} must be square with one column per x");
    ProviderScenario s;
    s.py = p_y_given_x.Push(px);
    s.pz = p_z_given_x.Push(px);
    Require(s.py.StrictlyPositive(), ErrorCode::kInvalidArgument,
            "derived P_Y must be strictly positive");
    Require(s.pz.StrictlyPositive(), ErrorCode::kInvalidArgument,
            "derived P_Z must be strictly positive");
    s.p_y_given_x = std::move(p_y_given_x);
    s.p_z_given_x = std::move(p_z_given_x);
    s.px = std::move(px);
    return s;
  }

  Index dimension() const { return px.size(); }
};

enum class ProviderCase {
  kSigmaGtOne,
  kSigmaEqOne,
};

inline std::string ToString(ProviderCase c) {
  return c == ProviderCase::kSigmaGtOne ? "sigma_gt_one" : "sigma_eq_one";
}

struct ProviderMatrices {
  DesignMatrix w1;
  DesignMatrix w2;
  DesignMatrix product;
  double fixed_vector_residual = 0.0;  // max of |W sqrt(P_Z) - sqrt(P_Y)|, |W^T sqrt(P_Y) - sqrt(P_Z)|
};

inline ProviderMatrices BuildW1W2(const ProviderScenario& s, const DesignOptions& options = {}) {
  const Eigen::VectorXd sqrt_px = s.px.Sqrt();
  const Eigen::VectorXd sqrt_py = s.py.Sqrt();
  const Eigen::VectorXd sqrt_pz = s.pz.Sqrt();
  ProviderMatrices out;
  out.w1 = DesignMatrix::FromMatrix(sqrt_py.cwiseInverse().asDiagonal() *
                                    s.p_y_given_x.matrix() * sqrt_px.asDiagonal());
  out.w2 = DesignMatrix::FromMatrix(sqrt_px.cwiseInverse().asDiagonal() *
                                    s.p_z_given_x.Inverse(options.invertibility_threshold) *
                                    sqrt_pz.asDiagonal());
  out.product = DesignMatrix::FromMatrix(out.w1.w * out.w2.w);
  out.fixed_vector_residual =
      std::max(MaxAbsDifference(out.product.w * sqrt_pz, sqrt_py),
               MaxAbsDifference(out.product.w.transpose() * sqrt_py, sqrt_pz));
  Require(out.fixed_vector_residual <= 1e-7, ErrorCode::kNumerical,
          "sqrt(P_Z) is not a unit singular direction of W1 W2 (residual " +
              std::to_string(out.fixed_vector_residual) + ")");
  return out;
}

struct ProviderReport {
  ProviderMatrices matrices;
  ProviderCase selected_case = ProviderCase::kSigmaEqOne;
  double sigma_max = 0.0;  // of W1 W2
  double sigma = 0.0;      // gain of the chosen direction
  PerturbationDirection chosen_direction;  // on Z: J = diag(sqrt(P_Z)) L
  bool tie_break = false;
  BudgetConvention budget = BudgetConvention::kEpsSquared;
  double epsilon = 0.0;
  double radius = 0.0;
  Eigen::VectorXd x_shift;  // P_{Z|X}^{-1} J
  Eigen::VectorXd y_shift;  // P_{Y|X} P_{Z|X}^{-1} J
  std::vector<ProbVector> x_conditionals;  // P_{X|U=u}
  double approx_utility_nats = 0.0;
  double exact_utility_nats = 0.0;  // I(U;Y)
  double leakage_mi_nats = 0.0;     // I(U;Z)
  double posthoc_bound = 0.0;       // on epsilon, by analogy with the base design
  MechanismAudit audit;
  std::vector<std::string> warnings;

  double UtilityCoefficientNats() const { return approx_utility_nats / (epsilon * epsilon); }
};

struct ProviderDesign {
  Mechanism mechanism;  // output_conditionals on Y, posteriors on Z, kernel P_{U|X}
  ProviderReport report;
};

struct ProviderDirection {
  ProviderCase selected_case;
  PerturbationDirection direction;
  double sigma;
  bool tie_break;
};

inline ProviderDirection SelectProviderDirection(const DesignMatrix& product,
                                                 const ProbVector& pz) {
  const Eigen::VectorXd anchor = pz.Sqrt();
  const Eigen::VectorXd& s = product.singular_values();
  ProviderDirection out;
  out.selected_case = s(0) > 1.0 + kProviderCaseTolerance ? ProviderCase::kSigmaGtOne
                                                          : ProviderCase::kSigmaEqOne;
  const bool simple_top = s.size() < 2 || s(0) - s(1) > kDegeneracyTolerance * s(0);
  Eigen::VectorXd l;
  if (out.selected_case == ProviderCase::kSigmaGtOne && simple_top) {
    l = product.RightVector(0);
    out.sigma = s(0);
    out.tie_break = false;
  } else {
    // Either the top value is shared, or sqrt(P_Z) itself attains it and the
    // maximizer has to be found on its complement.
    const ConstrainedMaximizer best = MaximizeOrthogonalTo(product.w, anchor);
    l = best.direction;
    out.sigma = best.gain;
    out.tie_break = s.size() > 1 && s(0) - s(1) <= kDegeneracyTolerance * s(0);
  }
  Require(std::abs(l.dot(anchor)) <= 1e-8, ErrorCode::kNumerical,
          "provider direction is not orthogonal to sqrt(P_Z)");
  l -= l.dot(anchor) * anchor;
  l.normalize();
  out.direction = PerturbationDirection::Make(l, pz);
  return out;
}

inline ProviderDesign DesignProviderMechanism(const ProviderScenario& s, double eps,
                                              BudgetConvention budget = BudgetConvention::kEpsSquared,
                                              const DesignOptions& options = {}) {
  ProviderMatrices mats = BuildW1W2(s, options);
  const ProviderDirection dir = SelectProviderDirection(mats.product, s.pz);
  const Eigen::VectorXd x_shift =
      s.p_z_given_x.Inverse(options.invertibility_threshold) * dir.direction.j;
  const Eigen::VectorXd y_shift = s.p_y_given_x.matrix() * x_shift;

  const double posthoc_radius =
      std::min({SimplexBound(s.px, x_shift), SimplexBound(s.py, y_shift),
                SimplexBound(s.pz, dir.direction.j)});
  const double posthoc = posthoc_radius / PerLetterRadius(1.0, budget);
  internal::RequireEpsilonInRange(eps, posthoc);
  const double r = PerLetterRadius(eps, budget);

  ProviderDesign d;
  Mechanism& m = d.mechanism;
  m.pu = ProbVector{0.5, 0.5};
  m.epsilon = eps;
  ProviderReport& rep = d.report;
  for (double sign : {1.0, -1.0}) {
    m.output_conditionals.emplace_back(s.py.values() + sign * r * y_shift);
    m.posteriors.emplace_back(s.pz.values() + sign * r * dir.direction.j);
    rep.x_conditionals.emplace_back(s.px.values() + sign * r * x_shift);
  }
  m.kernel = BayesKernel(m.pu, rep.x_conditionals, s.px);

  rep.selected_case = dir.selected_case;
  rep.sigma_max = mats.product.SigmaMax();
  rep.sigma = dir.sigma;
  rep.chosen_direction = dir.direction;
  rep.tie_break = dir.tie_break;
  rep.budget = budget;
  rep.epsilon = eps;
  rep.radius = r;
  rep.x_shift = x_shift;
  rep.y_shift = y_shift;
  rep.approx_utility_nats = 0.5 * r * r * dir.sigma * dir.sigma;
  rep.exact_utility_nats = UtilityNats(m);
  rep.leakage_mi_nats = LeakageNats(m);
  rep.posthoc_bound = posthoc;
  rep.audit = AuditMechanism(m, s.py, s.pz, r * r);
  rep.matrices = std::move(mats);

  const double x_mixture_error =
      MaxAbsDifference(Mixture(m.pu, rep.x_conditionals), s.px.values());
  Require(rep.audit.Consistent() && x_mixture_error <= 1e-10, ErrorCode::kInternal,
          "provider mechanism is not consistent with the marginals");
  Require(rep.audit.WithinBudget(), ErrorCode::kInternal,
          "provider mechanism exceeds the per-letter chi^2 budget on Z");

  rep.warnings.push_back(
      "the validity bound on epsilon is the simplex bound of the construction; no a-priori "
      "expansion bound is available for this setting");
  if (dir.tie_break) {
    rep.warnings.push_back(
        "largest singular value is repeated; the direction is a deterministic tie-break and "
        "every unit direction orthogonal to sqrt(P_Z) in the tied subspace is equally good");
  }
  return d;
}

}  // namespace chi2mech

#endif  // CHI2MECH_PROVIDER_HPP_
