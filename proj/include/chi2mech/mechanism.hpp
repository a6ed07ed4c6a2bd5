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

#ifndef CHI2MECH_MECHANISM_HPP_
#define CHI2MECH_MECHANISM_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/error.hpp"
#include "chi2mech/linalg.hpp"
#include "chi2mech/probcore.hpp"

namespace chi2mech {

// How the per-letter budget relates to epsilon. kEpsSquared bounds every
// chi^2(P_{private|U=u} || P_private) by eps^2; kHalfEpsSquared by eps^2 / 2,
// which is the same as running kEpsSquared at eps / sqrt(2).
enum class BudgetConvention {
  kEpsSquared,
  kHalfEpsSquared,
};

// Radius r of the perturbation ball, so the per-letter budget is r^2.
inline double PerLetterRadius(double eps, BudgetConvention budget) {
  return budget == BudgetConvention::kEpsSquared ? eps : eps / std::sqrt(2.0);
}

inline std::string ToString(BudgetConvention budget) {
  return budget == BudgetConvention::kEpsSquared ? "eps2" : "half-eps2";
}

// A direction L in the unit ball orthogonal to sqrt(P), together with the
// perturbation J = diag(sqrt(P)) L it induces on the distribution P.
struct PerturbationDirection {
  Eigen::VectorXd l;
  Eigen::VectorXd j;

  // Builds J from L and checks ||L|| <= 1, L orthogonal to sqrt(P) and
  // sum(J) = 0.
  static PerturbationDirection Make(const Eigen::VectorXd& l, const ProbVector& reference) {
    Require(l.size() == reference.size(), ErrorCode::kInvalidArgument,
            "perturbation direction: dimension mismatch");
    PerturbationDirection out{l, reference.Sqrt().cwiseProduct(l)};
    Require(l.norm() <= 1.0 + 1e-12, ErrorCode::kInternal,
            "perturbation direction: norm exceeds 1");
    Require(std::abs(reference.Sqrt().dot(l)) <= 1e-10, ErrorCode::kNumerical,
            "perturbation direction: not orthogonal to sqrt(P)");
    Require(std::abs(out.j.sum()) <= 1e-10, ErrorCode::kNumerical,
            "perturbation direction: perturbation does not sum to zero");
    return out;
  }
};

// A disclosure mechanism with a finite output U.
//
// output_conditionals are P_{Y|U=u} for the useful variable and posteriors
// are P_{S|U=u} for the protected variable S. kernel is the channel
// P_{U|observed} that the agent actually runs (rows u, columns the observed
// symbol).
struct Mechanism {
  ProbVector pu;
  std::vector<ProbVector> output_conditionals;
  std::vector<ProbVector> posteriors;
  ChannelMatrix kernel;
  double epsilon = 0.0;
};

// P(u | o) = P_U(u) P(o | u) / P(o).
inline ChannelMatrix BayesKernel(const ProbVector& pu,
                                 const std::vector<ProbVector>& conditionals,
                                 const ProbVector& marginal) {
  Require(marginal.StrictlyPositive(), ErrorCode::kInvalidArgument,
          "kernel: observed marginal must be strictly positive");
  Eigen::MatrixXd k(pu.size(), marginal.size());
  for (Index u = 0; u < pu.size(); ++u) {
    k.row(u) = (pu[u] * conditionals[u].values().array() /
                marginal.values().array()).matrix().transpose();
  }
  // Columns agree with 1 up to rounding in the conditionals; renormalize.
  for (Index c = 0; c < k.cols(); ++c) k.col(c) /= k.col(c).sum();
  return ChannelMatrix(std::move(k));
}

inline double MaxAbsDifference(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline Eigen::VectorXd Mixture(const ProbVector& pu, const std::vector<ProbVector>& parts) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(parts.front().size());
  for (Index u = 0; u < pu.size(); ++u) sum += pu[u] * parts[u].values();
  return sum;
}

// Absolute slack of budget checks on computed chi^2 values.
inline constexpr double kChi2AbsoluteSlack = 1e-12;

struct MechanismAudit {
  double output_mixture_error = 0.0;     // max |sum_u P_U(u) P_{Y|U=u} - P_Y|
  double posterior_mixture_error = 0.0;  // max |sum_u P_U(u) P_{S|U=u} - P_S|
  std::vector<double> chi2_per_letter;   // chi^2(P_{S|U=u} || P_S)
  double chi2_max = 0.0;
  double chi2_information = 0.0;
  double budget = 0.0;                   // per-letter bound the audit used

  bool Consistent(double tolerance = 1e-10) const {
    return output_mixture_error <= tolerance && posterior_mixture_error <= tolerance;
  }
  // The absolute slack covers cancellation in P_{S|U=u} - P_S at tiny eps.
  bool WithinBudget(double relative = 1e-9, double absolute = kChi2AbsoluteSlack) const {
    return chi2_max <= budget * (1.0 + relative) + absolute;
  }
};

inline MechanismAudit AuditMechanism(const Mechanism& m, const ProbVector& py,
                                     const ProbVector& prior, double budget) {
  MechanismAudit audit;
  audit.budget = budget;
  audit.output_mixture_error = MaxAbsDifference(Mixture(m.pu, m.output_conditionals), py.values());
  audit.posterior_mixture_error = MaxAbsDifference(Mixture(m.pu, m.posteriors), prior.values());
  for (const ProbVector& post : m.posteriors) {
    audit.chi2_per_letter.push_back(Chi2Divergence(post, prior));
  }
  audit.chi2_max = *std::max_element(audit.chi2_per_letter.begin(), audit.chi2_per_letter.end());
  audit.chi2_information = Chi2Information(m.posteriors, m.pu, prior);
  return audit;
}

// I(U;Y) of the mechanism, assembled from its joint table.
inline double UtilityNats(const Mechanism& m) {
  return MutualInformation(JointDistribution::FromConditionals(m.pu, m.output_conditionals));
}

// I(U;S) for the protected variable.
inline double LeakageNats(const Mechanism& m) {
  return MutualInformation(JointDistribution::FromConditionals(m.pu, m.posteriors));
}

// Largest eps for which base + eps * coeff_u * delta stays in the simplex for
// every coefficient, i.e. min_i base_i / (max_u |coeff_u| * |delta_i|).
inline double SimplexBound(const ProbVector& base, const Eigen::VectorXd& delta,
                           double max_abs_coeff = 1.0) {
  double bound = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < base.size(); ++i) {
    const double step = std::abs(delta(i)) * max_abs_coeff;
    if (step > 0.0) bound = std::min(bound, base[i] / step);
  }
  return bound;
}

}  // namespace chi2mech

#endif  // CHI2MECH_MECHANISM_HPP_
