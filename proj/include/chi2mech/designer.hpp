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

// Small-leakage design of strongly chi^2-private disclosure mechanisms.
//
// The agent sees useful data Y, the private data X is linked to Y through
// an invertible leakage matrix P_{X|Y}, and the released symbol U must keep
// every posterior P_{X|U=u} within chi^2 distance eps^2 of P_X. For small eps
// the utility I(U;Y) is (1/2) eps^2 sum_u P_U(u) ||W L_u||^2 with
//
//   W = diag(1/sqrt(P_Y)) P_{X|Y}^{-1} diag(sqrt(P_X)),
//
// and the optimum is a uniform binary U with L_0 = -L_1 = the principal right
// singular vector of W. W always has singular value 1 at sqrt(P_X) and every
// other singular value is at least 1, so the principal vector is orthogonal
// to sqrt(P_X) whenever the spectrum is not flat.

#ifndef CHI2MECH_DESIGNER_HPP_
#define CHI2MECH_DESIGNER_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/error.hpp"
#include "chi2mech/linalg.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/probcore.hpp"

namespace chi2mech {

// A square or rectangular design matrix with its full SVD attached.
struct DesignMatrix {
  Eigen::MatrixXd w;
  Svd svd;

  static DesignMatrix FromMatrix(Eigen::MatrixXd w) {
    DesignMatrix out;
    out.svd = ComputeSvd(w);
    out.w = std::move(w);
    return out;
  }

  Index dimension() const { return w.cols(); }
  const Eigen::VectorXd& singular_values() const { return svd.singular_values; }
  double SigmaMax() const { return svd.singular_values(0); }
  double SigmaMin() const { return svd.singular_values(svd.singular_values.size() - 1); }
  Eigen::VectorXd RightVector(Index i) const { return svd.right.col(i); }
  Eigen::VectorXd LeftVector(Index i) const { return svd.left.col(i); }
};

// Two singular values closer than this (relative) are treated as tied.
inline constexpr double kDegeneracyTolerance = 1e-9;

struct DesignOptions {
  double invertibility_threshold = kDefaultInvertibilityThreshold;
};

// P_X = P_{X|Y} P_Y, required strictly positive.
inline ProbVector DerivePx(const ChannelMatrix& leakage, const ProbVector& py) {
  Require(leakage.inputs() == py.size(), ErrorCode::kInvalidArgument,
          "P_Y has " + std::to_string(py.size()) + " entries but the leakage matrix has " +
              std::to_string(leakage.inputs()) + " columns");
  const Eigen::VectorXd px = leakage.matrix() * py.values();
  for (Index i = 0; i < px.size(); ++i) {
    Require(px(i) > 0.0, ErrorCode::kInvalidArgument,
            "derived P_X has a non-positive entry at index " + std::to_string(i));
  }
  return ProbVector(px, Support::kStrictlyPositive);
}

inline DesignMatrix BuildW(const ChannelMatrix& leakage, const ProbVector& py,
                           const DesignOptions& options = {}) {
  Require(py.StrictlyPositive(), ErrorCode::kInvalidArgument,
          "P_Y must be strictly positive");
  const ProbVector px = DerivePx(leakage, py);
  const Eigen::MatrixXd inverse = leakage.Inverse(options.invertibility_threshold);
  Eigen::MatrixXd w = py.Sqrt().cwiseInverse().asDiagonal() * inverse *
                      px.Sqrt().asDiagonal();
  return DesignMatrix::FromMatrix(std::move(w));
}

struct PrincipalDirection {
  PerturbationDirection direction;
  double sigma = 0.0;       // ||W L*||
  bool degenerate = false;  // top singular value repeated; L* picked by tie-break
};

// The maximizer of ||W L|| over unit L orthogonal to sqrt(P_X).
//
// With a simple top singular value this is the top right singular vector,
// and its orthogonality to sqrt(P_X) is checked. When the top value is
// repeated the maximizer is computed on the complement of sqrt(P_X), which
// returns a deterministic member of the tied subspace.
inline PrincipalDirection FindPrincipalDirection(const DesignMatrix& w, const ProbVector& px) {
  Require(w.dimension() == px.size(), ErrorCode::kInvalidArgument,
          "principal direction: dimension mismatch");
  Require(px.size() >= 2, ErrorCode::kInvalidArgument,
          "principal direction: need at least two symbols");
  const Eigen::VectorXd anchor = px.Sqrt();
  const Eigen::VectorXd& s = w.singular_values();
  PrincipalDirection out;
  out.degenerate = s.size() > 1 && s(0) - s(1) <= kDegeneracyTolerance * s(0);
  Eigen::VectorXd l;
  if (!out.degenerate) {
    l = w.RightVector(0);
    out.sigma = s(0);
    Require(std::abs(l.dot(anchor)) <= 1e-8, ErrorCode::kNumerical,
            "principal direction is not orthogonal to sqrt(P_X); W was not built "
            "from a valid leakage pair");
  } else {
    const ConstrainedMaximizer best = MaximizeOrthogonalTo(w.w, anchor);
    l = best.direction;
    out.sigma = best.gain;
  }
  // Remove the rounding-level component along sqrt(P_X) so the induced
  // perturbation sums to zero to machine precision.
  l -= l.dot(anchor) * anchor;
  l.normalize();
  out.direction = PerturbationDirection::Make(l, px);
  return out;
}

struct EpsilonBounds {
  // Sufficient for the leakage expansion: min P_X / sqrt(max P_X).
  double leakage_expansion = 0.0;
  // Sufficient for the utility expansion:
  // sigma_min(P_{X|Y}) min P_Y / sqrt(max P_X).
  double utility_expansion = 0.0;
  // Mechanism-specific: largest eps keeping P_Y +- eps P_{X|Y}^{-1} J in the
  // simplex, min_y P_Y(y) / |(P_{X|Y}^{-1} J)(y)|.
  double posthoc = 0.0;
};

inline EpsilonBounds ComputeEpsilonBounds(const ChannelMatrix& leakage, const ProbVector& py,
                                          const ProbVector& px,
                                          const PerturbationDirection& direction) {
  EpsilonBounds b;
  b.leakage_expansion = px.Min() / std::sqrt(px.Max());
  b.utility_expansion = leakage.SmallestSingularValue() * py.Min() / std::sqrt(px.Max());
  const Eigen::VectorXd delta = leakage.Inverse() * direction.j;
  b.posthoc = SimplexBound(py, delta);
  return b;
}

struct DesignReport {
  Eigen::VectorXd singular_values;
  double sigma_max = 0.0;
  PerturbationDirection l_star;
  bool degenerate = false;
  double epsilon = 0.0;
  // P_{X|Y}^{-1} diag(sqrt(P_X)) L*, the per-unit-eps shift of P_{Y|U=0}.
  Eigen::VectorXd output_shift;
  double approx_utility_nats = 0.0;  // eps^2 sigma_max^2 / 2
  double exact_utility_nats = 0.0;   // I(U;Y) of the constructed mechanism
  double leakage_mi_nats = 0.0;      // I(U;X) of the constructed mechanism
  std::vector<double> chi2_per_letter;
  double chi2_information = 0.0;
  EpsilonBounds bounds;
  double lambda_min = 0.0;  // 1 / sigma_max^2
  MechanismAudit audit;
  std::vector<std::string> warnings;

  // Utility per eps^2 in the small-leakage limit.
  double UtilityCoefficientNats() const { return 0.5 * sigma_max * sigma_max; }
  double UtilityCoefficientBits() const { return UtilityCoefficientNats() * kNatsToBits; }
};

struct Design {
  Mechanism mechanism;
  DesignReport report;
};

namespace internal {

inline void RequireEpsilonInRange(double eps, double posthoc) {
  Require(std::isfinite(eps), ErrorCode::kInvalidArgument, "epsilon must be finite");
  Require(eps > 0.0, ErrorCode::kInfeasibleEpsilon, "epsilon must be positive");
  Require(eps < posthoc, ErrorCode::kInfeasibleEpsilon,
          "epsilon " + std::to_string(eps) + " is not below the post-hoc bound " +
              std::to_string(posthoc) + "; the mechanism would leave the simplex");
}

// Binary mechanism with P_{Y|U=u} = P_Y + eps c_u delta_y and
// P_{S|U=u} = P_S + eps c_u delta_s.
inline Mechanism BinaryPerturbationMechanism(const ProbVector& pu, const ProbVector& py,
                                             const Eigen::VectorXd& delta_y,
                                             const ProbVector& prior,
                                             const Eigen::VectorXd& delta_s,
                                             const ProbVector& observed,
                                             const Eigen::Vector2d& coeffs,
                                             double eps, bool observed_is_output) {
  Mechanism m;
  m.pu = pu;
  m.epsilon = eps;
  for (Index u = 0; u < 2; ++u) {
    m.output_conditionals.emplace_back(py.values() + eps * coeffs(u) * delta_y);
    m.posteriors.emplace_back(prior.values() + eps * coeffs(u) * delta_s);
  }
  m.kernel = BayesKernel(pu, observed_is_output ? m.output_conditionals : m.posteriors,
                         observed);
  return m;
}

}  // namespace internal

inline Design DesignMechanism(const ChannelMatrix& leakage, const ProbVector& py, double eps,
                              const DesignOptions& options = {}) {
  const ProbVector px = DerivePx(leakage, py);
  const DesignMatrix w = BuildW(leakage, py, options);
  const PrincipalDirection principal = FindPrincipalDirection(w, px);
  const EpsilonBounds bounds = ComputeEpsilonBounds(leakage, py, px, principal.direction);
  internal::RequireEpsilonInRange(eps, bounds.posthoc);

  const Eigen::VectorXd shift = leakage.Inverse(options.invertibility_threshold) *
                                principal.direction.j;
  Design d;
  d.mechanism = internal::BinaryPerturbationMechanism(
      ProbVector{0.5, 0.5}, py, shift, px, principal.direction.j, py,
      Eigen::Vector2d(1.0, -1.0), eps, /*observed_is_output=*/true);

  DesignReport& r = d.report;
  r.singular_values = w.singular_values();
  r.sigma_max = principal.sigma;
  r.l_star = principal.direction;
  r.degenerate = principal.degenerate;
  r.epsilon = eps;
  r.output_shift = shift;
  r.approx_utility_nats = 0.5 * eps * eps * r.sigma_max * r.sigma_max;
  r.exact_utility_nats = UtilityNats(d.mechanism);
  r.leakage_mi_nats = LeakageNats(d.mechanism);
  r.bounds = bounds;
  r.lambda_min = 1.0 / (r.sigma_max * r.sigma_max);
  r.audit = AuditMechanism(d.mechanism, py, px, eps * eps);
  r.chi2_per_letter = r.audit.chi2_per_letter;
  r.chi2_information = r.audit.chi2_information;

  Require(r.audit.Consistent(), ErrorCode::kInternal,
          "designed mechanism is not consistent with the marginals");
  Require(r.audit.WithinBudget(), ErrorCode::kInternal,
          "designed mechanism exceeds the per-letter chi^2 budget");

  if (principal.degenerate) {
    r.warnings.push_back(
        "largest singular value is repeated; L* is a deterministic tie-break and any "
        "unit vector in the tied subspace orthogonal to sqrt(P_X) is equally good");
  }
  if (eps >= bounds.leakage_expansion) {
    r.warnings.push_back("epsilon exceeds the a-priori bound for the leakage expansion");
  }
  if (eps >= bounds.utility_expansion) {
    r.warnings.push_back("epsilon exceeds the a-priori bound for the utility expansion");
  }
  return d;
}

struct TightnessResult {
  Eigen::MatrixXd q;  // diag(1/sqrt(P_X)) P_{X|Y} diag(sqrt(P_Y)) = W^{-1}
  double lambda_min = 0.0;  // sigma_min(q)^2
};

// Builds the normalized joint matrix and checks that its smallest squared
// singular value is 1 / sigma_max(W)^2, so the chi^2-information upper bound
// eps^2 / lambda_min is met by the designed mechanism.
inline TightnessResult CheckUpperBoundTightness(const ChannelMatrix& leakage,
                                                const ProbVector& py,
                                                const DesignOptions& options = {}) {
  const ProbVector px = DerivePx(leakage, py);
  const DesignMatrix w = BuildW(leakage, py, options);
  TightnessResult out;
  out.q = px.Sqrt().cwiseInverse().asDiagonal() * leakage.matrix() * py.Sqrt().asDiagonal();
  const Svd q_svd = ComputeSvd(out.q);
  const double smallest = q_svd.singular_values(q_svd.singular_values.size() - 1);
  out.lambda_min = smallest * smallest;
  const double expected = 1.0 / (w.SigmaMax() * w.SigmaMax());
  Require(std::abs(out.lambda_min - expected) <= 1e-9, ErrorCode::kNumerical,
          "sigma_min(Q)^2 does not match 1 / sigma_max(W)^2");
  return out;
}

}  // namespace chi2mech

#endif  // CHI2MECH_DESIGNER_HPP_
