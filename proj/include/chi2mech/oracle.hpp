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

// Search-based solvers for the privacy problem with a binary U. They do not
// use W or any small-eps expansion and serve as references for the
// closed-form designs.

#ifndef CHI2MECH_ORACLE_HPP_
#define CHI2MECH_ORACLE_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/designer.hpp"
#include "chi2mech/error.hpp"
#include "chi2mech/mechanism.hpp"
#include "chi2mech/probcore.hpp"

namespace chi2mech {

// A symbol u with P_U(u) at or below this defines no posterior and is skipped.
inline constexpr double kVacuousMass = 1e-9;

struct GridSearchResult {
  double best_utility_nats = 0.0;
  ChannelMatrix best_kernel;  // P_{U|Y}, rows u, columns y
  int grid_resolution = 0;    // 0 for randomized search
  std::int64_t feasible_count = 0;
  bool found = false;
  // Exact binary search only: the best value on the plain grid before
  // boundary refinement, and the largest utility change from the best grid
  // cell to one of its neighbours.
  double grid_only_utility_nats = 0.0;
  double grid_slack_nats = 0.0;
  // Largest chi^2(P_{X|U=u} || P_X) of best_kernel, recomputed independently.
  double audit_chi2_max = 0.0;
};

struct ExactSearchOptions {
  int resolution = 2000;
  int refine_levels = 3;
  unsigned threads = 0;  // 0 = hardware concurrency
};

namespace internal {

// Binary-U problem data with the kernel parametrized by
// A = P(U=0|Y=0), B = P(U=0|Y=1), for K = 2.
struct BinaryProblem {
  double py0, py1;
  double m00, m01;  // P(X=0|Y=0), P(X=0|Y=1)
  double px0, px1;
  double budget;  // eps^2 with a small relative slack

  // Per-letter feasibility of the kernel (A, B).
  bool Feasible(double a, double b) const {
    const double w0 = a * py0, w1 = b * py1;
    const double mass0 = w0 + w1;
    const double mass1 = 1.0 - mass0;
    if (mass0 > kVacuousMass && !PosteriorOk((m00 * w0 + m01 * w1) / mass0)) return false;
    if (mass1 > kVacuousMass) {
      const double v0 = (1.0 - a) * py0, v1 = (1.0 - b) * py1;
      if (!PosteriorOk((m00 * v0 + m01 * v1) / (v0 + v1))) return false;
    }
    return true;
  }

  bool PosteriorOk(double x0) const {
    const double d = x0 - px0;
    return d * d / px0 + d * d / px1 <= budget;
  }

  // I(U;Y) of the kernel (A, B).
  double Utility(double a, double b) const {
    const double mass0 = a * py0 + b * py1;
    const double mass1 = 1.0 - mass0;
    double sum = 0.0;
    const auto term = [&sum](double p, double k, double m) {
      if (p * k > 0.0 && m > 0.0) sum += p * k * std::log(k / m);
    };
    term(py0, a, mass0);
    term(py1, b, mass0);
    term(py0, 1.0 - a, mass1);
    term(py1, 1.0 - b, mass1);
    return sum < 0.0 ? 0.0 : sum;
  }

  // For fixed A in (0, 1), the set of feasible B is an interval, because
  // each constraint confines a linear function of the kernel to a convex
  // cone. Returns false if it is empty.
  bool FeasibleInterval(double a, double* lo, double* hi) const {
    // The X-posterior is m01 + (m00 - m01) q with q the share of y = 0 in the
    // mass of u, so the budget confines q to [qlo, qhi].
    const double half_width = std::sqrt(budget * px0 * px1);
    const double slope = m00 - m01;
    double qlo = (px0 - half_width - m01) / slope;
    double qhi = (px0 + half_width - m01) / slope;
    if (qlo > qhi) std::swap(qlo, qhi);
    double b_lo = 0.0, b_hi = 1.0;
    // q = s / (s + t py1) with s = A py0 (u = 0) and t = B; decreasing in t.
    const auto confine = [&](double s, double* t_lo, double* t_hi) {
      if (qhi < 1.0) *t_lo = std::max(*t_lo, s * (1.0 - qhi) / (qhi * py1));
      if (qlo > 0.0) *t_hi = std::min(*t_hi, s * (1.0 - qlo) / (qlo * py1));
    };
    confine(a * py0, &b_lo, &b_hi);
    double c_lo = 0.0, c_hi = 1.0;  // on 1 - B
    confine((1.0 - a) * py0, &c_lo, &c_hi);
    b_lo = std::max(b_lo, 1.0 - c_hi);
    b_hi = std::min(b_hi, 1.0 - c_lo);
    *lo = b_lo;
    *hi = b_hi;
    return b_lo <= b_hi;
  }

  // Best feasible B for the given A, or a negative utility if none. The
  // utility is convex along the line, so the optimum is at an endpoint.
  std::pair<double, double> BestOnLine(double a) const {
    double lo, hi;
    std::pair<double, double> best{-1.0, 0.0};
    if (!FeasibleInterval(a, &lo, &hi)) return best;
    const double mid = 0.5 * (lo + hi);
    for (double b : {lo, hi}) {
      // Pull the endpoint inward until rounding no longer breaks feasibility.
      double step = 1e-15;
      int tries = 0;
      while (!Feasible(a, b) && tries < 40) {
        b += (mid - b) * std::min(1.0, step);
        step *= 4.0;
        ++tries;
      }
      if (!Feasible(a, b)) continue;
      const double u = Utility(a, b);
      if (u > best.first) best = {u, b};
    }
    return best;
  }
};

inline BinaryProblem MakeBinaryProblem(const ChannelMatrix& leakage, const ProbVector& py,
                                       double eps) {
  Require(leakage.outputs() == 2 && leakage.inputs() == 2, ErrorCode::kInvalidArgument,
          "exact binary search needs a 2x2 leakage matrix; use randomized search for K > 2");
  Require(std::isfinite(eps) && eps >= 0.0, ErrorCode::kInvalidArgument,
          "epsilon must be finite and non-negative");
  leakage.RequireInvertible();
  const ProbVector px = DerivePx(leakage, py);
  BinaryProblem p;
  p.py0 = py[0];
  p.py1 = py[1];
  p.m00 = leakage(0, 0);
  p.m01 = leakage(0, 1);
  p.px0 = px[0];
  p.px1 = px[1];
  p.budget = eps * eps * (1.0 + 1e-9) + 1e-15;
  return p;
}

inline ChannelMatrix BinaryKernel(double a, double b) {
  Eigen::Matrix2d k;
  k << a, b, 1.0 - a, 1.0 - b;
  return ChannelMatrix(k);
}

// Posteriors P_{X|U=u} of a binary-U kernel, for u with mass above the
// vacuous threshold.
inline std::vector<ProbVector> KernelPosteriors(const ChannelMatrix& leakage,
                                                const ProbVector& py,
                                                const Eigen::MatrixXd& kernel) {
  std::vector<ProbVector> out;
  for (Index u = 0; u < kernel.rows(); ++u) {
    const Eigen::VectorXd joint = kernel.row(u).transpose().cwiseProduct(py.values());
    const double mass = joint.sum();
    if (mass <= kVacuousMass) continue;
    Eigen::VectorXd post = leakage.matrix() * joint / mass;
    post /= post.sum();
    out.emplace_back(post);
  }
  return out;
}

inline double KernelChi2Max(const ChannelMatrix& leakage, const ProbVector& py,
                            const Eigen::MatrixXd& kernel) {
  const ProbVector px = DerivePx(leakage, py);
  double worst = 0.0;
  for (const ProbVector& post : KernelPosteriors(leakage, py, kernel)) {
    worst = std::max(worst, Chi2Divergence(post, px));
  }
  return worst;
}

inline double KernelUtility(const ProbVector& py, const Eigen::MatrixXd& kernel) {
  Eigen::MatrixXd joint = kernel.transpose();  // rows y, columns u
  for (Index y = 0; y < joint.rows(); ++y) joint.row(y) *= py[y];
  joint /= joint.sum();
  return MutualInformation(JointDistribution(joint));
}

struct Candidate {
  double utility = -1.0;
  std::int64_t i = 0;
  std::int64_t j = 0;

  // Larger utility wins; ties go to the lexicographically smallest index.
  bool Beats(const Candidate& other) const {
    if (utility != other.utility) return utility > other.utility;
    return std::make_pair(i, j) < std::make_pair(other.i, other.j);
  }
};

}  // namespace internal

// Exhaustive search over binary-U kernels for K = 2.
//
// The grid covers (P(U=0|Y=0), P(U=0|Y=1)) in [0, 1]^2 with step
// 1/resolution. Because the feasible set is convex and I(U;Y) is convex in
// the kernel, the optimum lies on its boundary; for every grid value of the
// first coordinate the boundary points of the feasible segment are then
// located in closed form and evaluated, and the best first coordinate is
// zoomed refine_levels times. The result does not depend on thread count.
inline GridSearchResult ExactBinarySearch(const ChannelMatrix& leakage, const ProbVector& py,
                                          double eps, const ExactSearchOptions& options = {}) {
  Require(options.resolution >= 100, ErrorCode::kInvalidArgument,
          "grid resolution must be at least 100");
  Require(options.refine_levels >= 0, ErrorCode::kInvalidArgument,
          "refine levels must be non-negative");
  const internal::BinaryProblem prob = internal::MakeBinaryProblem(leakage, py, eps);
  const std::int64_t n = options.resolution;
  const double step = 1.0 / static_cast<double>(n);

  unsigned threads = options.threads == 0 ? std::thread::hardware_concurrency() : options.threads;
  threads = std::clamp<unsigned>(threads, 1, 64);

  struct Partial {
    internal::Candidate best;
    std::int64_t feasible = 0;
  };
  std::vector<Partial> partials(threads);
  const auto scan = [&](unsigned t) {
    Partial& part = partials[t];
    for (std::int64_t i = t; i <= n; i += threads) {
      const double a = static_cast<double>(i) * step;
      for (std::int64_t j = 0; j <= n; ++j) {
        const double b = static_cast<double>(j) * step;
        if (!prob.Feasible(a, b)) continue;
        ++part.feasible;
        const internal::Candidate c{prob.Utility(a, b), i, j};
        if (c.Beats(part.best)) part.best = c;
      }
    }
  };
  if (threads == 1) {
    scan(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(scan, t);
    for (std::thread& th : pool) th.join();
  }

  GridSearchResult result;
  result.grid_resolution = options.resolution;
  internal::Candidate grid_best;
  for (const Partial& part : partials) {
    result.feasible_count += part.feasible;
    if (part.best.Beats(grid_best)) grid_best = part.best;
  }
  // A = B is always feasible (U independent of Y), so the grid is never empty.
  Require(result.feasible_count > 0, ErrorCode::kInternal, "grid search found no feasible kernel");
  result.found = true;
  result.grid_only_utility_nats = grid_best.utility;

  const double ga = static_cast<double>(grid_best.i) * step;
  const double gb = static_cast<double>(grid_best.j) * step;
  for (int di = -1; di <= 1; ++di) {
    for (int dj = -1; dj <= 1; ++dj) {
      const std::int64_t i = grid_best.i + di, j = grid_best.j + dj;
      if ((di == 0 && dj == 0) || i < 0 || j < 0 || i > n || j > n) continue;
      const double u = prob.Utility(static_cast<double>(i) * step, static_cast<double>(j) * step);
      result.grid_slack_nats = std::max(result.grid_slack_nats, std::abs(u - grid_best.utility));
    }
  }

  // Boundary refinement, serial and in index order.
  double best_u = grid_best.utility, best_a = ga, best_b = gb;
  const auto consider = [&](double a) {
    if (!(a > 0.0 && a < 1.0)) return;
    const auto [u, b] = prob.BestOnLine(a);
    if (u > best_u) {
      best_u = u;
      best_a = a;
      best_b = b;
    }
  };
  for (std::int64_t i = 1; i < n; ++i) consider(static_cast<double>(i) * step);
  double half = step;
  for (int level = 0; level < options.refine_levels; ++level) {
    const double center = best_a;
    for (std::int64_t i = 0; i <= n; ++i) {
      consider(center - half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n));
    }
    half = 2.0 * half / static_cast<double>(n);
  }

  result.best_utility_nats = best_u;
  result.best_kernel = internal::BinaryKernel(best_a, best_b);
  result.audit_chi2_max = internal::KernelChi2Max(leakage, py, result.best_kernel.matrix());
  Require(result.audit_chi2_max <= prob.budget * (1.0 + 1e-9), ErrorCode::kInternal,
          "grid search returned an infeasible kernel");
  return result;
}

struct RandomSearchOptions {
  std::int64_t samples = 20000;
  std::uint64_t seed = 1;
};

// Randomized lower-bound probe for binary U and any K >= 2. The candidate
// set always contains the closed-form design's kernel when eps admits it
// (or the design at 0.999 of its validity bound otherwise), then uniform
// random kernels, perturbations of the incumbent and rescaled designs.
// Deterministic for a fixed seed. found is false when no sample is feasible.
inline GridSearchResult RandomizedSearch(const ChannelMatrix& leakage, const ProbVector& py,
                                         double eps, const RandomSearchOptions& options = {}) {
  Require(leakage.IsSquare() && leakage.inputs() >= 2, ErrorCode::kInvalidArgument,
          "randomized search needs a square leakage matrix with K >= 2");
  Require(std::isfinite(eps) && eps >= 0.0, ErrorCode::kInvalidArgument,
          "epsilon must be finite and non-negative");
  Require(options.samples >= 1, ErrorCode::kInvalidArgument, "samples must be positive");
  leakage.RequireInvertible();
  const ProbVector px = DerivePx(leakage, py);
  const Index k = py.size();
  const double budget = eps * eps * (1.0 + 1e-9) + 1e-15;

  GridSearchResult result;
  Eigen::RowVectorXd incumbent;
  const auto evaluate = [&](Eigen::RowVectorXd row) {
    row = row.cwiseMax(0.0).cwiseMin(1.0);
    Eigen::MatrixXd kernel(2, k);
    kernel.row(0) = row;
    kernel.row(1) = Eigen::RowVectorXd::Ones(k) - row;
    if (internal::KernelChi2Max(leakage, py, kernel) > budget) return;
    ++result.feasible_count;
    const double u = internal::KernelUtility(py, kernel);
    if (!result.found || u > result.best_utility_nats) {
      result.found = true;
      result.best_utility_nats = u;
      result.best_kernel = ChannelMatrix(kernel);
      incumbent = row;
    }
  };

  // Row 0 of the closed-form kernel at a given eps, if it can be built.
  std::vector<Eigen::RowVectorXd> designs;
  double posthoc = 0.0;
  {
    const DesignMatrix w = BuildW(leakage, py);
    const PrincipalDirection principal = FindPrincipalDirection(w, px);
    posthoc = ComputeEpsilonBounds(leakage, py, px, principal.direction).posthoc;
  }
  const auto design_row = [&](double e) -> Eigen::RowVectorXd {
    return DesignMechanism(leakage, py, e).mechanism.kernel.matrix().row(0);
  };
  if (eps > 0.0) {
    const Eigen::RowVectorXd row = design_row(std::min(eps, 0.999 * posthoc));
    designs.push_back(row);
    evaluate(row);
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::int64_t remaining = options.samples - static_cast<std::int64_t>(designs.size());
  for (std::int64_t s = 0; s < remaining; ++s) {
    Eigen::RowVectorXd row(k);
    const int mode = static_cast<int>(s % 3);
    if (mode == 0 || !result.found) {
      for (Index y = 0; y < k; ++y) row(y) = unit(rng);
    } else if (mode == 1) {
      const double scale = std::pow(10.0, -1.0 - 4.0 * unit(rng));
      row = incumbent;
      for (Index y = 0; y < k; ++y) row(y) += scale * normal(rng);
    } else {
      // Shrink the design toward the constant kernel 1/2 and jitter it.
      const Eigen::RowVectorXd base =
          designs.empty() ? Eigen::RowVectorXd::Constant(k, 0.5) : designs.front();
      const double t = unit(rng);
      row = Eigen::RowVectorXd::Constant(k, 0.5) + t * (base.array() - 0.5).matrix();
      const double scale = std::pow(10.0, -2.0 - 4.0 * unit(rng));
      for (Index y = 0; y < k; ++y) row(y) += scale * normal(rng);
    }
    evaluate(row);
  }
  if (result.found) {
    result.audit_chi2_max = internal::KernelChi2Max(leakage, py, result.best_kernel.matrix());
  }
  return result;
}

struct TaylorResidual {
  double epsilon = 0.0;
  double exact_nats = 0.0;
  double approx_nats = 0.0;
  double residual_ratio = 0.0;  // |exact - approx| / eps^2
};

// Exact against approximate utility of the closed-form design over a list of
// epsilons. Rows come back in input order.
inline std::vector<TaylorResidual> TaylorResidualScan(const ChannelMatrix& leakage,
                                                      const ProbVector& py,
                                                      const std::vector<double>& eps_list) {
  std::vector<TaylorResidual> rows;
  rows.reserve(eps_list.size());
  for (double eps : eps_list) {
    const Design d = DesignMechanism(leakage, py, eps);
    TaylorResidual r;
    r.epsilon = eps;
    r.exact_nats = d.report.exact_utility_nats;
    r.approx_nats = d.report.approx_utility_nats;
    r.residual_ratio = std::abs(r.exact_nats - r.approx_nats) / (eps * eps);
    rows.push_back(r);
  }
  return rows;
}

// True if the residual ratio strictly decreases whenever epsilon decreases.
inline bool ResidualsShrink(std::vector<TaylorResidual> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const TaylorResidual& x, const TaylorResidual& y) { return x.epsilon < y.epsilon; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i - 1].residual_ratio < rows[i].residual_ratio)) return false;
  }
  return true;
}

}  // namespace chi2mech

#endif  // CHI2MECH_ORACLE_HPP_
