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

// Finite probability vectors, column-stochastic channels, joint tables and
// the divergence / information measures computed on them. All logarithms
// are natural (nats); convert with kNatsToBits.

#ifndef CHI2MECH_PROBCORE_HPP_
#define CHI2MECH_PROBCORE_HPP_

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chi2mech/error.hpp"

namespace chi2mech {

using Index = Eigen::Index;

// Sums of a distribution must be within this of one.
inline constexpr double kSumTolerance = 1e-12;
// Entries in [-kClampTolerance, 0) are rounding noise and are clamped to 0.
inline constexpr double kClampTolerance = 1e-14;
// A leakage matrix is invertible when its smallest singular value exceeds this.
inline constexpr double kDefaultInvertibilityThreshold = 1e-9;

inline constexpr double kNatsToBits = 1.0 / std::numbers::ln2;

enum class Support {
  kAllowZeros,
  kStrictlyPositive,
};

namespace internal {

inline std::string Describe(Index i) { return "[" + std::to_string(i) + "]"; }

// Clamps rounding noise and checks non-negativity and normalization.
inline Eigen::VectorXd ValidatedDistribution(Eigen::VectorXd values,
                                             Support support,
                                             const std::string& what) {
  Require(values.size() > 0, ErrorCode::kInvalidArgument,
          what + ": empty distribution");
  for (Index i = 0; i < values.size(); ++i) {
    const double v = values(i);
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            what + Describe(i) + ": non-finite entry");
    Require(v >= -kClampTolerance, ErrorCode::kInvalidArgument,
            what + Describe(i) + ": negative entry " + std::to_string(v));
    if (v < 0.0) values(i) = 0.0;
    if (support == Support::kStrictlyPositive) {
      Require(values(i) > 0.0, ErrorCode::kInvalidArgument,
              what + Describe(i) + ": entry must be strictly positive");
    }
  }
  const double sum = values.sum();
  Require(std::abs(sum - 1.0) <= kSumTolerance, ErrorCode::kInvalidArgument,
          what + ": entries sum to " + std::to_string(sum) + ", expected 1");
  return values;
}

}  // namespace internal

// A validated finite probability distribution. Immutable once constructed.
class ProbVector {
 public:
  ProbVector() = default;

  explicit ProbVector(Eigen::VectorXd values,
                      Support support = Support::kAllowZeros,
                      std::vector<std::string> labels = {})
      : values_(internal::ValidatedDistribution(std::move(values), support,
                                                "distribution")),
        labels_(std::move(labels)) {
    Require(labels_.empty() ||
                static_cast<Index>(labels_.size()) == values_.size(),
            ErrorCode::kInvalidArgument,
            "distribution: label count does not match dimension");
  }

  ProbVector(std::initializer_list<double> values)
      : ProbVector(Eigen::Map<const Eigen::VectorXd>(
            values.begin(), static_cast<Index>(values.size()))) {}

  static ProbVector FromStd(const std::vector<double>& values,
                            Support support = Support::kAllowZeros) {
    return ProbVector(Eigen::Map<const Eigen::VectorXd>(
                          values.data(), static_cast<Index>(values.size())),
                      support);
  }

  const Eigen::VectorXd& values() const { return values_; }
  Index size() const { return values_.size(); }
  double operator[](Index i) const { return values_(i); }
  const std::vector<std::string>& labels() const { return labels_; }

  bool StrictlyPositive() const { return values_.size() > 0 && values_.minCoeff() > 0.0; }
  double Min() const { return values_.minCoeff(); }
  double Max() const { return values_.maxCoeff(); }

  // Entrywise square root, the vector sqrt(P) of the geometric picture.
  Eigen::VectorXd Sqrt() const { return values_.cwiseSqrt(); }

  std::vector<double> ToStd() const {
    return {values_.data(), values_.data() + values_.size()};
  }

 private:
  Eigen::VectorXd values_;
  std::vector<std::string> labels_;
};

// Column-stochastic conditional matrix: rows index the output symbol,
// columns the conditioning (input) symbol. Each column is a distribution.
class ChannelMatrix {
 public:
  ChannelMatrix() = default;

  explicit ChannelMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    Require(entries_.rows() > 0 && entries_.cols() > 0,
            ErrorCode::kInvalidArgument, "channel: empty matrix");
    for (Index c = 0; c < entries_.cols(); ++c) {
      entries_.col(c) = internal::ValidatedDistribution(
          entries_.col(c), Support::kAllowZeros,
          "channel column " + std::to_string(c));
    }
  }

  // Row-major construction: rows[r][c] = P(output r | input c).
  static ChannelMatrix FromRows(const std::vector<std::vector<double>>& rows) {
    Require(!rows.empty() && !rows.front().empty(), ErrorCode::kInvalidArgument,
            "channel: empty matrix");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()),
                      static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      Require(rows[r].size() == rows.front().size(), ErrorCode::kInvalidArgument,
              "channel: row " + std::to_string(r) + " has " +
                  std::to_string(rows[r].size()) + " entries, expected " +
                  std::to_string(rows.front().size()));
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
      }
    }
    return ChannelMatrix(std::move(m));
  }

  const Eigen::MatrixXd& matrix() const { return entries_; }
  Index outputs() const { return entries_.rows(); }
  Index inputs() const { return entries_.cols(); }
  bool IsSquare() const { return entries_.rows() == entries_.cols(); }
  double operator()(Index r, Index c) const { return entries_(r, c); }

  ProbVector Column(Index c) const { return ProbVector(entries_.col(c)); }

  // Output marginal for the given input marginal.
  ProbVector Push(const ProbVector& input,
                  Support support = Support::kAllowZeros) const {
    Require(input.size() == inputs(), ErrorCode::kInvalidArgument,
            "channel: input dimension " + std::to_string(input.size()) +
                " does not match " + std::to_string(inputs()) + " columns");
    return ProbVector(entries_ * input.values(), support);
  }

  double SmallestSingularValue() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(entries_);
    return svd.singularValues()(svd.singularValues().size() - 1);
  }

  void RequireInvertible(double threshold = kDefaultInvertibilityThreshold) const {
    Require(IsSquare(), ErrorCode::kInvalidArgument,
            "channel: leakage matrix must be square, got " +
                std::to_string(outputs()) + "x" + std::to_string(inputs()));
    const double smallest = SmallestSingularValue();
    Require(smallest > threshold, ErrorCode::kNumerical,
            "channel: matrix is singular (smallest singular value " +
                std::to_string(smallest) + ")");
  }

  // Explicit inverse by LU with partial pivoting.
  Eigen::MatrixXd Inverse(double threshold = kDefaultInvertibilityThreshold) const {
    RequireInvertible(threshold);
    return entries_.partialPivLu().inverse();
  }

 private:
  Eigen::MatrixXd entries_;
};

// Joint probability table over (row symbol, column symbol).
class JointDistribution {
 public:
  explicit JointDistribution(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    Require(entries_.size() > 0, ErrorCode::kInvalidArgument, "joint: empty table");
    for (Index i = 0; i < entries_.size(); ++i) {
      double& v = entries_.data()[i];
      Require(std::isfinite(v) && v >= -kClampTolerance,
              ErrorCode::kInvalidArgument, "joint: invalid entry");
      if (v < 0.0) v = 0.0;
    }
    Require(std::abs(entries_.sum() - 1.0) <= kSumTolerance,
            ErrorCode::kInvalidArgument, "joint: total mass is not 1");
  }

  // entries(r, u) = pu(u) * conditionals[u](r).
  static JointDistribution FromConditionals(const ProbVector& pu,
                                            std::span<const ProbVector> conditionals) {
    Require(static_cast<Index>(conditionals.size()) == pu.size(),
            ErrorCode::kInvalidArgument,
            "joint: need one conditional per symbol of the mixing variable");
    const Index rows = conditionals.front().size();
    Eigen::MatrixXd m(rows, pu.size());
    for (Index u = 0; u < pu.size(); ++u) {
      Require(conditionals[u].size() == rows, ErrorCode::kInvalidArgument,
              "joint: conditional dimension mismatch");
      m.col(u) = pu[u] * conditionals[u].values();
    }
    return JointDistribution(std::move(m));
  }

  const Eigen::MatrixXd& matrix() const { return entries_; }
  ProbVector RowMarginal() const { return ProbVector(entries_.rowwise().sum()); }
  ProbVector ColumnMarginal() const {
    return ProbVector(entries_.colwise().sum().transpose());
  }
  JointDistribution Transposed() const { return JointDistribution(entries_.transpose()); }

 private:
  Eigen::MatrixXd entries_;
};

namespace internal {

inline void RequireSameSupport(const ProbVector& p, const ProbVector& q) {
  Require(p.size() == q.size(), ErrorCode::kInvalidArgument,
          "dimension mismatch: " + std::to_string(p.size()) + " vs " +
              std::to_string(q.size()));
  for (Index i = 0; i < p.size(); ++i) {
    Require(!(p[i] > 0.0 && q[i] <= 0.0), ErrorCode::kInvalidArgument,
            "support violation at index " + std::to_string(i));
  }
}

}  // namespace internal

// D(p || q) in nats, with 0 log 0 = 0.
inline double KlDivergence(const ProbVector& p, const ProbVector& q) {
  internal::RequireSameSupport(p, q);
  double sum = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    // log1p keeps the near-equal regime accurate.
    sum += p[i] * std::log1p((p[i] - q[i]) / q[i]);
  }
  return sum < 0.0 ? 0.0 : sum;
}

// chi^2(p || q) = sum (p - q)^2 / q.
inline double Chi2Divergence(const ProbVector& p, const ProbVector& q) {
  internal::RequireSameSupport(p, q);
  double sum = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (q[i] <= 0.0) continue;
    const double d = p[i] - q[i];
    sum += d * d / q[i];
  }
  return sum;
}

// I(A;B) in nats for a joint table over (A, B).
inline double MutualInformation(const JointDistribution& joint) {
  const Eigen::VectorXd rows = joint.matrix().rowwise().sum();
  const Eigen::RowVectorXd cols = joint.matrix().colwise().sum();
  double sum = 0.0;
  for (Index c = 0; c < joint.matrix().cols(); ++c) {
    for (Index r = 0; r < joint.matrix().rows(); ++r) {
      const double v = joint.matrix()(r, c);
      if (v <= 0.0) continue;
      sum += v * std::log(v / (rows(r) * cols(c)));
    }
  }
  return sum < 0.0 ? 0.0 : sum;
}

// E_U[ chi^2(P_{X|U=u} || P_X) ], the averaged companion of the per-letter
// criterion.
inline double Chi2Information(std::span<const ProbVector> posteriors,
                              const ProbVector& pu, const ProbVector& prior) {
  Require(static_cast<Index>(posteriors.size()) == pu.size(),
          ErrorCode::kInvalidArgument,
          "chi2 information: need one posterior per symbol");
  double sum = 0.0;
  for (Index u = 0; u < pu.size(); ++u) {
    if (pu[u] <= 0.0) continue;
    sum += pu[u] * Chi2Divergence(posteriors[u], prior);
  }
  return sum;
}

// Minimum mean-square error of estimating a {0,1} variable from its posterior.
inline double MmseBinary(const ProbVector& posterior) {
  Require(posterior.size() == 2, ErrorCode::kInvalidArgument,
          "mmse: posterior must be binary");
  const double p1 = posterior[1];
  return p1 * (1.0 - p1);
}

// P(U != Y) for binary U and Y, given P_U and P_{Y|U=u}.
inline double ErrorProbability(const ProbVector& pu,
                               std::span<const ProbVector> outputs) {
  Require(pu.size() == 2 && outputs.size() == 2, ErrorCode::kInvalidArgument,
          "error probability: U must be binary");
  double sum = 0.0;
  for (Index u = 0; u < 2; ++u) {
    Require(outputs[u].size() == 2, ErrorCode::kInvalidArgument,
            "error probability: Y must be binary");
    sum += pu[u] * (1.0 - outputs[u][u]);
  }
  return sum;
}

}  // namespace chi2mech

#endif  // CHI2MECH_PROBCORE_HPP_
