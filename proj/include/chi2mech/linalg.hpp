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

#ifndef CHI2MECH_LINALG_HPP_
#define CHI2MECH_LINALG_HPP_

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "chi2mech/error.hpp"

namespace chi2mech {

using Index = Eigen::Index;

// Full singular value decomposition A = U diag(s) V^T.
//
// singular_values has min(rows, cols) entries in descending order. left is
// rows x rows and right is cols x cols; columns past min(rows, cols) span the
// null spaces. Each right vector is sign-normalized so that its entry of
// largest magnitude is positive (ties go to the lowest index), and the
// matching left vector is flipped with it.
struct Svd {
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};

namespace internal {

// Index of the largest-magnitude entry; entries within a relative 1e-12 of
// the maximum count as tied and the lowest index wins.
inline Index DominantIndex(const Eigen::VectorXd& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  for (Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) >= peak * (1.0 - 1e-12)) return i;
  }
  return 0;
}

}  // namespace internal

// Flips v so its dominant entry is positive. Returns true if flipped.
inline bool NormalizeSign(Eigen::VectorXd& v) {
  if (v.size() == 0) return false;
  if (v(internal::DominantIndex(v)) < 0.0) {
    v = -v;
    return true;
  }
  return false;
}

inline Svd ComputeSvd(const Eigen::MatrixXd& a) {
  Require(a.size() > 0, ErrorCode::kInvalidArgument, "svd: empty matrix");
  Require(a.allFinite(), ErrorCode::kInvalidArgument, "svd: non-finite entry");
  Eigen::JacobiSVD<Eigen::MatrixXd> jacobi(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd out{jacobi.singularValues(), jacobi.matrixU(), jacobi.matrixV()};
  for (Index i = 0; i < out.right.cols(); ++i) {
    Eigen::VectorXd v = out.right.col(i);
    if (NormalizeSign(v)) {
      out.right.col(i) = v;
      if (i < out.left.cols()) out.left.col(i) = -out.left.col(i);
    }
  }
  return out;
}

// Orthonormal basis (as columns) of the complement of a nonzero vector, from
// the Householder reflection that maps it onto the first axis.
inline Eigen::MatrixXd OrthogonalComplement(const Eigen::VectorXd& s) {
  const Index k = s.size();
  Require(k >= 2, ErrorCode::kInvalidArgument,
          "orthogonal complement needs dimension >= 2");
  const double norm = s.norm();
  Require(norm > 0.0, ErrorCode::kInvalidArgument,
          "orthogonal complement of the zero vector");
  Eigen::VectorXd w = s / norm;
  w(0) += (w(0) >= 0.0 ? 1.0 : -1.0);
  const Eigen::MatrixXd h =
      Eigen::MatrixXd::Identity(k, k) - 2.0 * w * w.transpose() / w.squaredNorm();
  return h.rightCols(k - 1);
}

struct ConstrainedMaximizer {
  double gain = 0.0;          // max ||M L|| over unit L orthogonal to s
  Eigen::VectorXd direction;  // the maximizing unit L, sign-normalized
};

// Solves max ||M L|| subject to ||L|| = 1 and L orthogonal to s, by an SVD of
// M restricted to the complement of s. Well defined even when the top
// singular value of M is repeated.
inline ConstrainedMaximizer MaximizeOrthogonalTo(const Eigen::MatrixXd& m,
                                                 const Eigen::VectorXd& s) {
  Require(m.cols() == s.size(), ErrorCode::kInvalidArgument,
          "constrained maximizer: dimension mismatch");
  const Eigen::MatrixXd basis = OrthogonalComplement(s);
  const Svd reduced = ComputeSvd(m * basis);
  ConstrainedMaximizer out;
  out.gain = reduced.singular_values.size() > 0 ? reduced.singular_values(0) : 0.0;
  out.direction = basis * reduced.right.col(0);
  out.direction.normalize();
  NormalizeSign(out.direction);
  return out;
}

}  // namespace chi2mech

#endif  // CHI2MECH_LINALG_HPP_
