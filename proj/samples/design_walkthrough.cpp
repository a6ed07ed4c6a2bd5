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

// Walks through the design for a 2x2 leakage matrix and compares the
// closed-form utility with the exhaustive search over binary kernels.

#include <cstdio>

#include "chi2mech/chi2mech.hpp"

int main() {
  using namespace chi2mech;
  const ChannelMatrix leakage = ChannelMatrix::FromRows({{0.25, 0.4}, {0.75, 0.6}});
  const ProbVector py{0.25, 0.75};

  const ProbVector px = DerivePx(leakage, py);
  std::printf("P_X            = [%.4f, %.4f]\n", px[0], px[1]);
  const DesignMatrix w = BuildW(leakage, py);
  std::printf("W              = [[%.4f, %.4f], [%.4f, %.4f]]\n", w.w(0, 0), w.w(0, 1), w.w(1, 0),
              w.w(1, 1));
  std::printf("singular values = %.4f, %.4f\n", w.singular_values()(0), w.singular_values()(1));

  std::printf("\n%8s %14s %14s %14s\n", "eps", "approx", "exact", "search");
  for (double eps : {0.0025, 0.005, 0.01, 0.02}) {
    const Design d = DesignMechanism(leakage, py, eps);
    const GridSearchResult best = ExactBinarySearch(leakage, py, eps);
    std::printf("%8.4f %14.6e %14.6e %14.6e\n", eps, d.report.approx_utility_nats,
                d.report.exact_utility_nats, best.best_utility_nats);
  }
  return 0;
}
