/*
 * Copyright 2026 The dmpc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dmpc/box.hpp"

#include <algorithm>
#include <limits>

namespace dmpc {

BoxSet BoxSet::symmetric(int dim, double b) {
  return BoxSet(Eigen::VectorXd::Constant(dim, -b),
                Eigen::VectorXd::Constant(dim, b));
}

BoxSet BoxSet::unbounded(int dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return BoxSet(Eigen::VectorXd::Constant(dim, -inf),
                Eigen::VectorXd::Constant(dim, inf));
}

BoxSet BoxSet::stacked(const BoxSet& a, const BoxSet& b) {
  BoxSet out;
  out.lower.resize(a.dim() + b.dim());
  out.upper.resize(a.dim() + b.dim());
  out.lower << a.lower, b.lower;
  out.upper << a.upper, b.upper;
  return out;
}

double BoxSet::violation(const Eigen::VectorXd& z) const {
  double worst = 0.0;
  for (int d = 0; d < dim(); ++d) {
    worst = std::max(worst, z[d] - upper[d]);
    worst = std::max(worst, lower[d] - z[d]);
  }
  return worst;
}

Eigen::VectorXd BoxSet::clamp(const Eigen::VectorXd& z) const {
  return z.cwiseMax(lower).cwiseMin(upper);
}

bool BoxSet::well_formed() const {
  if (lower.size() != upper.size()) return false;
  for (int d = 0; d < dim(); ++d) {
    if (!(lower[d] < upper[d])) return false;
  }
  return true;
}

}  // namespace dmpc
