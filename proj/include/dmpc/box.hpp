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

#ifndef DMPC_BOX_HPP
#define DMPC_BOX_HPP

#include <Eigen/Dense>

namespace dmpc {

/// Axis-aligned box { z : lower <= z <= upper }, used for state, input and
/// decision-variable constraint sets.  Bounds may be +/-infinity.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxSet() = default;
  BoxSet(Eigen::VectorXd lo, Eigen::VectorXd up)
      : lower(std::move(lo)), upper(std::move(up)) {}

  /// Symmetric box [-b, b]^dim.
  static BoxSet symmetric(int dim, double b);
  /// Unbounded box in `dim` dimensions.
  static BoxSet unbounded(int dim);
  /// Concatenation [a.lower; b.lower] .. [a.upper; b.upper].
  static BoxSet stacked(const BoxSet& a, const BoxSet& b);

  int dim() const { return static_cast<int>(lower.size()); }

  /// Largest componentwise excess max_d max(z_d - upper_d, lower_d - z_d, 0).
  /// Zero for interior points; positive outside the box.
  double violation(const Eigen::VectorXd& z) const;

  bool contains(const Eigen::VectorXd& z, double tol = 0.0) const {
    return violation(z) <= tol;
  }

  /// Euclidean projection onto the box.
  Eigen::VectorXd clamp(const Eigen::VectorXd& z) const;

  /// True when sizes agree and lower <= upper componentwise.
  bool well_formed() const;
};

}  // namespace dmpc

#endif  // DMPC_BOX_HPP
