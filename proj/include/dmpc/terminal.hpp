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

#ifndef DMPC_TERMINAL_HPP
#define DMPC_TERMINAL_HPP

#include <Eigen/Dense>

#include "dmpc/errors.hpp"

namespace dmpc {

/// Terminal controller, cost and set level for the origin-stabilizing MPC:
/// kappa(x) = Kx, V_f(x) = x'Px, X_f = { V_f(x) <= alpha } intersected with
/// the state box and { Kx in U }.
struct TerminalIngredients {
  Eigen::MatrixXd gain;    ///< K (input_dim x state_dim)
  Eigen::MatrixXd weight;  ///< P, symmetric positive definite
  double alpha = 0.0;      ///< terminal-set level, > 0

  double vf(const Eigen::VectorXd& x) const { return x.dot(weight * x); }
  Eigen::VectorXd vf_grad(const Eigen::VectorXd& x) const {
    return 2.0 * (weight * x);
  }
  /// Terminal control law kappa(x) = Kx (global input vector).
  Eigen::VectorXd control(const Eigen::VectorXd& x) const { return gain * x; }
  /// Agent i's rows of the gain, for per-agent tail laws.
  Eigen::MatrixXd agent_gain_rows(int input_offset, int input_dim) const {
    return gain.middleRows(input_offset, input_dim);
  }

  /// Throws TerminalDesignError when P is asymmetric beyond 1e-10, not
  /// positive definite, alpha <= 0 or dimensions disagree.
  void validate() const;
};

}  // namespace dmpc

#endif  // DMPC_TERMINAL_HPP
