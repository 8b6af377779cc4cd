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

#ifndef DMPC_COST_HPP
#define DMPC_COST_HPP

#include "dmpc/system.hpp"
#include "dmpc/terminal.hpp"

namespace dmpc {

/// Finite-horizon objective J = sum_t l(x(t), u(t)) + V_f(x(N)).
double objective_value(const PartitionedSystem& sys,
                       const TerminalIngredients& term, const Trajectory& traj);

/// Constraint diagnosis of a predicted trajectory.  The terminal violation
/// aggregates the X_f membership residuals at x(N): max(0, V_f - alpha)
/// plus the state-box excess plus the input-box excess of Kx(N).
struct FeasibilityReport {
  bool feasible = false;
  double max_state_violation = 0.0;  ///< over all states x(0..N)
  double max_input_violation = 0.0;  ///< over all inputs u(0..N-1)
  double terminal_violation = 0.0;

  double worst() const;
};

FeasibilityReport check_feasible(const PartitionedSystem& sys,
                                 const TerminalIngredients& term,
                                 const Trajectory& traj, double tol = 1e-6);

}  // namespace dmpc

#endif  // DMPC_COST_HPP
