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

#include "dmpc/cost.hpp"

#include <algorithm>

namespace dmpc {

double objective_value(const PartitionedSystem& sys,
                       const TerminalIngredients& term,
                       const Trajectory& traj) {
  double total = 0.0;
  for (int t = 0; t < traj.horizon(); ++t) {
    total += stage_cost(sys, traj.states[t], traj.inputs[t]);
  }
  total += term.vf(traj.states.back());
  return total;
}

double FeasibilityReport::worst() const {
  return std::max({max_state_violation, max_input_violation, terminal_violation});
}

FeasibilityReport check_feasible(const PartitionedSystem& sys,
                                 const TerminalIngredients& term,
                                 const Trajectory& traj, double tol) {
  FeasibilityReport report;
  const BoxSet xbox = sys.global_state_box();
  const BoxSet ubox = sys.global_input_box();
  for (const auto& x : traj.states) {
    report.max_state_violation =
        std::max(report.max_state_violation, xbox.violation(x));
  }
  for (const auto& u : traj.inputs) {
    report.max_input_violation =
        std::max(report.max_input_violation, ubox.violation(u));
  }
  const Eigen::VectorXd& xN = traj.states.back();
  report.terminal_violation = std::max(0.0, term.vf(xN) - term.alpha) +
                              xbox.violation(xN) +
                              ubox.violation(term.control(xN));
  report.feasible = report.max_state_violation <= tol &&
                    report.max_input_violation <= tol &&
                    report.terminal_violation <= tol;
  return report;
}

}  // namespace dmpc
