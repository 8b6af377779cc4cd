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

#ifndef DMPC_SIMULATION_HPP
#define DMPC_SIMULATION_HPP

#include <vector>

#include "dmpc/negotiation.hpp"

namespace dmpc {

struct SimulationOptions {
  Eigen::VectorXd initial_state;
  int steps = 1;                      ///< T_sim; controller also runs at k = T_sim
  Eigen::VectorXi control_horizons;   ///< per-agent N_c at k = 0
  NegotiationConfig negotiation;      ///< includes N_p, adaptation, solver knobs
};

/// Closed-loop record over k = 0..T_sim.  `states` and `inputs` both have
/// T_sim + 1 entries: the accumulated cost indexes stages 0..T_sim
/// inclusive, so the controller negotiates (but does not propagate) at the
/// final step.
struct SimulationResult {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<NegotiationTrace> traces;        ///< one per step
  std::vector<Eigen::VectorXi> initial_horizons;  ///< N_c at the start of each step
  double jcc = 0.0;                            ///< accumulated stage cost
  long total_iterations = 0;
  double max_feasibility_violation = 0.0;
  int monotonicity_violations = 0;  ///< objective increases beyond tolerance,
                                    ///< within and across steps
  double wall_seconds = 0.0;
  std::vector<double> local_solve_seconds;  ///< all local solves, in order
};

/// Receding-horizon loop: build the k = 0 plans by one centralized solve
/// from a zero warm start (aborts with ProtocolViolationError when that
/// solve cannot reach feasibility), then per step negotiate, apply the
/// first inputs, advance the state, shift the candidate and update the
/// horizons.  Deterministic for a fixed configuration.
SimulationResult simulate(const PartitionedSystem& sys,
                          const TerminalIngredients& term,
                          const SimulationOptions& options);

}  // namespace dmpc

#endif  // DMPC_SIMULATION_HPP
