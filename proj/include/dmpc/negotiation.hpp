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

#ifndef DMPC_NEGOTIATION_HPP
#define DMPC_NEGOTIATION_HPP

#include <string>
#include <vector>

#include "dmpc/nlp.hpp"
#include "dmpc/plans.hpp"

namespace dmpc {

/// How each agent's initial control horizon is chosen for the next
/// closed-loop step.
enum class Nc0Update {
  Fixed,              ///< keep the configured horizons
  MeanOfPreviousStep  ///< mean of the horizons used across the previous
                      ///< step's iterations, rounded half up, clamped
};

struct NegotiationConfig {
  int prediction_horizon = 1;   ///< N_p
  int max_iterations = 20;      ///< negotiation rounds per step
  double convergence_tol = 1e-6;  ///< relative objective-decrease threshold
  double feasibility_tol = 1e-6;
  bool adapt_horizons = false;
  double epsilon_shrink = 5e-6;   ///< suboptimality budget for one shrink
  Nc0Update nc0_update = Nc0Update::Fixed;
  TailLaw tail_law = TailLaw::Terminal;
  int jobs = 1;                   ///< worker threads for per-agent solves
  NlpOptions solver;
};

/// One negotiation round as recorded for traces/CSV.
struct IterationRecord {
  int iteration = 0;                  ///< p, starting at 1
  double objective = 0.0;             ///< J after coordination at this round
  Eigen::VectorXd lambda;             ///< per-agent lambda*
  Eigen::VectorXd gamma;              ///< per-agent gamma*
  Eigen::VectorXi control_horizons;   ///< per-agent N_c used at this round
  double feasibility_residual = 0.0;  ///< worst violation of the blended plan
};

struct NegotiationTrace {
  double initial_objective = 0.0;  ///< J of the warm-start plans
  std::vector<IterationRecord> iterations;
  std::string convergence_reason;  ///< "converged" or "max_iterations"

  int final_iteration() const { return static_cast<int>(iterations.size()); }
};

/// Agent i's solved proposal: the plan with its optimal lambda, the full
/// materialized own sequence under the joint rollout, and the joint
/// objective value against the other agents' previous plans.
struct LocalSolution {
  InputPlan plan;
  std::vector<Eigen::VectorXd> sequence;
  double objective = 0.0;
  double lambda_star = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
};

/// Supervisor result: blending weights, the blended (concrete) plans and
/// their joint rollout.
struct CoordinationResult {
  Eigen::VectorXd gamma;
  std::vector<InputPlan> plans;
  Materialized materialized;
  double objective = 0.0;
};

struct NegotiationResult {
  std::vector<InputPlan> plans;  ///< concrete final plans
  Materialized materialized;     ///< their joint rollout
  NegotiationTrace trace;
  std::vector<double> local_solve_seconds;  ///< agent-major per iteration
};

/// Agent i's local problem: decisions (u_i(0..Nc-1), lambda_i), all other
/// agents frozen at their previous plans; warm start is the previous own
/// sequence with lambda = 0.  Dominance: the returned joint objective never
/// exceeds the warm start's.  Throws ProtocolViolationError when the
/// previous joint plan is infeasible.
LocalSolution solve_local(const PartitionedSystem& sys,
                          const TerminalIngredients& term, int agent,
                          const Eigen::VectorXd& x0,
                          const std::vector<InputPlan>& previous,
                          const NegotiationConfig& config);

/// Supervisor step: choose gamma in [0,1]^N blending each proposal with the
/// previous iterate; multi-start solves seeded from {0, e_i, 1} and a
/// 5-point diagonal sweep; gamma = 0 reproduces the previous plans, so the
/// objective never increases.
CoordinationResult coordinate(const PartitionedSystem& sys,
                              const TerminalIngredients& term,
                              const Eigen::VectorXd& x0,
                              const std::vector<LocalSolution>& proposals,
                              const std::vector<InputPlan>& previous,
                              const NegotiationConfig& config);

/// One-unit horizon-shrink attempt: rebuild the last free input of the
/// agent's proposal through the tail blend; accept N_c - 1 when the result
/// is feasible and costs at most epsilon_shrink more than the proposal.
/// Returns the (possibly reduced) control horizon.
int try_shrink_horizon(const PartitionedSystem& sys,
                       const TerminalIngredients& term, int agent,
                       const LocalSolution& proposal,
                       const Eigen::VectorXd& x0,
                       const std::vector<InputPlan>& previous,
                       const NegotiationConfig& config);

/// The full negotiation at one closed-loop step: rounds of parallel local
/// solves, coordination, blending and optional horizon shrinking, until the
/// relative objective decrease falls below convergence_tol or the round cap
/// is hit.
NegotiationResult negotiate(const PartitionedSystem& sys,
                            const TerminalIngredients& term,
                            const Eigen::VectorXd& x0,
                            const std::vector<InputPlan>& initial_plans,
                            const NegotiationConfig& config);

/// Warm start for the next step: drop the first input, append the terminal
/// law at the old terminal state, keep each agent's control horizon.
/// Asserts the shifted joint plan is feasible at the advanced state and
/// throws TerminalDesignError otherwise.
std::vector<InputPlan> shift_candidate(const PartitionedSystem& sys,
                                       const TerminalIngredients& term,
                                       const NegotiationResult& result,
                                       const NegotiationConfig& config);

/// Next step's initial horizons from this step's trace (see Nc0Update).
Eigen::VectorXi update_nc0(const NegotiationTrace& trace, Nc0Update mode,
                           const Eigen::VectorXi& current,
                           int prediction_horizon);

/// Direct solve of the centralized finite-horizon problem over all inputs.
struct CentralizedResult {
  std::vector<Eigen::VectorXd> inputs;  ///< global inputs u(0..Np-1)
  Trajectory trajectory;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Converged;
};

/// Warm start may be empty (zero inputs).  Used to build the k = 0 initial
/// feasible plans and as the reduction oracle for a single fused agent.
CentralizedResult centralized_solve(const PartitionedSystem& sys,
                                    const TerminalIngredients& term,
                                    const Eigen::VectorXd& x0, int horizon,
                                    const std::vector<Eigen::VectorXd>& warm,
                                    const NlpOptions& options,
                                    double feasibility_tol = 1e-6);

/// Split a centralized input sequence into per-agent concrete plans at the
/// given control horizons.
std::vector<InputPlan> plans_from_global_inputs(
    const PartitionedSystem& sys, const std::vector<Eigen::VectorXd>& inputs,
    const Eigen::VectorXi& control_horizons);

}  // namespace dmpc

#endif  // DMPC_NEGOTIATION_HPP
