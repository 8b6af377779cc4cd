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

#include "dmpc/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "dmpc/cost.hpp"

namespace dmpc {

namespace {

using Clock = std::chrono::steady_clock;

/// Full input sequence encoded by a plan whose tail blend is inactive
/// (lambda = 0): free inputs followed by the tail reference, verbatim.
std::vector<Eigen::VectorXd> full_sequence(const InputPlan& plan) {
  std::vector<Eigen::VectorXd> seq = plan.free_inputs;
  seq.insert(seq.end(), plan.tail_reference.begin(),
             plan.tail_reference.end());
  return seq;
}

}  // namespace

SimulationResult simulate(const PartitionedSystem& sys,
                          const TerminalIngredients& term,
                          const SimulationOptions& options) {
  const int num_agents = sys.num_agents();
  const int np = options.negotiation.prediction_horizon;
  if (options.initial_state.size() != sys.state_dim()) {
    throw InvalidArgumentError("simulate: initial state dimension mismatch");
  }
  if (options.steps < 0) {
    throw InvalidArgumentError("simulate: steps must be non-negative");
  }
  if (options.control_horizons.size() != num_agents) {
    throw InvalidArgumentError(
        "simulate: one control horizon per agent required");
  }
  for (int i = 0; i < num_agents; ++i) {
    const int nc = options.control_horizons[i];
    if (nc < 1 || nc > np) {
      throw InvalidArgumentError(
          "simulate: control horizon of agent " + std::to_string(i) +
          " outside [1, prediction horizon]");
    }
  }
  if (options.negotiation.max_iterations < 1) {
    throw InvalidArgumentError("simulate: need at least one iteration");
  }

  const auto start = Clock::now();
  SimulationResult out;

  // Bootstrap: one centralized solve from a zero warm start provides the
  // k = 0 plans.  This solve gets a larger budget than the per-step local
  // problems because it starts far from feasibility.
  NlpOptions boot = options.negotiation.solver;
  boot.max_inner = std::max(boot.max_inner * 10, 2000);
  boot.max_outer = std::max(boot.max_outer, 40);
  const CentralizedResult bootstrap =
      centralized_solve(sys, term, options.initial_state, np, {}, boot,
                        options.negotiation.feasibility_tol);
  {
    const FeasibilityReport rep =
        check_feasible(sys, term, bootstrap.trajectory,
                       options.negotiation.feasibility_tol);
    if (!rep.feasible) {
      throw ProtocolViolationError(
          "simulate: centralized bootstrap failed to find a feasible plan "
          "(violation " +
          std::to_string(rep.worst()) +
          "); the initial state may be outside the feasible set for this "
          "prediction horizon");
    }
  }

  Eigen::VectorXi horizons = options.control_horizons;
  std::vector<InputPlan> plans =
      plans_from_global_inputs(sys, bootstrap.inputs, horizons);
  Eigen::VectorXd x = options.initial_state;
  double prev_final = 0.0;
  bool have_prev_final = false;

  for (int k = 0; k <= options.steps; ++k) {
    out.initial_horizons.push_back(horizons);
    const NegotiationResult res =
        negotiate(sys, term, x, plans, options.negotiation);

    out.traces.push_back(res.trace);
    out.total_iterations +=
        static_cast<long>(res.trace.iterations.size());
    out.local_solve_seconds.insert(out.local_solve_seconds.end(),
                                   res.local_solve_seconds.begin(),
                                   res.local_solve_seconds.end());

    double prev_j = res.trace.initial_objective;
    for (const auto& rec : res.trace.iterations) {
      out.max_feasibility_violation = std::max(
          out.max_feasibility_violation, rec.feasibility_residual);
      if (rec.objective > prev_j + 1e-9 * (1.0 + std::abs(prev_j))) {
        ++out.monotonicity_violations;
      }
      prev_j = rec.objective;
    }
    const double final_j = res.trace.iterations.back().objective;
    if (have_prev_final &&
        final_j > prev_final + 1e-9 * (1.0 + std::abs(prev_final))) {
      ++out.monotonicity_violations;
    }
    prev_final = final_j;
    have_prev_final = true;

    const Eigen::VectorXd u0 = res.materialized.trajectory.inputs[0];
    out.states.push_back(x);
    out.inputs.push_back(u0);
    out.jcc += stage_cost(sys, x, u0);

    if (k == options.steps) break;

    // Advance along the prediction (identical arithmetic to re-stepping),
    // shift the candidate and update the horizons for the next step.
    x = res.materialized.trajectory.states[1];
    std::vector<InputPlan> shifted =
        shift_candidate(sys, term, res, options.negotiation);
    Eigen::VectorXi ended(num_agents);
    for (int i = 0; i < num_agents; ++i) {
      ended[i] = res.plans[i].control_horizon;
    }
    const Eigen::VectorXi next_horizons = update_nc0(
        res.trace, options.negotiation.nc0_update, ended, np);
    for (int i = 0; i < num_agents; ++i) {
      if (next_horizons[i] != shifted[i].control_horizon) {
        shifted[i] = InputPlan::from_sequence(i, next_horizons[i],
                                              full_sequence(shifted[i]));
      }
    }
    plans = std::move(shifted);
    horizons = next_horizons;
  }

  out.wall_seconds =
      std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

}  // namespace dmpc
