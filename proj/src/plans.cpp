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

#include "dmpc/plans.hpp"

#include <string>

namespace dmpc {

InputPlan InputPlan::from_sequence(int agent, int control_horizon,
                                   const std::vector<Eigen::VectorXd>& sequence) {
  if (control_horizon < 1 ||
      control_horizon > static_cast<int>(sequence.size())) {
    throw InvalidArgumentError(
        "InputPlan::from_sequence: control horizon outside [1, Np]");
  }
  InputPlan plan;
  plan.agent = agent;
  plan.control_horizon = control_horizon;
  plan.lambda = 0.0;
  plan.free_inputs.assign(sequence.begin(), sequence.begin() + control_horizon);
  plan.tail_reference.assign(sequence.begin() + control_horizon, sequence.end());
  return plan;
}

void InputPlan::validate(const PartitionedSystem& sys) const {
  const std::string tag = "plan for agent " + std::to_string(agent);
  if (agent < 0 || agent >= sys.num_agents()) {
    throw InvalidArgumentError(tag + ": agent index out of range");
  }
  const int mi = sys.subsystems[agent].input_dim;
  if (control_horizon < 1) {
    throw InvalidArgumentError(tag + ": control horizon must be >= 1");
  }
  if (static_cast<int>(free_inputs.size()) != control_horizon) {
    throw InvalidArgumentError(tag + ": free input count != control horizon");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw InvalidArgumentError(tag + ": lambda outside [0, 1]");
  }
  for (const auto& u : free_inputs) {
    if (static_cast<int>(u.size()) != mi) {
      throw InvalidArgumentError(tag + ": free input dimension mismatch");
    }
  }
  for (const auto& u : tail_reference) {
    if (static_cast<int>(u.size()) != mi) {
      throw InvalidArgumentError(tag + ": tail reference dimension mismatch");
    }
  }
}

void validate_joint(const PartitionedSystem& sys,
                    const std::vector<InputPlan>& plans) {
  if (static_cast<int>(plans.size()) != sys.num_agents()) {
    throw InvalidArgumentError("joint plan: need exactly one plan per agent");
  }
  int np = -1;
  for (int i = 0; i < sys.num_agents(); ++i) {
    plans[i].validate(sys);
    if (plans[i].agent != i) {
      throw InvalidArgumentError("joint plan: plans out of agent order");
    }
    if (np < 0) np = plans[i].prediction_horizon();
    if (plans[i].prediction_horizon() != np) {
      throw InvalidArgumentError(
          "joint plan: prediction horizons differ across agents");
    }
  }
}

Eigen::VectorXd Materialized::global_input(const PartitionedSystem& sys,
                                           int t) const {
  (void)sys;
  return trajectory.inputs.at(t);
}

Materialized materialize(const PartitionedSystem& sys,
                         const TerminalIngredients& term,
                         const Eigen::VectorXd& x0,
                         const std::vector<InputPlan>& plans,
                         TailLaw tail_law) {
  validate_joint(sys, plans);
  if (x0.size() != sys.state_dim()) {
    throw InvalidArgumentError("materialize: initial state dimension mismatch");
  }
  const int np = plans.empty() ? 0 : plans[0].prediction_horizon();
  const int num_agents = sys.num_agents();
  const int m = sys.input_dim();

  Materialized out;
  out.sequences.assign(num_agents, {});
  for (auto& seq : out.sequences) seq.reserve(np);
  out.trajectory.states.reserve(np + 1);
  out.trajectory.inputs.reserve(np);
  out.trajectory.states.push_back(x0);

  for (int t = 0; t < np; ++t) {
    const Eigen::VectorXd& x = out.trajectory.states.back();
    Eigen::VectorXd u(m);
    for (int i = 0; i < num_agents; ++i) {
      const InputPlan& plan = plans[i];
      const int off = sys.input_offset(i);
      const int mi = sys.subsystems[i].input_dim;
      Eigen::VectorXd ui;
      if (t < plan.control_horizon) {
        ui = plan.free_inputs[t];
      } else {
        const Eigen::VectorXd& ref = plan.tail_reference[t - plan.control_horizon];
        if (plan.lambda == 0.0) {
          ui = ref;  // exact copy path: previous iterate reproduced bit-for-bit
        } else {
          const Eigen::VectorXd base =
              tail_law == TailLaw::Terminal
                  ? Eigen::VectorXd(term.agent_gain_rows(off, mi) * x)
                  : plan.free_inputs[plan.control_horizon - 1];
          ui = plan.lambda * base + (1.0 - plan.lambda) * ref;
        }
      }
      u.segment(off, mi) = ui;
      out.sequences[i].push_back(std::move(ui));
    }
    out.trajectory.inputs.push_back(u);
    out.trajectory.states.push_back(discretize_step(sys, x, u));
  }
  return out;
}

}  // namespace dmpc
