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

#ifndef DMPC_PLANS_HPP
#define DMPC_PLANS_HPP

#include <vector>

#include "dmpc/cost.hpp"
#include "dmpc/system.hpp"
#include "dmpc/terminal.hpp"

namespace dmpc {

/// Tail parameterization for inputs past the control horizon.
enum class TailLaw {
  Terminal,  ///< u_i(t) = lambda * K_i x(t) + (1 - lambda) * tail_reference(t)
  HoldLast   ///< u_i(t) = lambda * u_i(Nc-1) + (1 - lambda) * tail_reference(t)
};

/// One agent's predicted input sequence over the prediction horizon: the
/// first `control_horizon` entries are free decisions; the remaining
/// entries blend the tail law with the previous iterate's inputs through
/// the scalar `lambda`.  A plan with lambda == 0 is *concrete*: its full
/// sequence is free_inputs ++ tail_reference independent of the rollout.
struct InputPlan {
  int agent = 0;
  int control_horizon = 1;  ///< N_c,i >= 1
  std::vector<Eigen::VectorXd> free_inputs;      ///< u_i(0..Nc-1), each m_i
  double lambda = 0.0;                           ///< in [0,1]
  std::vector<Eigen::VectorXd> tail_reference;   ///< previous iterate's u_i(Nc..Np-1)

  int prediction_horizon() const {
    return control_horizon + static_cast<int>(tail_reference.size());
  }

  /// Concrete plan (lambda = 0) from a full materialized sequence, split at
  /// the given control horizon.
  static InputPlan from_sequence(int agent, int control_horizon,
                                 const std::vector<Eigen::VectorXd>& sequence);

  /// Throws InvalidArgumentError on horizon/size/lambda violations.
  void validate(const PartitionedSystem& sys) const;
};

/// Joint rollout of a set of plans: the trajectory plus each agent's full
/// materialized input sequence (tail entries resolved against the rolled-out
/// states, interleaved step by step).
struct Materialized {
  Trajectory trajectory;
  /// sequences[agent][t], t in [0, Np).
  std::vector<std::vector<Eigen::VectorXd>> sequences;

  /// Global input vector at step t, concatenated in agent order.
  Eigen::VectorXd global_input(const PartitionedSystem& sys, int t) const;
};

/// Roll the joint plan forward from x0.  Plans with lambda == 0 take an
/// exact copy path so re-materializing a previous iterate is bit-identical.
Materialized materialize(const PartitionedSystem& sys,
                         const TerminalIngredients& term,
                         const Eigen::VectorXd& x0,
                         const std::vector<InputPlan>& plans,
                         TailLaw tail_law = TailLaw::Terminal);

/// Validates a joint plan set: one plan per agent in order, equal prediction
/// horizons.  Throws InvalidArgumentError.
void validate_joint(const PartitionedSystem& sys,
                    const std::vector<InputPlan>& plans);

}  // namespace dmpc

#endif  // DMPC_PLANS_HPP
