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

#ifndef DMPC_SYSTEM_HPP
#define DMPC_SYSTEM_HPP

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dmpc/box.hpp"
#include "dmpc/errors.hpp"

namespace dmpc {

enum class Discretization { Euler, RK4 };

/// One agent's slice of the partitioned system: its state/input dimensions,
/// admissible boxes and diagonal stage-cost weights.
struct SubsystemSpec {
  std::string name;
  int state_dim = 0;
  int input_dim = 0;
  BoxSet state_box;               ///< X_i
  BoxSet input_box;               ///< U_i
  Eigen::VectorXd state_weight;   ///< diagonal of Q_i (size state_dim)
  Eigen::VectorXd input_weight;   ///< diagonal of R_i (size input_dim)
};

/// Continuous-time vector field xdot = f(x, u) on the global state/input,
/// plus the sampling scheme that turns it into the discrete one-step map.
/// `field_jacobian`, when provided, returns (df/dx, df/du) and is used for
/// exact tangent propagation; otherwise Jacobians fall back to central
/// finite differences on `field`.
struct PartitionedSystem {
  std::vector<SubsystemSpec> subsystems;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      field;
  std::function<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>(
      const Eigen::VectorXd&, const Eigen::VectorXd&)>
      field_jacobian;
  double sample_time = 0.0;
  Discretization discretization = Discretization::RK4;

  int num_agents() const { return static_cast<int>(subsystems.size()); }
  int state_dim() const;
  int input_dim() const;
  /// Offset of agent i's block in the global state vector.
  int state_offset(int agent) const;
  /// Offset of agent i's block in the global input vector.
  int input_offset(int agent) const;

  /// Cartesian product of the per-agent boxes.
  BoxSet global_state_box() const;
  BoxSet global_input_box() const;
  /// Concatenated diagonals of the block-diagonal Q and R.
  Eigen::VectorXd global_state_weight() const;
  Eigen::VectorXd global_input_weight() const;

  Eigen::VectorXd agent_state(int agent, const Eigen::VectorXd& x) const;
  Eigen::VectorXd agent_input(int agent, const Eigen::VectorXd& u) const;

  /// Throws InvalidArgumentError on dimension mismatches, empty boxes,
  /// negative weights, non-positive sample time or missing field.
  void validate() const;
};

/// Predicted (or closed-loop) motion: states has one more entry than inputs.
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;

  int horizon() const { return static_cast<int>(inputs.size()); }
};

/// One sampling-interval advance of the global state under the system's
/// discretization scheme.  Throws IntegrationBlowupError when the result
/// is non-finite.
Eigen::VectorXd discretize_step(const PartitionedSystem& sys,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u);

/// Jacobians (A, B) = (d x+/dx, d x+/du) of the discrete one-step map,
/// propagated through the integrator stages (exactly when the system has an
/// analytic field Jacobian, by central differences on the field otherwise).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> step_jacobian(
    const PartitionedSystem& sys, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u);

/// Roll the discrete map forward under a fixed global input sequence.
Trajectory rollout(const PartitionedSystem& sys, const Eigen::VectorXd& x0,
                   const std::vector<Eigen::VectorXd>& inputs);

/// Quadratic stage cost l(x, u) = x'Qx + u'Ru with the system's diagonal
/// block weights.
double stage_cost(const PartitionedSystem& sys, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& u);

/// Fuse all subsystems into a single agent (same dynamics, boxes and
/// weights concatenated).  Used to compare the negotiation against a
/// centralized controller.
PartitionedSystem fuse_subsystems(const PartitionedSystem& sys);

}  // namespace dmpc

#endif  // DMPC_SYSTEM_HPP
