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

#ifndef DMPC_TESTS_TEST_SUPPORT_HPP
#define DMPC_TESTS_TEST_SUPPORT_HPP

#include <utility>
#include <vector>

#include "dmpc/negotiation.hpp"
#include "dmpc/system.hpp"
#include "dmpc/terminal_design.hpp"

namespace dmpc_test {

/// Two weakly-coupled scalar agents with a linear field, discretized with
/// Euler so the discrete map is exactly linear.  Small enough that local
/// and centralized solves finish in milliseconds.
inline dmpc::PartitionedSystem make_two_agent_linear() {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  dmpc::PartitionedSystem sys;
  for (int i = 0; i < 2; ++i) {
    dmpc::SubsystemSpec s;
    s.name = i == 0 ? "left" : "right";
    s.state_dim = 1;
    s.input_dim = 1;
    s.state_box = dmpc::BoxSet::symmetric(1, 4.0);
    s.input_box = dmpc::BoxSet::symmetric(1, 2.0);
    s.state_weight = VectorXd::Constant(1, 1.0);
    s.input_weight = VectorXd::Constant(1, 0.1);
    sys.subsystems.push_back(s);
  }
  sys.field = [](const VectorXd& x, const VectorXd& u) {
    VectorXd dx(2);
    dx[0] = -0.5 * x[0] + 0.1 * x[1] + u[0];
    dx[1] = -0.4 * x[1] + 0.1 * x[0] + u[1];
    return dx;
  };
  sys.field_jacobian = [](const VectorXd&, const VectorXd&) {
    MatrixXd A(2, 2), B(2, 2);
    A << -0.5, 0.1, 0.1, -0.4;
    B = MatrixXd::Identity(2, 2);
    return std::make_pair(A, B);
  };
  sys.sample_time = 0.2;
  sys.discretization = dmpc::Discretization::Euler;
  sys.validate();
  return sys;
}

/// Terminal ingredients for the two-agent system with a small sample budget.
inline dmpc::TerminalIngredients make_two_agent_terminal(
    const dmpc::PartitionedSystem& sys) {
  dmpc::TerminalDesignOptions opts;
  opts.num_samples = 2000;
  return dmpc::design_terminal(sys, opts);
}

/// Feasible concrete plans from one centralized solve at the given state.
inline std::vector<dmpc::InputPlan> make_feasible_plans(
    const dmpc::PartitionedSystem& sys, const dmpc::TerminalIngredients& term,
    const Eigen::VectorXd& x0, const Eigen::VectorXi& control_horizons,
    int prediction_horizon) {
  dmpc::NlpOptions opts;
  const dmpc::CentralizedResult res = dmpc::centralized_solve(
      sys, term, x0, prediction_horizon, {}, opts);
  return dmpc::plans_from_global_inputs(sys, res.inputs, control_horizons);
}

/// Default negotiation configuration for the two-agent system.
inline dmpc::NegotiationConfig make_config(int prediction_horizon) {
  dmpc::NegotiationConfig config;
  config.prediction_horizon = prediction_horizon;
  config.max_iterations = 10;
  config.convergence_tol = 1e-6;
  config.feasibility_tol = 1e-6;
  return config;
}

}  // namespace dmpc_test

#endif  // DMPC_TESTS_TEST_SUPPORT_HPP
