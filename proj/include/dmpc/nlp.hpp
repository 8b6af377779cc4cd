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

#ifndef DMPC_NLP_HPP
#define DMPC_NLP_HPP

#include <functional>

#include <Eigen/Dense>

#include "dmpc/box.hpp"
#include "dmpc/errors.hpp"

namespace dmpc {

/// Smooth box-constrained problem with general inequality constraints:
///   minimize f(z)  subject to  g(z) <= 0 componentwise,  z in bounds.
/// Gradient callbacks are optional; central finite differences are used
/// when they are absent.  `constraint_vjp(z, w)` must return J_g(z)' w so
/// large constraint blocks never require a dense Jacobian.
struct NlpProblem {
  int dim = 0;
  BoxSet bounds;
  std::function<double(const Eigen::VectorXd&)> objective;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> objective_grad;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> constraints;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      constraint_vjp;
  double feasibility_tol = 1e-6;
};

struct NlpOptions {
  double optimality_tol = 1e-8;  ///< projected-gradient infinity norm
  int max_outer = 20;            ///< augmented-Lagrangian rounds
  int max_inner = 400;           ///< quasi-Newton steps per round
  double penalty_init = 10.0;
  double penalty_growth = 10.0;
  double penalty_max = 1e12;
  int history = 10;              ///< quasi-Newton memory pairs
  int max_line_search = 40;
};

enum class SolveStatus {
  Converged,        ///< optimality and feasibility tolerances met
  IterationLimit,   ///< best feasible iterate after exhausting budgets
  FallbackWarmStart ///< solve failed to dominate a feasible warm start
};

struct SolveResult {
  Eigen::VectorXd z;
  double objective_value = 0.0;
  double max_constraint_violation = 0.0;
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;  ///< total inner quasi-Newton steps
};

/// Augmented-Lagrangian outer loop around a box-projected limited-memory
/// quasi-Newton inner solver.  Deterministic.  Warm-start dominance: when
/// the (projected) warm start is feasible, the returned point is feasible
/// with objective <= warm-start objective + 1e-12; otherwise the warm start
/// itself is returned with status FallbackWarmStart.  Throws
/// InvalidArgumentError when the objective is non-finite at the projected
/// warm start.
SolveResult solve_nlp(const NlpProblem& problem, Eigen::VectorXd warm_start,
                      const NlpOptions& options = {});

/// Central-difference gradient with per-coordinate step
/// base_step * (1 + |z_i|); shared by the solver fallbacks and by tests.
Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& z, double base_step = 1e-6);

}  // namespace dmpc

#endif  // DMPC_NLP_HPP
