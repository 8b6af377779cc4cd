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

#include "dmpc/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace dmpc {

namespace {

/// Augmented-Lagrangian state for inequality constraints g(z) <= 0:
///   L(z) = f(z) + 1/(2 mu) * sum_i [ max(0, lam_i + mu g_i(z))^2 - lam_i^2 ].
/// The gradient only needs the constraint vector-Jacobian product with
/// weights w_i = max(0, lam_i + mu g_i(z)).
struct Augmented {
  const NlpProblem& problem;
  Eigen::VectorXd multipliers;  // lam >= 0
  double penalty;               // mu > 0

  bool constrained() const { return static_cast<bool>(problem.constraints); }

  double value(const Eigen::VectorXd& z, double* violation = nullptr) const {
    double v = problem.objective(z);
    if (violation) *violation = 0.0;
    if (!constrained()) return v;
    const Eigen::VectorXd g = problem.constraints(z);
    double acc = 0.0;
    double worst = 0.0;
    for (int i = 0; i < g.size(); ++i) {
      const double shifted = multipliers[i] + penalty * g[i];
      if (shifted > 0.0) acc += shifted * shifted;
      acc -= multipliers[i] * multipliers[i];
      worst = std::max(worst, g[i]);
    }
    if (violation) *violation = worst;
    return v + acc / (2.0 * penalty);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    Eigen::VectorXd grad = problem.objective_grad
                               ? problem.objective_grad(z)
                               : finite_diff_gradient(problem.objective, z);
    if (!constrained()) return grad;
    const Eigen::VectorXd g = problem.constraints(z);
    Eigen::VectorXd w = (multipliers + penalty * g).cwiseMax(0.0);
    if (w.isZero(0.0)) return grad;
    if (problem.constraint_vjp) return grad + problem.constraint_vjp(z, w);
    // Fallback: dense finite-difference Jacobian, transposed product.
    for (int j = 0; j < z.size(); ++j) {
      const double h = 1e-6 * (1.0 + std::abs(z[j]));
      Eigen::VectorXd zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      grad[j] +=
          w.dot(problem.constraints(zp) - problem.constraints(zm)) / (2.0 * h);
    }
    return grad;
  }
};

double max_violation(const NlpProblem& problem, const Eigen::VectorXd& z) {
  if (!problem.constraints) return 0.0;
  const Eigen::VectorXd g = problem.constraints(z);
  return g.size() > 0 ? std::max(0.0, g.maxCoeff()) : 0.0;
}

struct MemoryPair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

/// Two-loop recursion; returns -H * grad (a descent direction estimate).
Eigen::VectorXd lbfgs_direction(const std::deque<MemoryPair>& mem,
                                const Eigen::VectorXd& grad) {
  if (mem.empty()) return -grad;
  Eigen::VectorXd q = grad;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const auto& last = mem.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

struct InnerResult {
  Eigen::VectorXd z;
  double value;
  double projected_gradient;
  int steps;
  bool stalled = false;  ///< decrease hit the floating-point floor
};

/// Box-projected limited-memory quasi-Newton descent on the augmented
/// Lagrangian, Armijo backtracking along projected trial points.  `tol`
/// bounds the projected gradient; outer iterations pass a forcing sequence
/// that tightens towards optimality_tol, so early subproblems stay cheap.
InnerResult minimize_inner(const Augmented& al, Eigen::VectorXd z,
                           const NlpOptions& opts, double tol) {
  const BoxSet& box = al.problem.bounds;
  std::deque<MemoryPair> memory;
  double value = al.value(z);
  Eigen::VectorXd grad = al.gradient(z);
  double pg = (z - box.clamp(z - grad)).lpNorm<Eigen::Infinity>();
  int steps = 0;
  int stagnant = 0;

  while (pg > tol && steps < opts.max_inner) {
    Eigen::VectorXd dir = lbfgs_direction(memory, grad);
    if (grad.dot(dir) > -1e-12 * dir.norm() * grad.norm()) {
      memory.clear();
      dir = -grad;
    }

    bool accepted = false;
    Eigen::VectorXd z_new;
    double value_new = value;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double t = 1.0;
      for (int ls = 0; ls < opts.max_line_search; ++ls) {
        z_new = box.clamp(z + t * dir);
        const double model = grad.dot(z_new - z);
        value_new = al.value(z_new);
        const bool ok = model < 0.0 ? value_new <= value + 1e-4 * model
                                    : value_new < value;
        if (ok) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted && attempt == 0 && !memory.empty()) {
        memory.clear();  // retry once along steepest descent
        dir = -grad;
      }
    }
    if (!accepted) {
      return {std::move(z), value, pg, steps, true};  // no descent possible
    }

    // Accepted steps whose decrease sits at the floating-point floor mean
    // the iterate cannot improve further at this precision; grinding on
    // would spend the whole iteration budget for nothing.
    if (value - value_new < 1e-13 * (1.0 + std::abs(value))) {
      ++stagnant;
    } else {
      stagnant = 0;
    }

    const Eigen::VectorXd grad_new = al.gradient(z_new);
    const Eigen::VectorXd s = z_new - z;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > opts.history) memory.pop_front();
    }
    z = std::move(z_new);
    value = value_new;
    grad = grad_new;
    pg = (z - box.clamp(z - grad)).lpNorm<Eigen::Infinity>();
    ++steps;
    if (stagnant >= 5) {
      return {std::move(z), value, pg, steps, true};
    }
  }
  return {std::move(z), value, pg, steps, false};
}

}  // namespace

Eigen::VectorXd finite_diff_gradient(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const Eigen::VectorXd& z, double base_step) {
  Eigen::VectorXd grad(z.size());
  Eigen::VectorXd zp = z, zm = z;
  for (int j = 0; j < z.size(); ++j) {
    const double h = base_step * (1.0 + std::abs(z[j]));
    zp[j] = z[j] + h;
    zm[j] = z[j] - h;
    grad[j] = (fn(zp) - fn(zm)) / (2.0 * h);
    zp[j] = z[j];
    zm[j] = z[j];
  }
  return grad;
}

SolveResult solve_nlp(const NlpProblem& problem, Eigen::VectorXd warm_start,
                      const NlpOptions& options) {
  if (!problem.bounds.well_formed() ||
      problem.bounds.dim() != problem.dim ||
      warm_start.size() != problem.dim) {
    throw InvalidArgumentError("solve_nlp: malformed bounds or warm start");
  }
  const Eigen::VectorXd z_ws = problem.bounds.clamp(warm_start);
  const double f_ws = problem.objective(z_ws);
  if (!std::isfinite(f_ws)) {
    throw InvalidArgumentError(
        "solve_nlp: objective is non-finite at the warm start");
  }
  const double v_ws = max_violation(problem, z_ws);
  const bool ws_feasible = v_ws <= problem.feasibility_tol;

  Augmented al{problem, Eigen::VectorXd(), options.penalty_init};
  if (problem.constraints) {
    al.multipliers =
        Eigen::VectorXd::Zero(problem.constraints(z_ws).size());
  }

  Eigen::VectorXd z = z_ws;
  int total_steps = 0;
  bool optimal = false;
  double last_pg = std::numeric_limits<double>::infinity();
  // Best feasible iterate seen, for the iteration-limit return.
  bool have_best = ws_feasible;
  Eigen::VectorXd z_best = z_ws;
  double f_best = f_ws;

  const int outer_rounds = problem.constraints ? options.max_outer : 1;
  double prev_violation = std::numeric_limits<double>::infinity();
  // Forcing sequence: early subproblems are solved loosely, the tolerance
  // tightens by a decade per round until it reaches optimality_tol.
  double inner_tol = problem.constraints
                         ? std::max(options.optimality_tol, 1e-2)
                         : options.optimality_tol;
  for (int outer = 0; outer < outer_rounds; ++outer) {
    InnerResult inner = minimize_inner(al, z, options, inner_tol);
    z = inner.z;
    last_pg = inner.projected_gradient;
    total_steps += inner.steps;

    const double violation = max_violation(problem, z);
    const double f_here = problem.objective(z);
    if (violation <= problem.feasibility_tol &&
        (!have_best || f_here < f_best)) {
      have_best = true;
      z_best = z;
      f_best = f_here;
    }
    // Converged: feasible and first-order optimal — or feasible and pinned
    // at the floating-point floor with the forcing schedule exhausted, in
    // which case no better iterate is reachable at this precision.
    const bool schedule_done = inner_tol <= 100.0 * options.optimality_tol;
    if (violation <= problem.feasibility_tol &&
        (last_pg <= options.optimality_tol ||
         (inner.stalled && schedule_done))) {
      optimal = true;
      break;
    }
    if (!problem.constraints) break;

    if (violation <= std::max(problem.feasibility_tol, 0.25 * prev_violation)) {
      const Eigen::VectorXd g = problem.constraints(z);
      al.multipliers = (al.multipliers + al.penalty * g).cwiseMax(0.0);
      prev_violation = violation;
    } else {
      al.penalty = std::min(al.penalty * options.penalty_growth,
                            options.penalty_max);
    }
    inner_tol = std::max(options.optimality_tol, 0.1 * inner_tol);
  }

  SolveResult result;
  result.iterations = total_steps;
  const double v_final = max_violation(problem, z);
  const double f_final = problem.objective(z);
  if (optimal) {
    result.z = z;
    result.objective_value = f_final;
    result.max_constraint_violation = v_final;
    result.status = SolveStatus::Converged;
  } else if (have_best) {
    result.z = z_best;
    result.objective_value = f_best;
    result.max_constraint_violation = max_violation(problem, z_best);
    result.status = SolveStatus::IterationLimit;
  } else {
    result.z = z;
    result.objective_value = f_final;
    result.max_constraint_violation = v_final;
    result.status = SolveStatus::IterationLimit;
  }

  // Dominance contract: a feasible warm start is never returned worse.
  if (ws_feasible &&
      (result.max_constraint_violation > problem.feasibility_tol ||
       result.objective_value > f_ws)) {
    result.z = z_ws;
    result.objective_value = f_ws;
    result.max_constraint_violation = v_ws;
    result.status = SolveStatus::FallbackWarmStart;
  }
  return result;
}

}  // namespace dmpc
