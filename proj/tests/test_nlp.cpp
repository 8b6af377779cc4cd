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

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "dmpc/nlp.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace dmpc;

namespace {

/// Convex QP  min 1/2 z'Hz + c'z  over a box with one linear inequality
/// a'z <= b.
struct BoxQp {
  MatrixXd H;
  VectorXd c;
  VectorXd a;
  double b = 0.0;
  int dim = 0;

  double value(const VectorXd& z) const {
    return 0.5 * z.dot(H * z) + c.dot(z);
  }

  NlpProblem problem() const {
    NlpProblem p;
    p.dim = dim;
    p.bounds = BoxSet::symmetric(dim, 1.0);
    p.objective = [*this](const VectorXd& z) { return value(z); };
    p.objective_grad = [*this](const VectorXd& z) {
      return VectorXd(H * z + c);
    };
    p.constraints = [*this](const VectorXd& z) {
      return VectorXd::Constant(1, a.dot(z) - b).eval();
    };
    p.constraint_vjp = [*this](const VectorXd&, const VectorXd& w) {
      return VectorXd(a * w[0]);
    };
    p.feasibility_tol = 1e-8;
    return p;
  }
};

BoxQp random_qp(int dim, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BoxQp qp;
  qp.dim = dim;
  MatrixXd M(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) M(i, j) = unit(rng);
  qp.H = M.transpose() * M + 0.1 * MatrixXd::Identity(dim, dim);
  qp.c.resize(dim);
  qp.a.resize(dim);
  for (int i = 0; i < dim; ++i) qp.c[i] = unit(rng);
  for (int i = 0; i < dim; ++i) qp.a[i] = unit(rng);
  // Keep the box/halfspace intersection nonempty: the box vertex minimizing
  // a'z attains -sum |a_i|, so any b above that leaves feasible points.
  const double lo = -qp.a.cwiseAbs().sum();
  qp.b = lo + (0.25 + 0.5 * (unit(rng) * 0.5 + 0.5)) * (-lo + 0.5);
  return qp;
}

/// Exact minimizer by enumerating every box/inequality active set: the
/// combination active at the true optimum yields it, and every other
/// feasible candidate scores no better, so the best feasible candidate is
/// the global minimum of this strictly convex program.
double enumerate_optimum(const BoxQp& qp, VectorXd* arg = nullptr) {
  const int n = qp.dim;
  double best = std::numeric_limits<double>::infinity();
  VectorXd best_z;
  std::vector<int> state(n, 0);  // 0 free, 1 at lower, 2 at upper
  const int combos = static_cast<int>(std::pow(3, n));
  for (int code = 0; code < combos; ++code) {
    int rem = code;
    for (int i = 0; i < n; ++i) {
      state[i] = rem % 3;
      rem /= 3;
    }
    for (int ineq_active = 0; ineq_active < 2; ++ineq_active) {
      std::vector<int> free_idx;
      VectorXd z = VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) {
        if (state[i] == 0) {
          free_idx.push_back(i);
        } else {
          z[i] = state[i] == 1 ? -1.0 : 1.0;
        }
      }
      const int f = static_cast<int>(free_idx.size());
      const int rows = f + ineq_active;
      if (rows > 0) {
        MatrixXd kkt = MatrixXd::Zero(rows, rows);
        VectorXd rhs = VectorXd::Zero(rows);
        for (int r = 0; r < f; ++r) {
          for (int cidx = 0; cidx < f; ++cidx) {
            kkt(r, cidx) = qp.H(free_idx[r], free_idx[cidx]);
          }
          double fixed_term = 0.0;
          for (int i = 0; i < n; ++i) {
            if (state[i] != 0) fixed_term += qp.H(free_idx[r], i) * z[i];
          }
          rhs[r] = -qp.c[free_idx[r]] - fixed_term;
          if (ineq_active) {
            kkt(r, f) = qp.a[free_idx[r]];
            kkt(f, r) = qp.a[free_idx[r]];
          }
        }
        if (ineq_active) {
          double fixed_a = 0.0;
          for (int i = 0; i < n; ++i) {
            if (state[i] != 0) fixed_a += qp.a[i] * z[i];
          }
          rhs[f] = qp.b - fixed_a;
        }
        const VectorXd sol = kkt.fullPivLu().solve(rhs);
        if ((kkt * sol - rhs).cwiseAbs().maxCoeff() > 1e-8) continue;
        for (int r = 0; r < f; ++r) z[free_idx[r]] = sol[r];
      } else if (ineq_active) {
        continue;  // no free variable can meet an active inequality
      }
      // Primal feasibility of the candidate.
      if (z.cwiseAbs().maxCoeff() > 1.0 + 1e-10) continue;
      if (qp.a.dot(z) - qp.b > 1e-10) continue;
      const double val = qp.value(z);
      if (val < best) {
        best = val;
        best_z = z;
      }
    }
  }
  REQUIRE(std::isfinite(best));
  if (arg) *arg = best_z;
  return best;
}

}  // namespace

TEST_CASE("box projection clips the unconstrained minimizer") {
  NlpProblem p;
  p.dim = 1;
  p.bounds = BoxSet(VectorXd::Zero(1), VectorXd::Ones(1));
  p.objective = [](const VectorXd& z) {
    return (z[0] - 3.0) * (z[0] - 3.0);
  };
  const SolveResult res = solve_nlp(p, VectorXd::Zero(1));
  CHECK(res.status == SolveStatus::Converged);
  CHECK(res.z[0] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("linear inequality activates at the known kkt point") {
  NlpProblem p;
  p.dim = 2;
  p.bounds = BoxSet::unbounded(2);
  p.objective = [](const VectorXd& z) {
    return (z[0] - 1.0) * (z[0] - 1.0) + (z[1] - 1.0) * (z[1] - 1.0);
  };
  p.objective_grad = [](const VectorXd& z) {
    return VectorXd(2.0 * (z.array() - 1.0).matrix());
  };
  p.constraints = [](const VectorXd& z) {
    return VectorXd::Constant(1, z[0] + z[1] - 1.0).eval();
  };
  p.constraint_vjp = [](const VectorXd&, const VectorXd& w) {
    return VectorXd(VectorXd::Ones(2) * w[0]);
  };
  const SolveResult res = solve_nlp(p, VectorXd::Zero(2));
  CHECK(res.max_constraint_violation <= 1e-6);
  CHECK(res.z[0] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(res.z[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("random box qps match the active-set enumeration oracle") {
  for (int dim = 2; dim <= 5; ++dim) {
    for (unsigned seed = 1; seed <= 3; ++seed) {
      CAPTURE(dim);
      CAPTURE(seed);
      const BoxQp qp = random_qp(dim, 1000 * dim + seed);
      VectorXd z_star;
      const double f_star = enumerate_optimum(qp, &z_star);
      const SolveResult res = solve_nlp(qp.problem(), VectorXd::Zero(dim));
      CHECK(res.max_constraint_violation <= 1e-8);
      CHECK(std::abs(res.objective_value - f_star) <=
            1e-5 * (1.0 + std::abs(f_star)));
      CHECK((res.z - z_star).cwiseAbs().maxCoeff() <= 1e-2);
    }
  }
}

TEST_CASE("solves are bitwise deterministic") {
  const BoxQp qp = random_qp(4, 77);
  const SolveResult a = solve_nlp(qp.problem(), VectorXd::Zero(4));
  const SolveResult b = solve_nlp(qp.problem(), VectorXd::Zero(4));
  CHECK(a.z == b.z);
  CHECK(a.objective_value == b.objective_value);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("a feasible warm start is never returned worse") {
  // Convex and nonconvex cases: the returned point must stay feasible and
  // must not exceed the warm start's objective.
  struct Case {
    NlpProblem problem;
    VectorXd warm;
  };
  std::vector<Case> cases;

  {
    // Tilted double well, unconstrained: basins at roughly -1 and +1.
    NlpProblem p;
    p.dim = 1;
    p.bounds = BoxSet::symmetric(1, 3.0);
    p.objective = [](const VectorXd& z) {
      const double q = z[0] * z[0] - 1.0;
      return q * q + 0.1 * z[0];
    };
    cases.push_back({p, VectorXd::Constant(1, 1.2)});
    cases.push_back({p, VectorXd::Constant(1, -0.9)});
  }
  {
    // Nonconvex feasible set |z| >= 1 with a quadratic pulling inward.
    NlpProblem p;
    p.dim = 1;
    p.bounds = BoxSet::symmetric(1, 3.0);
    p.objective = [](const VectorXd& z) {
      return (z[0] - 0.5) * (z[0] - 0.5);
    };
    p.constraints = [](const VectorXd& z) {
      return VectorXd::Constant(1, 1.0 - z[0] * z[0]).eval();
    };
    cases.push_back({p, VectorXd::Constant(1, -1.0)});
    cases.push_back({p, VectorXd::Constant(1, 1.5)});
  }
  {
    // Feasible warm start on a constrained QP.
    const BoxQp qp = random_qp(3, 5);
    NlpProblem p = qp.problem();
    cases.push_back({p, VectorXd::Constant(3, -1.0)});
  }

  for (size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    const auto& c = cases[i];
    const VectorXd ws = c.problem.bounds.clamp(c.warm);
    double ws_violation = 0.0;
    if (c.problem.constraints) {
      ws_violation = std::max(0.0, c.problem.constraints(ws).maxCoeff());
    }
    if (ws_violation > c.problem.feasibility_tol) continue;  // not a warm case
    const double f_ws = c.problem.objective(ws);
    const SolveResult res = solve_nlp(c.problem, c.warm);
    CHECK(res.max_constraint_violation <= c.problem.feasibility_tol);
    CHECK(res.objective_value <= f_ws + 1e-12);
  }
}

TEST_CASE("non-finite objective at the warm start is rejected") {
  NlpProblem p;
  p.dim = 1;
  p.bounds = BoxSet::symmetric(1, 2.0);
  p.objective = [](const VectorXd& z) { return std::log(z[0]); };
  CHECK_THROWS_AS(solve_nlp(p, VectorXd::Zero(1)), InvalidArgumentError);
}

TEST_CASE("malformed bounds or warm start dimensions are rejected") {
  NlpProblem p;
  p.dim = 2;
  p.bounds = BoxSet::symmetric(1, 1.0);  // wrong dimension
  p.objective = [](const VectorXd& z) { return z.squaredNorm(); };
  CHECK_THROWS_AS(solve_nlp(p, VectorXd::Zero(2)), InvalidArgumentError);

  p.bounds = BoxSet::symmetric(2, 1.0);
  CHECK_THROWS_AS(solve_nlp(p, VectorXd::Zero(3)), InvalidArgumentError);
}

TEST_CASE("finite differences match an analytic gradient") {
  auto fn = [](const VectorXd& z) {
    return std::sin(z[0]) * std::exp(0.5 * z[1]) + z[0] * z[0] * z[1];
  };
  VectorXd z(2);
  z << 0.7, -0.3;
  VectorXd exact(2);
  exact[0] = std::cos(z[0]) * std::exp(0.5 * z[1]) + 2.0 * z[0] * z[1];
  exact[1] = 0.5 * std::sin(z[0]) * std::exp(0.5 * z[1]) + z[0] * z[0];
  const VectorXd fd = finite_diff_gradient(fn, z);
  CHECK((fd - exact).cwiseAbs().maxCoeff() <= 1e-8);
}
