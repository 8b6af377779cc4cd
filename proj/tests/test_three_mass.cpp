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
#include <vector>

#include <doctest.h>

#include "dmpc/terminal_design.hpp"
#include "dmpc/three_mass.hpp"

using Eigen::VectorXd;
using Eigen::VectorXi;
using namespace dmpc;

namespace {

VectorXd benchmark_x0() {
  VectorXd x0(6);
  x0 << 0.8, 0.0, -0.6, 0.0, 1.0, 0.0;
  return x0;
}

/// Total mechanical energy of the chain: kinetic + ground-spring potential
/// (the exact integral of k0 r e^{-r}) + coupling potential.
double chain_energy(const ThreeMassParams& p, const VectorXd& x) {
  const double masses[3] = {p.mass1, p.mass2, p.mass3};
  double e = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double r = x[2 * i];
    const double v = x[2 * i + 1];
    e += 0.5 * masses[i] * v * v;
    e += p.k0 * (1.0 - std::exp(-r) * (1.0 + r));
  }
  const double d12 = x[0] - x[2];
  const double d23 = x[2] - x[4];
  e += 0.5 * p.kc * d12 * d12 + 0.5 * p.kc * d23 * d23;
  return e;
}

}  // namespace

TEST_CASE("field matches hand arithmetic at a unit displacement") {
  const ThreeMassParams p;
  VectorXd x = VectorXd::Zero(6);
  x[0] = 1.0;  // mass 1 displaced by one meter, everything else at rest
  const VectorXd u = VectorXd::Zero(3);
  const VectorXd dx = three_mass_field(p, x, u);
  CHECK(dx[0] == 0.0);  // rdot1 = v1
  // m1 vdot1 = -k0 * 1 * e^{-1} - kc * (1 - 0)
  const double expected1 = (-1.1 * std::exp(-1.0) - 0.25) / 1.5;
  CHECK(dx[1] == doctest::Approx(expected1).epsilon(1e-15));
  CHECK(dx[2] == 0.0);
  // m2 vdot2 = -kc * (0 - 1) = +0.25
  CHECK(dx[3] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(dx[4] == 0.0);
  CHECK(dx[5] == 0.0);  // mass 3 feels only its neighbor, which is at rest
}

TEST_CASE("input forces scale by the inverse masses") {
  const ThreeMassParams p;
  const VectorXd x = VectorXd::Zero(6);
  VectorXd u(3);
  u << 1.5, 1.0, -0.5;
  const VectorXd dx = three_mass_field(p, x, u);
  CHECK(dx[1] == doctest::Approx(1.5 / 1.5).epsilon(1e-15));
  CHECK(dx[3] == doctest::Approx(1.0 / 2.0).epsilon(1e-15));
  CHECK(dx[5] == doctest::Approx(-0.5 / 1.0).epsilon(1e-15));
}

TEST_CASE("analytic field jacobian matches central differences") {
  const ThreeMassParams p;
  VectorXd x(6);
  x << 0.8, 0.1, -0.6, -0.2, 1.0, 0.3;
  VectorXd u(3);
  u << 0.5, -0.7, 0.2;
  const auto [A, B] = three_mass_jacobian(p, x, u);

  const double h = 1e-6;
  Eigen::MatrixXd A_fd(6, 6), B_fd(6, 3);
  for (int j = 0; j < 6; ++j) {
    VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    A_fd.col(j) =
        (three_mass_field(p, xp, u) - three_mass_field(p, xm, u)) / (2.0 * h);
  }
  for (int j = 0; j < 3; ++j) {
    VectorXd up = u, um = u;
    up[j] += h;
    um[j] -= h;
    B_fd.col(j) =
        (three_mass_field(p, x, up) - three_mass_field(p, x, um)) / (2.0 * h);
  }
  CHECK((A - A_fd).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK((B - B_fd).cwiseAbs().maxCoeff() <= 1e-7);
}

TEST_CASE("the linear part of the field is odd in (x, u)") {
  ThreeMassParams p;
  p.k0 = 0.0;  // remove the only even term (the nonlinear ground spring)
  VectorXd x(6);
  x << 0.8, 0.1, -0.6, -0.2, 1.0, 0.3;
  VectorXd u(3);
  u << 0.5, -0.7, 0.2;
  const VectorXd forward = three_mass_field(p, x, u);
  const VectorXd mirrored = three_mass_field(p, VectorXd(-x), VectorXd(-u));
  for (int i = 0; i < 6; ++i) CHECK(mirrored[i] == -forward[i]);
}

TEST_CASE("unforced motion dissipates mechanical energy") {
  const ThreeMassParams params;
  auto sys = build_benchmark();
  VectorXd x = benchmark_x0();
  const VectorXd u = VectorXd::Zero(3);
  double energy = chain_energy(params, x);
  const double e0 = energy;
  for (int k = 0; k < 60; ++k) {
    x = discretize_step(sys, x, u);
    const double next = chain_energy(params, x);
    CHECK(next <= energy + 1e-7);
    energy = next;
  }
  CHECK(energy < 0.5 * e0);
}

TEST_CASE("benchmark assembly exposes the pinned dimensions and bounds") {
  auto sys = build_benchmark();
  CHECK(sys.num_agents() == 3);
  CHECK(sys.state_dim() == 6);
  CHECK(sys.input_dim() == 3);
  CHECK(sys.sample_time == 0.15);
  CHECK(sys.discretization == Discretization::RK4);
  CHECK(sys.subsystems[0].name == "mass1");
  CHECK(sys.global_input_box().upper[0] == 1.5);
  CHECK(sys.global_state_box().upper[0] == 5.0);
  CHECK(sys.global_state_box().upper[1] == 2.0);
  const VectorXd q = sys.global_state_weight();
  CHECK(q[0] == 2.0);
  CHECK(q[1] == 0.05);
  const VectorXd r = sys.global_input_weight();
  CHECK(r[0] == 0.1);
  CHECK(r[1] == 1.0);
  CHECK_NOTHROW(sys.validate());
}

TEST_CASE("closed-loop cost sums stage costs over equal-length records") {
  auto sys = build_benchmark();
  std::vector<VectorXd> states = {benchmark_x0(),
                                  VectorXd::Zero(6)};
  std::vector<VectorXd> inputs = {VectorXd::Constant(3, 0.5),
                                  VectorXd::Zero(3)};
  const double expected = stage_cost(sys, states[0], inputs[0]) +
                          stage_cost(sys, states[1], inputs[1]);
  CHECK(jcc(sys, states, inputs) == doctest::Approx(expected).epsilon(1e-15));

  std::vector<VectorXd> short_inputs = {VectorXd::Zero(3)};
  CHECK_THROWS_AS(jcc(sys, states, short_inputs), InvalidArgumentError);
}

TEST_CASE("short closed loop is feasible, monotone and self-consistent") {
  auto sys = build_benchmark();
  TerminalDesignOptions topt;
  const TerminalIngredients term = design_terminal(sys, topt);

  SimulationOptions opts;
  opts.initial_state = benchmark_x0();
  opts.steps = 2;
  opts.control_horizons = VectorXi(3);
  opts.control_horizons << 6, 8, 10;
  opts.negotiation.prediction_horizon = 10;
  opts.negotiation.max_iterations = 8;

  const SimulationResult res = simulate(sys, term, opts);
  CHECK(res.states.size() == 3);
  CHECK(res.inputs.size() == 3);
  CHECK(res.traces.size() == 3);
  CHECK(res.initial_horizons.size() == 3);
  CHECK(res.monotonicity_violations == 0);
  CHECK(res.max_feasibility_violation <= opts.negotiation.feasibility_tol);
  CHECK(res.jcc == jcc(sys, res.states, res.inputs));
  // Each recorded state advances by the recorded input.
  for (int k = 0; k + 1 < 3; ++k) {
    CHECK(res.states[k + 1] == discretize_step(sys, res.states[k],
                                               res.inputs[k]));
  }
  CHECK(res.total_iterations >= 3);
  CHECK(!res.local_solve_seconds.empty());
}

TEST_CASE("adaptive horizons stay within range in closed loop") {
  auto sys = build_benchmark();
  TerminalDesignOptions topt;
  const TerminalIngredients term = design_terminal(sys, topt);

  SimulationOptions opts;
  opts.initial_state = benchmark_x0();
  opts.steps = 2;
  opts.control_horizons = VectorXi(3);
  opts.control_horizons << 6, 8, 10;
  opts.negotiation.prediction_horizon = 10;
  opts.negotiation.max_iterations = 8;
  opts.negotiation.adapt_horizons = true;
  opts.negotiation.nc0_update = Nc0Update::MeanOfPreviousStep;

  const SimulationResult res = simulate(sys, term, opts);
  CHECK(res.monotonicity_violations == 0);
  REQUIRE(res.initial_horizons.size() == 3);
  for (const auto& nc : res.initial_horizons) {
    CHECK(nc.minCoeff() >= 1);
    CHECK(nc.maxCoeff() <= 10);
  }
}

TEST_CASE("sweep rows come back in grid order and reproduce direct runs") {
  auto sys = build_benchmark();
  TerminalDesignOptions topt;
  const TerminalIngredients term = design_terminal(sys, topt);

  SimulationOptions base;
  base.initial_state = benchmark_x0();
  base.steps = 3;
  base.negotiation.max_iterations = 8;

  SweepSpec spec;
  spec.nc1 = 10;
  spec.nc2_grid = {8, 10};
  spec.nc3_grid = {8, 10};
  const auto rows = run_sweep(sys, term, base, spec);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].nc2 == 8);
  CHECK(rows[0].nc3 == 8);
  CHECK(rows[1].nc2 == 8);
  CHECK(rows[1].nc3 == 10);
  CHECK(rows[2].nc2 == 10);
  CHECK(rows[2].nc3 == 8);
  CHECK(rows[3].nc2 == 10);
  CHECK(rows[3].nc3 == 10);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.jcc));
    CHECK(row.jcc > 0.0);
    CHECK(row.iterations > 0);
    CHECK(row.wall_seconds > 0.0);
  }

  // A single-point sweep is exactly the direct closed-loop run.
  SweepSpec single;
  single.nc1 = 10;
  single.nc2_grid = {8};
  single.nc3_grid = {8};
  const auto one = run_sweep(sys, term, base, single);
  REQUIRE(one.size() == 1);

  SimulationOptions direct = base;
  direct.control_horizons = VectorXi(3);
  direct.control_horizons << 10, 8, 8;
  direct.negotiation.prediction_horizon = 10;
  direct.negotiation.jobs = 1;
  const SimulationResult ref = simulate(sys, term, direct);
  CHECK(one[0].jcc == ref.jcc);
  CHECK(one[0].iterations == ref.total_iterations);
}
