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

#include "dmpc/three_mass.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "dmpc/parallel.hpp"

namespace dmpc {

ThreeMassWeights ThreeMassWeights::defaults() {
  ThreeMassWeights w;
  w.state = Eigen::VectorXd(6);
  w.state << 2.0, 0.05, 2.0, 0.05, 2.0, 0.05;
  w.input = Eigen::VectorXd(3);
  w.input << 0.1, 1.0, 0.1;
  return w;
}

Eigen::VectorXd three_mass_field(const ThreeMassParams& p,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u) {
  const double r1 = x[0], v1 = x[1];
  const double r2 = x[2], v2 = x[3];
  const double r3 = x[4], v3 = x[5];
  Eigen::VectorXd dx(6);
  dx[0] = v1;
  dx[1] = (u[0] - p.k0 * r1 * std::exp(-r1) - p.hd * v1 -
           p.kc * (r1 - r2)) /
          p.mass1;
  dx[2] = v2;
  dx[3] = (u[1] - p.k0 * r2 * std::exp(-r2) - p.hd * v2 -
           p.kc * (r2 - r1) - p.kc * (r2 - r3)) /
          p.mass2;
  dx[4] = v3;
  dx[5] = (u[2] - p.k0 * r3 * std::exp(-r3) - p.hd * v3 -
           p.kc * (r3 - r2)) /
          p.mass3;
  return dx;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> three_mass_jacobian(
    const ThreeMassParams& p, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u) {
  (void)u;
  // d/dr [k0 r e^{-r}] = k0 e^{-r} (1 - r)
  const auto spring = [&p](double r) {
    return p.k0 * std::exp(-r) * (1.0 - r);
  };
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
  const double masses[3] = {p.mass1, p.mass2, p.mass3};
  for (int i = 0; i < 3; ++i) {
    const int r = 2 * i, v = 2 * i + 1;
    a(r, v) = 1.0;
    double stiffness = spring(x[r]) + p.kc;  // ground + one coupling
    if (i == 1) stiffness += p.kc;           // middle mass couples twice
    a(v, r) = -stiffness / masses[i];
    a(v, v) = -p.hd / masses[i];
    if (i > 0) a(v, r - 2) = p.kc / masses[i];
    if (i < 2) a(v, r + 2) = p.kc / masses[i];
    b(v, i) = 1.0 / masses[i];
  }
  return {a, b};
}

PartitionedSystem build_benchmark(const ThreeMassParams& params,
                                  const ThreeMassWeights& weights,
                                  const ThreeMassBounds& bounds,
                                  double sample_time,
                                  Discretization discretization) {
  if (weights.state.size() != 6 || weights.input.size() != 3) {
    throw InvalidArgumentError(
        "build_benchmark: weights must be sized 6 (state) and 3 (input)");
  }
  PartitionedSystem sys;
  const char* names[3] = {"mass1", "mass2", "mass3"};
  for (int i = 0; i < 3; ++i) {
    SubsystemSpec agent;
    agent.name = names[i];
    agent.state_dim = 2;
    agent.input_dim = 1;
    Eigen::VectorXd lo(2), hi(2);
    hi << bounds.position, bounds.velocity;
    lo = -hi;
    agent.state_box = BoxSet(lo, hi);
    agent.input_box = BoxSet::symmetric(1, bounds.input);
    agent.state_weight = weights.state.segment(2 * i, 2);
    agent.input_weight = weights.input.segment(i, 1);
    sys.subsystems.push_back(std::move(agent));
  }
  sys.field = [params](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return three_mass_field(params, x, u);
  };
  sys.field_jacobian = [params](const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
    return three_mass_jacobian(params, x, u);
  };
  sys.sample_time = sample_time;
  sys.discretization = discretization;
  sys.validate();
  return sys;
}

double jcc(const PartitionedSystem& sys,
           const std::vector<Eigen::VectorXd>& states,
           const std::vector<Eigen::VectorXd>& inputs) {
  if (states.size() != inputs.size() || states.empty()) {
    throw InvalidArgumentError(
        "jcc: need equally many states and inputs (one pair per stage)");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    total += stage_cost(sys, states[k], inputs[k]);
  }
  return total;
}

std::vector<SweepRow> run_sweep(const PartitionedSystem& sys,
                                const TerminalIngredients& term,
                                const SimulationOptions& base,
                                const SweepSpec& sweep, int jobs) {
  if (sweep.nc2_grid.empty() || sweep.nc3_grid.empty()) {
    throw InvalidArgumentError("run_sweep: empty grid");
  }
  const int cols = static_cast<int>(sweep.nc3_grid.size());
  const int total = static_cast<int>(sweep.nc2_grid.size()) * cols;
  std::vector<SweepRow> rows(total);
  std::vector<std::string> failures(total);

  parallel_for(total, jobs, [&](int idx) {
    const int nc2 = sweep.nc2_grid[idx / cols];
    const int nc3 = sweep.nc3_grid[idx % cols];
    SimulationOptions opts = base;
    opts.control_horizons = Eigen::Vector3i(sweep.nc1, nc2, nc3);
    opts.negotiation.prediction_horizon =
        std::max({sweep.nc1, nc2, nc3});
    opts.negotiation.jobs = 1;  // grid points are the parallel unit
    SweepRow row;
    row.nc2 = nc2;
    row.nc3 = nc3;
    try {
      const SimulationResult sim = simulate(sys, term, opts);
      row.jcc = sim.jcc;
      row.iterations = sim.total_iterations;
      row.wall_seconds = sim.wall_seconds;
    } catch (const std::exception& e) {
      failures[idx] = e.what();
    }
    rows[idx] = row;
  });

  for (int idx = 0; idx < total; ++idx) {
    if (!failures[idx].empty()) {
      throw ProtocolViolationError(
          "sweep point (nc2 = " + std::to_string(rows[idx].nc2) +
          ", nc3 = " + std::to_string(rows[idx].nc3) +
          ") failed: " + failures[idx]);
    }
  }
  return rows;
}

}  // namespace dmpc
