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

#ifndef DMPC_THREE_MASS_HPP
#define DMPC_THREE_MASS_HPP

#include <vector>

#include "dmpc/simulation.hpp"
#include "dmpc/system.hpp"

namespace dmpc {

/// Chain of three driven masses on nonlinear ground springs k0 r e^{-r},
/// linear couplings kc between neighbors and viscous damping hd.  State per
/// mass: (position r_i, velocity v_i); input per mass: force u_i.
struct ThreeMassParams {
  double mass1 = 1.5;  ///< kg
  double mass2 = 2.0;  ///< kg
  double mass3 = 1.0;  ///< kg
  double k0 = 1.1;     ///< N/m, nonlinear ground-spring coefficient
  double kc = 0.25;    ///< N/m, neighbor coupling
  double hd = 0.3;     ///< N s/m, damping
};

struct ThreeMassWeights {
  Eigen::VectorXd state;  ///< diag(Q), size 6; default (2, .05, 2, .05, 2, .05)
  Eigen::VectorXd input;  ///< diag(R), size 3; default (.1, 1, .1)

  static ThreeMassWeights defaults();
};

struct ThreeMassBounds {
  double position = 5.0;  ///< |r_i| bound, m
  double velocity = 2.0;  ///< |v_i| bound, m/s
  double input = 1.5;     ///< |u_i| bound, N
};

/// Continuous-time derivative of the chain at (x, u),
/// x = (r1, v1, r2, v2, r3, v3).
Eigen::VectorXd three_mass_field(const ThreeMassParams& p,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& u);

/// Analytic Jacobians (df/dx, df/du) of the field.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> three_mass_jacobian(
    const ThreeMassParams& p, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u);

/// Three single-mass agents assembled into a PartitionedSystem with the
/// chain dynamics, sample time 0.15 s and RK4 by default.
PartitionedSystem build_benchmark(
    const ThreeMassParams& params = {},
    const ThreeMassWeights& weights = ThreeMassWeights::defaults(),
    const ThreeMassBounds& bounds = {}, double sample_time = 0.15,
    Discretization discretization = Discretization::RK4);

/// Closed-loop performance index: sum of stage costs over k = 0..T_sim
/// inclusive (no terminal term).  Both sequences must have T_sim + 1
/// entries.
double jcc(const PartitionedSystem& sys,
           const std::vector<Eigen::VectorXd>& states,
           const std::vector<Eigen::VectorXd>& inputs);

/// Horizon-sweep experiment: one fixed-horizon closed-loop run per
/// (N_c2, N_c3) grid point with N_c1 fixed and N_p = max_i N_c,i.
struct SweepSpec {
  int nc1 = 10;
  std::vector<int> nc2_grid;
  std::vector<int> nc3_grid;
};

struct SweepRow {
  int nc2 = 0;
  int nc3 = 0;
  double jcc = 0.0;
  long iterations = 0;
  double wall_seconds = 0.0;
};

/// Rows ordered by (nc2, nc3) grid position regardless of job count; grid
/// points run with independent state.  Errors carry the grid coordinates.
std::vector<SweepRow> run_sweep(const PartitionedSystem& sys,
                                const TerminalIngredients& term,
                                const SimulationOptions& base,
                                const SweepSpec& sweep, int jobs = 1);

}  // namespace dmpc

#endif  // DMPC_THREE_MASS_HPP
