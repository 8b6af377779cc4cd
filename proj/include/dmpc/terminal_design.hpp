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

#ifndef DMPC_TERMINAL_DESIGN_HPP
#define DMPC_TERMINAL_DESIGN_HPP

#include <cstdint>
#include <vector>

#include "dmpc/cost.hpp"

namespace dmpc {

/// Knobs for the sampling-based terminal-set certification.
struct TerminalDesignOptions {
  double decrease_margin = 0.05;  ///< inflate P by (1 + margin) before use
  int num_samples = 10000;        ///< boundary samples per bisection level
  std::uint64_t seed = 0x5eedULL; ///< direction-sampling seed
  int jobs = 1;                   ///< worker threads for sample validation
};

/// Jacobians (A, B) of the *discrete* one-step map at the origin, by central
/// finite differences with step 1e-6.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize_at_origin(
    const PartitionedSystem& sys);

/// Fixed-point discrete Riccati iteration from P0 = Q.  Returns the
/// stabilizing solution; throws TerminalDesignError on divergence.
Eigen::MatrixXd solve_riccati(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              double tol = 1e-12, int max_iter = 100000);

/// Residual V_f(F(x, Kx)) + l(x, Kx) - V_f(x) of the terminal decrease
/// condition under the *nonlinear* discrete dynamics; feasible (certifying)
/// when <= 0.
double decrease_residual(const PartitionedSystem& sys,
                         const TerminalIngredients& term,
                         const Eigen::VectorXd& x);

/// Membership in X_f = { V_f <= alpha } ∩ X ∩ { Kx in U }.
bool in_terminal_set(const PartitionedSystem& sys,
                     const TerminalIngredients& term, const Eigen::VectorXd& x,
                     double tol = 0.0);

/// Largest certified level for { x'Px <= alpha }: bisection on alpha where a
/// level is accepted when every sampled boundary point satisfies the
/// nonlinear decrease condition, the state box and the input box under Kx.
/// The search starts from the exact geometric level at which the ellipsoid
/// first touches a state-box face or an input-box face under K, and the
/// accepted level is multiplied by a 0.95 safety factor.  Deterministic for
/// a fixed seed; requires num_samples >= 1000.
double estimate_alpha(const PartitionedSystem& sys, const Eigen::MatrixXd& K,
                      const Eigen::MatrixXd& P,
                      const TerminalDesignOptions& opts);

/// Full pipeline: linearize, Riccati, K, P <- (1 + margin) P_riccati,
/// alpha <- estimate_alpha.  Throws TerminalDesignError when no positive
/// alpha certifies.
TerminalIngredients design_terminal(const PartitionedSystem& sys,
                                    const TerminalDesignOptions& opts = {});

/// Uniform samples from { x'Px <= alpha } (direction-uniform, radius taking
/// the interior into account), filtered to X_f membership; deterministic for
/// a fixed seed.
std::vector<Eigen::VectorXd> sample_terminal_set(
    const PartitionedSystem& sys, const TerminalIngredients& term, int count,
    std::uint64_t seed);

}  // namespace dmpc

#endif  // DMPC_TERMINAL_DESIGN_HPP
