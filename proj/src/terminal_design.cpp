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

#include "dmpc/terminal_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>

#include "dmpc/parallel.hpp"

namespace dmpc {

namespace {

constexpr double kAlphaCap = 1e12;       // level used when no box limits alpha
constexpr double kAlphaFloor = 1e-12;    // below this, the design has failed

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& p) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw TerminalDesignError("terminal design: P is not positive definite");
  }
  return eig.eigenvectors() *
         eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         eig.eigenvectors().transpose();
}

/// Unit directions on the state sphere, drawn once per call.
std::vector<Eigen::VectorXd> draw_directions(int n, int count,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::VectorXd> dirs(count);
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd g(n);
    do {
      for (int d = 0; d < n; ++d) g[d] = gauss(rng);
    } while (g.norm() < 1e-12);
    dirs[s] = g / g.norm();
  }
  return dirs;
}

/// Exact level at which the ellipsoid {x'Px <= a} first leaves a state-box
/// face or an input-box face under u = Kx: max over the ellipsoid of c'x is
/// sqrt(a * c' P^-1 c).  Infinite when nothing binds.
double geometric_bracket(const PartitionedSystem& sys, const Eigen::MatrixXd& K,
                         const Eigen::MatrixXd& p_inv) {
  double bracket = std::numeric_limits<double>::infinity();
  auto face_limit = [&bracket](double bound, double support) {
    if (!std::isfinite(bound) || support <= 1e-300) return;
    bracket = std::min(bracket, bound * bound / support);
  };
  const BoxSet xbox = sys.global_state_box();
  for (int d = 0; d < xbox.dim(); ++d) {
    const double support = p_inv(d, d);
    face_limit(xbox.upper[d], support);
    face_limit(xbox.lower[d], support);
  }
  const BoxSet ubox = sys.global_input_box();
  for (int r = 0; r < K.rows(); ++r) {
    const double support = K.row(r) * p_inv * K.row(r).transpose();
    face_limit(ubox.upper[r], support);
    face_limit(ubox.lower[r], support);
  }
  return bracket;
}

}  // namespace

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearize_at_origin(
    const PartitionedSystem& sys) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(m);
  if (sys.field(x0, u0).lpNorm<Eigen::Infinity>() > 1e-10) {
    throw TerminalDesignError(
        "terminal design: origin is not an equilibrium of the field");
  }
  const double h = 1e-6;
  Eigen::MatrixXd a(n, n);
  Eigen::MatrixXd b(n, m);
  Eigen::VectorXd e = x0;
  for (int j = 0; j < n; ++j) {
    e[j] = h;
    const Eigen::VectorXd fp = discretize_step(sys, e, u0);
    e[j] = -h;
    const Eigen::VectorXd fm = discretize_step(sys, e, u0);
    e[j] = 0.0;
    a.col(j) = (fp - fm) / (2.0 * h);
  }
  Eigen::VectorXd eu = u0;
  for (int j = 0; j < m; ++j) {
    eu[j] = h;
    const Eigen::VectorXd fp = discretize_step(sys, x0, eu);
    eu[j] = -h;
    const Eigen::VectorXd fm = discretize_step(sys, x0, eu);
    eu[j] = 0.0;
    b.col(j) = (fp - fm) / (2.0 * h);
  }
  return {a, b};
}

Eigen::MatrixXd solve_riccati(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                              const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                              double tol, int max_iter) {
  Eigen::MatrixXd p = Q;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::MatrixXd btp = B.transpose() * p;
    const Eigen::MatrixXd gain_den = R + btp * B;
    const Eigen::MatrixXd next =
        Q + A.transpose() * p * A -
        A.transpose() * p * B * gain_den.ldlt().solve(btp * A);
    const double delta = (next - p).cwiseAbs().maxCoeff();
    const double scale = 1.0 + next.cwiseAbs().maxCoeff();
    p = 0.5 * (next + next.transpose());  // keep symmetric against round-off
    if (!p.allFinite() || p.cwiseAbs().maxCoeff() > 1e14) {
      throw TerminalDesignError(
          "terminal design: Riccati iteration diverged (unstabilizable "
          "linearization)");
    }
    if (delta <= tol * scale) return p;
  }
  throw TerminalDesignError(
      "terminal design: Riccati iteration did not converge (unstabilizable "
      "linearization)");
}

double decrease_residual(const PartitionedSystem& sys,
                         const TerminalIngredients& term,
                         const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = term.control(x);
  const Eigen::VectorXd next = discretize_step(sys, x, u);
  return term.vf(next) + stage_cost(sys, x, u) - term.vf(x);
}

bool in_terminal_set(const PartitionedSystem& sys,
                     const TerminalIngredients& term, const Eigen::VectorXd& x,
                     double tol) {
  if (term.vf(x) > term.alpha + tol) return false;
  if (sys.global_state_box().violation(x) > tol) return false;
  return sys.global_input_box().violation(term.control(x)) <= tol;
}

double estimate_alpha(const PartitionedSystem& sys, const Eigen::MatrixXd& K,
                      const Eigen::MatrixXd& P,
                      const TerminalDesignOptions& opts) {
  if (opts.num_samples < 1000) {
    throw InvalidArgumentError("estimate_alpha: need at least 1000 samples");
  }
  const int n = sys.state_dim();
  const Eigen::MatrixXd p_inv_sqrt = inverse_sqrt(P);
  const Eigen::MatrixXd p_inv = p_inv_sqrt * p_inv_sqrt;

  double bracket = geometric_bracket(sys, K, p_inv);
  if (!std::isfinite(bracket)) bracket = kAlphaCap;

  // Boundary points at level 1; scaled by sqrt(level) during the search.
  const std::vector<Eigen::VectorXd> dirs =
      draw_directions(n, opts.num_samples, opts.seed);
  std::vector<Eigen::VectorXd> boundary(dirs.size());
  for (std::size_t s = 0; s < dirs.size(); ++s) {
    boundary[s] = p_inv_sqrt * dirs[s];
  }

  const BoxSet xbox = sys.global_state_box();
  const BoxSet ubox = sys.global_input_box();
  std::vector<char> ok(boundary.size());
  auto accept = [&](double level) {
    const double radius = std::sqrt(level);
    TerminalIngredients cand{K, P, level};
    parallel_for(static_cast<int>(boundary.size()), opts.jobs, [&](int s) {
      const Eigen::VectorXd x = radius * boundary[s];
      ok[s] = xbox.violation(x) <= 0.0 &&
              ubox.violation(K * x) <= 0.0 &&
              decrease_residual(sys, cand, x) <= 0.0;
    });
    return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
  };

  if (accept(bracket)) return 0.95 * bracket;
  double lo = 0.0, hi = bracket;
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (accept(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (lo <= kAlphaFloor) {
    throw TerminalDesignError(
        "terminal design failed: no positive level certifies the decrease "
        "condition and box membership on the sampled boundary");
  }
  return 0.95 * lo;
}

TerminalIngredients design_terminal(const PartitionedSystem& sys,
                                    const TerminalDesignOptions& opts) {
  sys.validate();
  auto [a, b] = linearize_at_origin(sys);
  const Eigen::MatrixXd q = sys.global_state_weight().asDiagonal();
  const Eigen::MatrixXd r = sys.global_input_weight().asDiagonal();
  const Eigen::MatrixXd p_ric = solve_riccati(a, b, q, r);
  const Eigen::MatrixXd gain_den = r + b.transpose() * p_ric * b;
  TerminalIngredients term;
  term.gain = -gain_den.ldlt().solve(b.transpose() * p_ric * a);
  term.weight = (1.0 + opts.decrease_margin) * p_ric;
  term.alpha = estimate_alpha(sys, term.gain, term.weight, opts);
  term.validate();
  return term;
}

std::vector<Eigen::VectorXd> sample_terminal_set(
    const PartitionedSystem& sys, const TerminalIngredients& term, int count,
    std::uint64_t seed) {
  const int n = sys.state_dim();
  const Eigen::MatrixXd p_inv_sqrt = inverse_sqrt(term.weight);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> samples;
  samples.reserve(count);
  const long max_attempts = 1000L * count;
  long attempts = 0;
  while (static_cast<int>(samples.size()) < count) {
    if (++attempts > max_attempts) {
      throw TerminalDesignError(
          "sample_terminal_set: rejection sampling failed to fill the "
          "request (terminal set nearly empty)");
    }
    Eigen::VectorXd g(n);
    for (int d = 0; d < n; ++d) g[d] = gauss(rng);
    const double norm = g.norm();
    if (norm < 1e-12) continue;
    // Direction uniform on the sphere, radius with the volume-correct law.
    const double radius =
        std::sqrt(term.alpha) * std::pow(unit(rng), 1.0 / n);
    const Eigen::VectorXd x = radius / norm * (p_inv_sqrt * g);
    if (in_terminal_set(sys, term, x, 0.0)) samples.push_back(x);
  }
  return samples;
}

}  // namespace dmpc
