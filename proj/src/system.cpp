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

#include "dmpc/system.hpp"

#include <cmath>
#include <utility>

namespace dmpc {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgumentError(what);
}

/// Central-difference Jacobians of the continuous field when no analytic
/// callback is available.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> field_jacobian_fd(
    const PartitionedSystem& sys, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(u.size());
  Eigen::MatrixXd fx(n, n);
  Eigen::MatrixXd fu(n, m);
  Eigen::VectorXd xp = x, xm = x, up = u, um = u;
  for (int j = 0; j < n; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(x[j]));
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    fx.col(j) = (sys.field(xp, u) - sys.field(xm, u)) / (2.0 * h);
    xp[j] = x[j];
    xm[j] = x[j];
  }
  for (int j = 0; j < m; ++j) {
    const double h = 1e-6 * (1.0 + std::abs(u[j]));
    up[j] = u[j] + h;
    um[j] = u[j] - h;
    fu.col(j) = (sys.field(x, up) - sys.field(x, um)) / (2.0 * h);
    up[j] = u[j];
    um[j] = u[j];
  }
  return {fx, fu};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> eval_field_jacobian(
    const PartitionedSystem& sys, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u) {
  if (sys.field_jacobian) return sys.field_jacobian(x, u);
  return field_jacobian_fd(sys, x, u);
}

}  // namespace

int PartitionedSystem::state_dim() const {
  int n = 0;
  for (const auto& s : subsystems) n += s.state_dim;
  return n;
}

int PartitionedSystem::input_dim() const {
  int m = 0;
  for (const auto& s : subsystems) m += s.input_dim;
  return m;
}

int PartitionedSystem::state_offset(int agent) const {
  int off = 0;
  for (int i = 0; i < agent; ++i) off += subsystems[i].state_dim;
  return off;
}

int PartitionedSystem::input_offset(int agent) const {
  int off = 0;
  for (int i = 0; i < agent; ++i) off += subsystems[i].input_dim;
  return off;
}

BoxSet PartitionedSystem::global_state_box() const {
  BoxSet box(Eigen::VectorXd(0), Eigen::VectorXd(0));
  for (const auto& s : subsystems) box = BoxSet::stacked(box, s.state_box);
  return box;
}

BoxSet PartitionedSystem::global_input_box() const {
  BoxSet box(Eigen::VectorXd(0), Eigen::VectorXd(0));
  for (const auto& s : subsystems) box = BoxSet::stacked(box, s.input_box);
  return box;
}

Eigen::VectorXd PartitionedSystem::global_state_weight() const {
  Eigen::VectorXd w(state_dim());
  int off = 0;
  for (const auto& s : subsystems) {
    w.segment(off, s.state_dim) = s.state_weight;
    off += s.state_dim;
  }
  return w;
}

Eigen::VectorXd PartitionedSystem::global_input_weight() const {
  Eigen::VectorXd w(input_dim());
  int off = 0;
  for (const auto& s : subsystems) {
    w.segment(off, s.input_dim) = s.input_weight;
    off += s.input_dim;
  }
  return w;
}

Eigen::VectorXd PartitionedSystem::agent_state(int agent,
                                               const Eigen::VectorXd& x) const {
  return x.segment(state_offset(agent), subsystems[agent].state_dim);
}

Eigen::VectorXd PartitionedSystem::agent_input(int agent,
                                               const Eigen::VectorXd& u) const {
  return u.segment(input_offset(agent), subsystems[agent].input_dim);
}

void PartitionedSystem::validate() const {
  require(!subsystems.empty(), "system has no subsystems");
  require(static_cast<bool>(field), "system has no vector field");
  require(sample_time > 0.0, "sample_time must be positive");
  for (std::size_t i = 0; i < subsystems.size(); ++i) {
    const auto& s = subsystems[i];
    const std::string tag = "subsystem " + std::to_string(i);
    require(s.state_dim > 0 && s.input_dim > 0, tag + ": dims must be positive");
    require(s.state_box.dim() == s.state_dim && s.state_box.well_formed(),
            tag + ": malformed state box");
    require(s.input_box.dim() == s.input_dim && s.input_box.well_formed(),
            tag + ": malformed input box");
    // The origin must be strictly interior so the terminal design has room.
    Eigen::VectorXd zx = Eigen::VectorXd::Zero(s.state_dim);
    Eigen::VectorXd zu = Eigen::VectorXd::Zero(s.input_dim);
    require((s.state_box.lower.array() < 0).all() &&
                (s.state_box.upper.array() > 0).all(),
            tag + ": state box must contain the origin strictly");
    require((s.input_box.lower.array() < 0).all() &&
                (s.input_box.upper.array() > 0).all(),
            tag + ": input box must contain the origin strictly");
    require(s.state_weight.size() == s.state_dim &&
                (s.state_weight.array() >= 0).all(),
            tag + ": state weights must be nonnegative, size n_i");
    require(s.input_weight.size() == s.input_dim &&
                (s.input_weight.array() > 0).all(),
            tag + ": input weights must be positive, size m_i");
  }
  const Eigen::VectorXd f0 =
      field(Eigen::VectorXd::Zero(state_dim()), Eigen::VectorXd::Zero(input_dim()));
  require(f0.size() == state_dim(), "field output dimension mismatch");
  require(f0.lpNorm<Eigen::Infinity>() <= 1e-10,
          "origin is not an equilibrium of the vector field");
}

Eigen::VectorXd discretize_step(const PartitionedSystem& sys,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& u) {
  const double h = sys.sample_time;
  Eigen::VectorXd next;
  if (sys.discretization == Discretization::Euler) {
    next = x + h * sys.field(x, u);
  } else {
    const Eigen::VectorXd k1 = sys.field(x, u);
    const Eigen::VectorXd k2 = sys.field(x + 0.5 * h * k1, u);
    const Eigen::VectorXd k3 = sys.field(x + 0.5 * h * k2, u);
    const Eigen::VectorXd k4 = sys.field(x + h * k3, u);
    next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!next.allFinite()) {
    throw IntegrationBlowupError(
        "integration blowup: non-finite state after one step");
  }
  return next;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> step_jacobian(
    const PartitionedSystem& sys, const Eigen::VectorXd& x,
    const Eigen::VectorXd& u) {
  const double h = sys.sample_time;
  const int n = static_cast<int>(x.size());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  if (sys.discretization == Discretization::Euler) {
    auto [fx, fu] = eval_field_jacobian(sys, x, u);
    return {eye + h * fx, h * fu};
  }
  // Tangent propagation through the four RK4 stages.
  const Eigen::VectorXd k1 = sys.field(x, u);
  const Eigen::VectorXd x2 = x + 0.5 * h * k1;
  const Eigen::VectorXd k2 = sys.field(x2, u);
  const Eigen::VectorXd x3 = x + 0.5 * h * k2;
  const Eigen::VectorXd k3 = sys.field(x3, u);
  const Eigen::VectorXd x4 = x + h * k3;

  auto [f1x, f1u] = eval_field_jacobian(sys, x, u);
  auto [f2x, f2u] = eval_field_jacobian(sys, x2, u);
  auto [f3x, f3u] = eval_field_jacobian(sys, x3, u);
  auto [f4x, f4u] = eval_field_jacobian(sys, x4, u);

  const Eigen::MatrixXd k1x = f1x;
  const Eigen::MatrixXd k1u = f1u;
  const Eigen::MatrixXd k2x = f2x * (eye + 0.5 * h * k1x);
  const Eigen::MatrixXd k2u = f2x * (0.5 * h * k1u) + f2u;
  const Eigen::MatrixXd k3x = f3x * (eye + 0.5 * h * k2x);
  const Eigen::MatrixXd k3u = f3x * (0.5 * h * k2u) + f3u;
  const Eigen::MatrixXd k4x = f4x * (eye + h * k3x);
  const Eigen::MatrixXd k4u = f4x * (h * k3u) + f4u;

  Eigen::MatrixXd a = eye + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  Eigen::MatrixXd b = (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  return {std::move(a), std::move(b)};
}

Trajectory rollout(const PartitionedSystem& sys, const Eigen::VectorXd& x0,
                   const std::vector<Eigen::VectorXd>& inputs) {
  Trajectory traj;
  traj.states.reserve(inputs.size() + 1);
  traj.inputs = inputs;
  traj.states.push_back(x0);
  for (const auto& u : inputs) {
    traj.states.push_back(discretize_step(sys, traj.states.back(), u));
  }
  return traj;
}

double stage_cost(const PartitionedSystem& sys, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& u) {
  double cost = 0.0;
  int xoff = 0, uoff = 0;
  for (const auto& s : sys.subsystems) {
    for (int d = 0; d < s.state_dim; ++d) {
      cost += s.state_weight[d] * x[xoff + d] * x[xoff + d];
    }
    for (int d = 0; d < s.input_dim; ++d) {
      cost += s.input_weight[d] * u[uoff + d] * u[uoff + d];
    }
    xoff += s.state_dim;
    uoff += s.input_dim;
  }
  return cost;
}

PartitionedSystem fuse_subsystems(const PartitionedSystem& sys) {
  PartitionedSystem fused = sys;
  SubsystemSpec all;
  all.name = "fused";
  all.state_dim = sys.state_dim();
  all.input_dim = sys.input_dim();
  all.state_box = sys.global_state_box();
  all.input_box = sys.global_input_box();
  all.state_weight = sys.global_state_weight();
  all.input_weight = sys.global_input_weight();
  fused.subsystems = {std::move(all)};
  return fused;
}

}  // namespace dmpc
