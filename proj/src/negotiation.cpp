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

#include "dmpc/negotiation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <utility>

#include "dmpc/parallel.hpp"

namespace dmpc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// The NLPs enforce constraints two decades tighter than the protocol-level
/// feasibility checks, so solver residuals never crowd the tolerance that
/// the negotiation verifies against.
double solver_tol(double feasibility_tol) { return 0.01 * feasibility_tol; }

/// Single-shooting evaluator behind the three NLPs of the negotiation:
/// the centralized problem (decisions: all inputs), an agent's local
/// problem (decisions: its first N_c inputs and lambda) and the
/// supervisor's blending problem (decisions: gamma).  One instance backs
/// one solve; it caches the rollout (and step Jacobians) at the last
/// decision vector, and computes exact objective/constraint gradients by
/// one adjoint sweep each, so a quasi-Newton step costs O(Np) model
/// evaluations instead of O(dim) finite differences.
class ShootingNlp {
 public:
  enum class Mode { Centralized, Local, Blend };

  // -- construction ---------------------------------------------------------

  static ShootingNlp centralized(const PartitionedSystem& sys,
                                 const TerminalIngredients& term,
                                 const VectorXd& x0, int np) {
    ShootingNlp e(sys, term, x0, np, Mode::Centralized);
    e.dim_ = sys.input_dim() * np;
    return e;
  }

  static ShootingNlp local(const PartitionedSystem& sys,
                           const TerminalIngredients& term, const VectorXd& x0,
                           int agent, int nc, TailLaw tail_law,
                           std::vector<std::vector<VectorXd>> prev_sequences) {
    const int np = static_cast<int>(prev_sequences[agent].size());
    ShootingNlp e(sys, term, x0, np, Mode::Local);
    e.agent_ = agent;
    e.nc_ = nc;
    e.tail_law_ = tail_law;
    e.prev_ = std::move(prev_sequences);
    e.dim_ = sys.subsystems[agent].input_dim * nc + 1;
    e.agent_gain_ = term.agent_gain_rows(sys.input_offset(agent),
                                         sys.subsystems[agent].input_dim);
    return e;
  }

  static ShootingNlp blend(const PartitionedSystem& sys,
                           const TerminalIngredients& term, const VectorXd& x0,
                           std::vector<std::vector<VectorXd>> star_sequences,
                           std::vector<std::vector<VectorXd>> prev_sequences) {
    const int np = static_cast<int>(prev_sequences[0].size());
    ShootingNlp e(sys, term, x0, np, Mode::Blend);
    e.star_ = std::move(star_sequences);
    e.prev_ = std::move(prev_sequences);
    e.dim_ = sys.num_agents();
    return e;
  }

  // -- NLP surface ----------------------------------------------------------

  int dim() const { return dim_; }

  BoxSet bounds() const {
    switch (mode_) {
      case Mode::Centralized: {
        BoxSet u = sys_->global_input_box();
        BoxSet out(VectorXd(0), VectorXd(0));
        for (int t = 0; t < np_; ++t) out = BoxSet::stacked(out, u);
        return out;
      }
      case Mode::Local: {
        const BoxSet& u = sys_->subsystems[agent_].input_box;
        BoxSet out(VectorXd(0), VectorXd(0));
        for (int t = 0; t < nc_; ++t) out = BoxSet::stacked(out, u);
        return BoxSet::stacked(
            out, BoxSet(VectorXd::Zero(1), VectorXd::Ones(1)));  // lambda
      }
      case Mode::Blend:
        return BoxSet(VectorXd::Zero(dim_), VectorXd::Ones(dim_));
    }
    return BoxSet();
  }

  /// Callbacks capture `this`; the evaluator must outlive the solve.
  NlpProblem problem(double feasibility_tol) {
    NlpProblem p;
    p.dim = dim_;
    p.bounds = bounds();
    p.feasibility_tol = feasibility_tol;
    p.objective = [this](const VectorXd& z) { return objective(z); };
    p.objective_grad = [this](const VectorXd& z) { return objective_grad(z); };
    p.constraints = [this](const VectorXd& z) { return constraints(z); };
    p.constraint_vjp = [this](const VectorXd& z, const VectorXd& w) {
      return constraint_vjp(z, w);
    };
    return p;
  }

  // -- evaluation -----------------------------------------------------------

  double objective(const VectorXd& z) {
    if (!ensure_rollout(z)) return std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (int t = 0; t < np_; ++t) total += stage_cost(*sys_, xs_[t], us_[t]);
    return total + term_->vf(xs_[np_]);
  }

  VectorXd constraints(const VectorXd& z) {
    if (!ensure_rollout(z)) {
      return VectorXd::Constant(num_constraints(),
                                std::numeric_limits<double>::infinity());
    }
    VectorXd g(num_constraints());
    int at = 0;
    const BoxSet xbox = sys_->global_state_box();
    const int n = sys_->state_dim();
    for (int t = 1; t < np_; ++t) {
      g.segment(at, n) = xs_[t] - xbox.upper;
      g.segment(at + n, n) = xbox.lower - xs_[t];
      at += 2 * n;
    }
    if (mode_ == Mode::Local) {
      const BoxSet& ubox = sys_->subsystems[agent_].input_box;
      const int off = sys_->input_offset(agent_);
      const int mi = sys_->subsystems[agent_].input_dim;
      for (int t = nc_; t < np_; ++t) {
        const VectorXd ui = us_[t].segment(off, mi);
        g.segment(at, mi) = ui - ubox.upper;
        g.segment(at + mi, mi) = ubox.lower - ui;
        at += 2 * mi;
      }
    }
    // Terminal block: level, state box at Np, input box under the gain.
    const VectorXd& xN = xs_[np_];
    const BoxSet ubox = sys_->global_input_box();
    const VectorXd uN = term_->control(xN);
    const int m = sys_->input_dim();
    g[at++] = term_->vf(xN) - term_->alpha;
    g.segment(at, n) = xN - xbox.upper;
    g.segment(at + n, n) = xbox.lower - xN;
    at += 2 * n;
    g.segment(at, m) = uN - ubox.upper;
    g.segment(at + m, m) = ubox.lower - uN;
    return g;
  }

  VectorXd objective_grad(const VectorXd& z) {
    ensure_jacobians(z);
    const VectorXd qw = sys_->global_state_weight();
    const VectorXd rw = sys_->global_input_weight();
    std::vector<VectorXd> ds_x(np_), ds_u(np_);
    for (int t = 0; t < np_; ++t) {
      ds_x[t] = 2.0 * qw.cwiseProduct(xs_[t]);
      ds_u[t] = 2.0 * rw.cwiseProduct(us_[t]);
    }
    return adjoint(z, ds_x, ds_u, term_->vf_grad(xs_[np_]));
  }

  VectorXd constraint_vjp(const VectorXd& z, const VectorXd& w) {
    ensure_jacobians(z);
    const int n = sys_->state_dim();
    const int m = sys_->input_dim();
    std::vector<VectorXd> ds_x(np_, VectorXd::Zero(n));
    std::vector<VectorXd> ds_u(np_, VectorXd::Zero(m));
    int at = 0;
    for (int t = 1; t < np_; ++t) {
      ds_x[t] = w.segment(at, n) - w.segment(at + n, n);
      at += 2 * n;
    }
    if (mode_ == Mode::Local) {
      const int off = sys_->input_offset(agent_);
      const int mi = sys_->subsystems[agent_].input_dim;
      for (int t = nc_; t < np_; ++t) {
        ds_u[t].segment(off, mi) = w.segment(at, mi) - w.segment(at + mi, mi);
        at += 2 * mi;
      }
    }
    const double w_vf = w[at++];
    VectorXd ds_xN = w_vf * term_->vf_grad(xs_[np_]);
    ds_xN += w.segment(at, n) - w.segment(at + n, n);
    at += 2 * n;
    ds_xN +=
        term_->gain.transpose() * (w.segment(at, m) - w.segment(at + m, m));
    return adjoint(z, ds_x, ds_u, ds_xN);
  }

  /// Agent i's full input sequence at z (cached rollout).
  std::vector<VectorXd> own_sequence(const VectorXd& z, int agent) {
    if (!ensure_rollout(z)) {
      throw IntegrationBlowupError("shooting: rollout blew up at solution");
    }
    const int off = sys_->input_offset(agent);
    const int mi = sys_->subsystems[agent].input_dim;
    std::vector<VectorXd> seq(np_);
    for (int t = 0; t < np_; ++t) seq[t] = us_[t].segment(off, mi);
    return seq;
  }

  Trajectory trajectory_at(const VectorXd& z) {
    if (!ensure_rollout(z)) {
      throw IntegrationBlowupError("shooting: rollout blew up at solution");
    }
    Trajectory traj;
    traj.states = xs_;
    traj.inputs = us_;
    return traj;
  }

 private:
  ShootingNlp(const PartitionedSystem& sys, const TerminalIngredients& term,
              VectorXd x0, int np, Mode mode)
      : sys_(&sys), term_(&term), x0_(std::move(x0)), np_(np), mode_(mode) {}

  int num_constraints() const {
    const int n = sys_->state_dim();
    const int m = sys_->input_dim();
    int count = 2 * n * (np_ - 1) + 1 + 2 * n + 2 * m;
    if (mode_ == Mode::Local) {
      count += 2 * sys_->subsystems[agent_].input_dim * (np_ - nc_);
    }
    return count;
  }

  /// Global input at step t given the rolled-out state x.
  VectorXd input_at(int t, const VectorXd& x, const VectorXd& z) const {
    const int m = sys_->input_dim();
    switch (mode_) {
      case Mode::Centralized:
        return z.segment(t * m, m);
      case Mode::Local: {
        VectorXd u(m);
        for (int j = 0; j < sys_->num_agents(); ++j) {
          const int off = sys_->input_offset(j);
          const int mj = sys_->subsystems[j].input_dim;
          if (j != agent_) {
            u.segment(off, mj) = prev_[j][t];
          } else if (t < nc_) {
            u.segment(off, mj) = z.segment(t * mj, mj);
          } else {
            const double lambda = z[dim_ - 1];
            const VectorXd& ref = prev_[j][t];
            if (lambda == 0.0) {
              u.segment(off, mj) = ref;
            } else {
              const VectorXd base =
                  tail_law_ == TailLaw::Terminal
                      ? VectorXd(agent_gain_ * x)
                      : VectorXd(z.segment((nc_ - 1) * mj, mj));
              u.segment(off, mj) = lambda * base + (1.0 - lambda) * ref;
            }
          }
        }
        return u;
      }
      case Mode::Blend: {
        VectorXd u(m);
        for (int j = 0; j < sys_->num_agents(); ++j) {
          const int off = sys_->input_offset(j);
          const int mj = sys_->subsystems[j].input_dim;
          const double gamma = z[j];
          if (gamma == 0.0) {
            u.segment(off, mj) = prev_[j][t];
          } else if (gamma == 1.0) {
            u.segment(off, mj) = star_[j][t];
          } else {
            u.segment(off, mj) =
                gamma * star_[j][t] + (1.0 - gamma) * prev_[j][t];
          }
        }
        return u;
      }
    }
    return VectorXd();
  }

  bool same_decision(const VectorXd& z) const {
    return cache_valid_ && cached_z_.size() == z.size() && cached_z_ == z;
  }

  /// Rollout at z; returns false (and caches nothing) on integration
  /// blowup so the line search can reject the trial point.
  bool ensure_rollout(const VectorXd& z) {
    if (same_decision(z)) return true;
    cache_valid_ = false;
    jacs_valid_ = false;
    xs_.assign(1, x0_);
    us_.clear();
    try {
      for (int t = 0; t < np_; ++t) {
        us_.push_back(input_at(t, xs_.back(), z));
        xs_.push_back(discretize_step(*sys_, xs_.back(), us_.back()));
      }
    } catch (const IntegrationBlowupError&) {
      return false;
    }
    cached_z_ = z;
    cache_valid_ = true;
    return true;
  }

  void ensure_jacobians(const VectorXd& z) {
    if (!ensure_rollout(z)) {
      throw IntegrationBlowupError(
          "shooting: gradient requested at a non-finite rollout");
    }
    if (jacs_valid_) return;
    as_.resize(np_);
    bs_.resize(np_);
    for (int t = 0; t < np_; ++t) {
      auto [a, b] = step_jacobian(*sys_, xs_[t], us_[t]);
      as_[t] = std::move(a);
      bs_[t] = std::move(b);
    }
    jacs_valid_ = true;
  }

  /// Reverse sweep: for Phi = sum_t c_t(x_t, u_t) + c_N(x_N) with seeds
  /// ds_* = dc/d*, returns dPhi/dz accounting for the input laws' state
  /// feedback (the lambda-scaled gain on local tail steps).
  VectorXd adjoint(const VectorXd& z, const std::vector<VectorXd>& ds_x,
                   const std::vector<VectorXd>& ds_u, const VectorXd& ds_xN) {
    VectorXd gz = VectorXd::Zero(dim_);
    VectorXd p = ds_xN;
    const int ioff = mode_ == Mode::Local ? sys_->input_offset(agent_) : 0;
    const int mi =
        mode_ == Mode::Local ? sys_->subsystems[agent_].input_dim : 0;
    const double lambda = mode_ == Mode::Local ? z[dim_ - 1] : 0.0;
    for (int t = np_ - 1; t >= 0; --t) {
      const VectorXd ru = ds_u[t] + bs_[t].transpose() * p;
      VectorXd px = ds_x[t] + as_[t].transpose() * p;
      switch (mode_) {
        case Mode::Centralized:
          gz.segment(t * sys_->input_dim(), sys_->input_dim()) += ru;
          break;
        case Mode::Local: {
          const VectorXd ru_i = ru.segment(ioff, mi);
          if (t < nc_) {
            gz.segment(t * mi, mi) += ru_i;
          } else {
            const VectorXd& ref = prev_[agent_][t];
            const VectorXd base =
                tail_law_ == TailLaw::Terminal
                    ? VectorXd(agent_gain_ * xs_[t])
                    : VectorXd(z.segment((nc_ - 1) * mi, mi));
            gz[dim_ - 1] += (base - ref).dot(ru_i);
            if (tail_law_ == TailLaw::Terminal) {
              px += lambda * (agent_gain_.transpose() * ru_i);
            } else {
              gz.segment((nc_ - 1) * mi, mi) += lambda * ru_i;
            }
          }
          break;
        }
        case Mode::Blend:
          for (int j = 0; j < sys_->num_agents(); ++j) {
            const int off = sys_->input_offset(j);
            const int mj = sys_->subsystems[j].input_dim;
            gz[j] += (star_[j][t] - prev_[j][t])
                         .dot(ru.segment(off, mj));
          }
          break;
      }
      p = std::move(px);
    }
    return gz;
  }

  const PartitionedSystem* sys_;
  const TerminalIngredients* term_;
  VectorXd x0_;
  int np_;
  Mode mode_;
  int dim_ = 0;

  int agent_ = -1;
  int nc_ = 0;
  TailLaw tail_law_ = TailLaw::Terminal;
  MatrixXd agent_gain_;
  std::vector<std::vector<VectorXd>> prev_;  // fixed sequences (all agents)
  std::vector<std::vector<VectorXd>> star_;  // proposals (blend mode)

  // Cache at the last decision vector.
  VectorXd cached_z_;
  bool cache_valid_ = false;
  bool jacs_valid_ = false;
  std::vector<VectorXd> xs_, us_;
  std::vector<MatrixXd> as_, bs_;
};

std::vector<VectorXd> flatten_free(const std::vector<VectorXd>& seq, int count) {
  return {seq.begin(), seq.begin() + count};
}

}  // namespace

LocalSolution solve_local(const PartitionedSystem& sys,
                          const TerminalIngredients& term, int agent,
                          const Eigen::VectorXd& x0,
                          const std::vector<InputPlan>& previous,
                          const NegotiationConfig& config) {
  validate_joint(sys, previous);
  const Materialized prev_mat =
      materialize(sys, term, x0, previous, config.tail_law);
  const FeasibilityReport report = check_feasible(
      sys, term, prev_mat.trajectory, config.feasibility_tol);
  if (!report.feasible) {
    throw ProtocolViolationError(
        "solve_local: previous joint plan is infeasible (violation " +
        std::to_string(report.worst()) + "); recursive feasibility is broken");
  }
  const int nc = previous[agent].control_horizon;
  const int mi = sys.subsystems[agent].input_dim;

  ShootingNlp shoot = ShootingNlp::local(sys, term, x0, agent, nc,
                                         config.tail_law, prev_mat.sequences);
  NlpProblem problem = shoot.problem(solver_tol(config.feasibility_tol));

  VectorXd warm(shoot.dim());
  for (int t = 0; t < nc; ++t) {
    warm.segment(t * mi, mi) = prev_mat.sequences[agent][t];
  }
  warm[shoot.dim() - 1] = 0.0;  // lambda

  const auto start = Clock::now();
  const SolveResult res = solve_nlp(problem, warm, config.solver);
  const double wall = seconds_since(start);

  LocalSolution out;
  out.lambda_star = res.z[shoot.dim() - 1];
  out.sequence = shoot.own_sequence(res.z, agent);
  out.objective = res.objective_value;
  out.iterations = res.iterations;
  out.wall_seconds = wall;

  out.plan.agent = agent;
  out.plan.control_horizon = nc;
  out.plan.lambda = out.lambda_star;
  out.plan.free_inputs.resize(nc);
  for (int t = 0; t < nc; ++t) {
    out.plan.free_inputs[t] = res.z.segment(t * mi, mi);
  }
  out.plan.tail_reference.assign(prev_mat.sequences[agent].begin() + nc,
                                 prev_mat.sequences[agent].end());
  return out;
}

CoordinationResult coordinate(const PartitionedSystem& sys,
                              const TerminalIngredients& term,
                              const Eigen::VectorXd& x0,
                              const std::vector<LocalSolution>& proposals,
                              const std::vector<InputPlan>& previous,
                              const NegotiationConfig& config) {
  const int num_agents = sys.num_agents();
  const Materialized prev_mat =
      materialize(sys, term, x0, previous, config.tail_law);
  std::vector<std::vector<VectorXd>> star(num_agents);
  for (int i = 0; i < num_agents; ++i) star[i] = proposals[i].sequence;

  ShootingNlp shoot =
      ShootingNlp::blend(sys, term, x0, star, prev_mat.sequences);
  NlpProblem problem = shoot.problem(solver_tol(config.feasibility_tol));

  auto violation_at = [&](const VectorXd& gamma) {
    const VectorXd g = shoot.constraints(gamma);
    return g.size() > 0 ? std::max(0.0, g.maxCoeff()) : 0.0;
  };

  // gamma = 0 reproduces the previous plans bit-for-bit: it seeds the
  // selection, so the coordination can never increase J, and it is held to
  // the protocol-level tolerance only (the previous plan already passed).
  // Every other candidate must satisfy the tighter solver tolerance so
  // that accepted blends keep a wide margin under the protocol checks —
  // in particular gamma = 1 superposes all proposals onto one trajectory
  // that no local solve ever verified.
  const VectorXd gamma0 = VectorXd::Zero(num_agents);
  if (violation_at(gamma0) > config.feasibility_tol) {
    throw ProtocolViolationError(
        "coordinate: previous plans are infeasible (gamma = 0 violates the "
        "constraints)");
  }
  VectorXd best_gamma = gamma0;
  double best_j = shoot.objective(gamma0);
  const double strict_tol = solver_tol(config.feasibility_tol);
  auto consider = [&](const VectorXd& gamma) {
    if (violation_at(gamma) > strict_tol) return;
    const double j = shoot.objective(gamma);
    if (j < best_j) {
      best_j = j;
      best_gamma = gamma;
    }
  };

  std::vector<VectorXd> raw;
  for (int i = 0; i < num_agents; ++i) {
    VectorXd e = VectorXd::Zero(num_agents);
    e[i] = 1.0;
    raw.push_back(e);
  }
  raw.push_back(VectorXd::Ones(num_agents));
  for (double c : {0.25, 0.5, 0.75}) {
    raw.push_back(VectorXd::Constant(num_agents, c));
  }

  VectorXd best_raw_gamma = gamma0;
  double best_raw = std::numeric_limits<double>::infinity();
  for (const auto& gamma : raw) {
    consider(gamma);
    if (violation_at(gamma) <= strict_tol) {
      const double j = shoot.objective(gamma);
      if (j < best_raw) {
        best_raw = j;
        best_raw_gamma = gamma;
      }
    }
  }

  std::vector<VectorXd> starts;
  starts.push_back(gamma0);
  for (int i = 0; i < num_agents; ++i) {
    VectorXd e = VectorXd::Zero(num_agents);
    e[i] = 1.0;
    starts.push_back(e);
  }
  starts.push_back(VectorXd::Ones(num_agents));
  starts.push_back(best_raw_gamma);
  for (const auto& s : starts) {
    const SolveResult res = solve_nlp(problem, s, config.solver);
    consider(res.z);
  }

  CoordinationResult out;
  out.gamma = best_gamma;
  out.objective = shoot.objective(best_gamma);
  out.materialized.trajectory = shoot.trajectory_at(best_gamma);
  out.materialized.sequences.resize(num_agents);
  out.plans.resize(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    out.materialized.sequences[i] = shoot.own_sequence(best_gamma, i);
    out.plans[i] = InputPlan::from_sequence(i, previous[i].control_horizon,
                                            out.materialized.sequences[i]);
  }
  return out;
}

int try_shrink_horizon(const PartitionedSystem& sys,
                       const TerminalIngredients& term, int agent,
                       const LocalSolution& proposal,
                       const Eigen::VectorXd& x0,
                       const std::vector<InputPlan>& previous,
                       const NegotiationConfig& config) {
  const int nc = previous[agent].control_horizon;
  if (nc < 2) return nc;

  const Materialized prev_mat =
      materialize(sys, term, x0, previous, config.tail_law);

  // Candidate: one fewer free input; the dropped entry re-enters through
  // the tail blend at the proposal's lambda.
  InputPlan hat;
  hat.agent = agent;
  hat.control_horizon = nc - 1;
  hat.lambda = proposal.lambda_star;
  hat.free_inputs = flatten_free(proposal.plan.free_inputs, nc - 1);
  hat.tail_reference.assign(prev_mat.sequences[agent].begin() + (nc - 1),
                            prev_mat.sequences[agent].end());

  std::vector<InputPlan> joint = previous;
  joint[agent] = std::move(hat);
  Materialized hat_mat;
  try {
    hat_mat = materialize(sys, term, x0, joint, config.tail_law);
  } catch (const IntegrationBlowupError&) {
    return nc;
  }
  const FeasibilityReport rep =
      check_feasible(sys, term, hat_mat.trajectory, config.feasibility_tol);
  if (!rep.feasible) return nc;
  const double j_hat = objective_value(sys, term, hat_mat.trajectory);
  if (j_hat - proposal.objective <= config.epsilon_shrink) return nc - 1;
  return nc;
}

NegotiationResult negotiate(const PartitionedSystem& sys,
                            const TerminalIngredients& term,
                            const Eigen::VectorXd& x0,
                            const std::vector<InputPlan>& initial_plans,
                            const NegotiationConfig& config) {
  validate_joint(sys, initial_plans);
  const int num_agents = sys.num_agents();
  if (initial_plans[0].prediction_horizon() != config.prediction_horizon) {
    throw InvalidArgumentError(
        "negotiate: plan horizon does not match the configured prediction "
        "horizon");
  }

  NegotiationResult result;
  result.plans = initial_plans;
  result.materialized =
      materialize(sys, term, x0, result.plans, config.tail_law);
  {
    const FeasibilityReport rep = check_feasible(
        sys, term, result.materialized.trajectory, config.feasibility_tol);
    if (!rep.feasible) {
      throw ProtocolViolationError(
          "negotiate: initial plans are infeasible (violation " +
          std::to_string(rep.worst()) + ")");
    }
  }
  double j_prev =
      objective_value(sys, term, result.materialized.trajectory);
  result.trace.initial_objective = j_prev;

  for (int p = 1; p <= config.max_iterations; ++p) {
    // Step 1: local solves over the frozen snapshot, in parallel.  Each
    // slot also captures any exception so nothing escapes the worker loop.
    std::vector<LocalSolution> locals(num_agents);
    std::vector<std::exception_ptr> errors(num_agents);
    parallel_for(num_agents, config.jobs, [&](int i) {
      try {
        locals[i] = solve_local(sys, term, i, x0, result.plans, config);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
    for (const auto& sol : locals) {
      result.local_solve_seconds.push_back(sol.wall_seconds);
    }

    // Step 3: supervisor blending.
    CoordinationResult coord =
        coordinate(sys, term, x0, locals, result.plans, config);

    IterationRecord record;
    record.iteration = p;
    record.objective = coord.objective;
    record.lambda.resize(num_agents);
    record.control_horizons.resize(num_agents);
    for (int i = 0; i < num_agents; ++i) {
      record.lambda[i] = locals[i].lambda_star;
      record.control_horizons[i] = result.plans[i].control_horizon;
    }
    record.gamma = coord.gamma;
    const FeasibilityReport rep = check_feasible(
        sys, term, coord.materialized.trajectory, config.feasibility_tol);
    record.feasibility_residual = rep.worst();
    if (!rep.feasible) {
      throw ProtocolViolationError(
          "negotiate: blended plan infeasible at iteration " +
          std::to_string(p));
    }

    // Horizon shrinking takes effect at the next iteration's split.
    std::vector<InputPlan> next_plans = coord.plans;
    if (config.adapt_horizons) {
      for (int i = 0; i < num_agents; ++i) {
        const int nc_new = try_shrink_horizon(sys, term, i, locals[i], x0,
                                              result.plans, config);
        if (nc_new < result.plans[i].control_horizon) {
          next_plans[i] = InputPlan::from_sequence(
              i, nc_new, coord.materialized.sequences[i]);
        }
      }
    }

    result.trace.iterations.push_back(std::move(record));
    const bool converged =
        (j_prev - coord.objective) <
        config.convergence_tol * (1.0 + std::abs(j_prev));
    result.plans = std::move(next_plans);
    result.materialized = std::move(coord.materialized);
    j_prev = coord.objective;
    if (converged) {
      result.trace.convergence_reason = "converged";
      return result;
    }
  }
  result.trace.convergence_reason = "max_iterations";
  return result;
}

std::vector<InputPlan> shift_candidate(const PartitionedSystem& sys,
                                       const TerminalIngredients& term,
                                       const NegotiationResult& result,
                                       const NegotiationConfig& config) {
  const int num_agents = sys.num_agents();
  const Trajectory& traj = result.materialized.trajectory;
  const VectorXd& x_end = traj.states.back();

  std::vector<InputPlan> shifted(num_agents);
  for (int i = 0; i < num_agents; ++i) {
    const auto& seq = result.materialized.sequences[i];
    std::vector<VectorXd> next_seq(seq.begin() + 1, seq.end());
    next_seq.push_back(term.agent_gain_rows(sys.input_offset(i),
                                            sys.subsystems[i].input_dim) *
                       x_end);
    shifted[i] = InputPlan::from_sequence(
        i, result.plans[i].control_horizon, next_seq);
  }

  // Induction step: the shifted candidate must be feasible at the advanced
  // state; a failure means the terminal ingredients are wrong.
  const Eigen::VectorXd x_next = traj.states[1];
  const Materialized mat =
      materialize(sys, term, x_next, shifted, config.tail_law);
  const FeasibilityReport rep =
      check_feasible(sys, term, mat.trajectory, config.feasibility_tol);
  if (!rep.feasible) {
    throw TerminalDesignError(
        "shift candidate infeasible at the next state (violation " +
        std::to_string(rep.worst()) +
        "); terminal ingredients do not certify invariance");
  }
  return shifted;
}

Eigen::VectorXi update_nc0(const NegotiationTrace& trace, Nc0Update mode,
                           const Eigen::VectorXi& current,
                           int prediction_horizon) {
  if (mode == Nc0Update::Fixed) return current;
  if (trace.iterations.empty()) {
    throw InvalidArgumentError("update_nc0: empty trace");
  }
  Eigen::VectorXi next(current.size());
  for (int i = 0; i < current.size(); ++i) {
    double sum = 0.0;
    for (const auto& rec : trace.iterations) {
      sum += rec.control_horizons[i];
    }
    const double mean = sum / static_cast<double>(trace.iterations.size());
    const int rounded = static_cast<int>(std::floor(mean + 0.5));  // half up
    next[i] = std::clamp(rounded, 1, prediction_horizon);
  }
  return next;
}

CentralizedResult centralized_solve(const PartitionedSystem& sys,
                                    const TerminalIngredients& term,
                                    const Eigen::VectorXd& x0, int horizon,
                                    const std::vector<Eigen::VectorXd>& warm,
                                    const NlpOptions& options,
                                    double feasibility_tol) {
  const int m = sys.input_dim();
  ShootingNlp shoot = ShootingNlp::centralized(sys, term, x0, horizon);
  NlpProblem problem = shoot.problem(solver_tol(feasibility_tol));
  VectorXd z = VectorXd::Zero(m * horizon);
  if (!warm.empty()) {
    if (static_cast<int>(warm.size()) != horizon) {
      throw InvalidArgumentError(
          "centralized_solve: warm start length mismatch");
    }
    for (int t = 0; t < horizon; ++t) z.segment(t * m, m) = warm[t];
  }
  const SolveResult res = solve_nlp(problem, z, options);
  CentralizedResult out;
  out.objective = res.objective_value;
  out.status = res.status;
  out.trajectory = shoot.trajectory_at(res.z);
  out.inputs = out.trajectory.inputs;
  return out;
}

std::vector<InputPlan> plans_from_global_inputs(
    const PartitionedSystem& sys, const std::vector<Eigen::VectorXd>& inputs,
    const Eigen::VectorXi& control_horizons) {
  std::vector<InputPlan> plans(sys.num_agents());
  for (int i = 0; i < sys.num_agents(); ++i) {
    const int off = sys.input_offset(i);
    const int mi = sys.subsystems[i].input_dim;
    std::vector<VectorXd> seq(inputs.size());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      seq[t] = inputs[t].segment(off, mi);
    }
    plans[i] = InputPlan::from_sequence(i, control_horizons[i], seq);
  }
  return plans;
}

}  // namespace dmpc
