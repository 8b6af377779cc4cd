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

/// Compares the serial reference paths (jobs = 1) against the OpenMP paths
/// (jobs = hardware) for the two data-parallel kernels: terminal-set sample
/// validation and the per-agent local solves of one negotiation iteration.
/// Results must agree bitwise; timings show the available speedup.

#include <chrono>
#include <cstdio>
#include <vector>

#include "dmpc/parallel.hpp"
#include "dmpc/scenario.hpp"
#include "dmpc/simulation.hpp"
#include "dmpc/terminal_design.hpp"

using namespace dmpc;
using Clock = std::chrono::steady_clock;

namespace {

double secs(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double bench_sample_validation(const PartitionedSystem& sys,
                               const TerminalIngredients& term, int jobs,
                               double* checksum) {
  const int count = 20000;
  const std::vector<Eigen::VectorXd> samples =
      sample_terminal_set(sys, term, count, 0x5eedULL);
  std::vector<double> residuals(samples.size());
  const auto t0 = Clock::now();
  parallel_for(static_cast<int>(samples.size()), jobs, [&](int i) {
    residuals[i] = decrease_residual(sys, term, samples[i]);
  });
  const double wall = secs(t0);
  double sum = 0.0;
  for (double r : residuals) sum += r;  // fixed order: deterministic
  *checksum = sum;
  return wall;
}

double bench_local_solves(const PartitionedSystem& sys,
                          const TerminalIngredients& term, int jobs,
                          double* checksum) {
  ScenarioConfig cfg = ScenarioConfig::defaults();
  NegotiationConfig neg = cfg.negotiation;
  neg.jobs = jobs;
  NlpOptions boot = neg.solver;
  boot.max_inner = 2000;
  boot.max_outer = 40;
  const CentralizedResult c =
      centralized_solve(sys, term, cfg.initial_state,
                        neg.prediction_horizon, {}, boot,
                        neg.feasibility_tol);
  const std::vector<InputPlan> plans =
      plans_from_global_inputs(sys, c.inputs, cfg.control_horizons);

  // Repeat the parallel section (one iteration's local solves) for a
  // stable measurement.
  const int reps = 10;
  double sum = 0.0;
  const auto t0 = Clock::now();
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<LocalSolution> locals(sys.num_agents());
    parallel_for(sys.num_agents(), jobs, [&](int i) {
      locals[i] = solve_local(sys, term, i, cfg.initial_state, plans, neg);
    });
    for (const auto& sol : locals) sum += sol.objective;
  }
  *checksum = sum;
  return secs(t0) / reps;
}

}  // namespace

int main() {
  const ScenarioConfig cfg = ScenarioConfig::defaults();
  const PartitionedSystem sys = cfg.make_system();
  const TerminalIngredients term = design_terminal(sys, cfg.terminal);
  const int hw = default_jobs();
  std::printf("hardware threads: %d\n\n", hw);
  std::printf("%-28s %10s %10s %8s  %s\n", "kernel", "serial_s", "openmp_s",
              "speedup", "bitwise");

  double cs_serial = 0.0, cs_parallel = 0.0;
  const double s1 = bench_sample_validation(sys, term, 1, &cs_serial);
  const double p1 = bench_sample_validation(sys, term, hw, &cs_parallel);
  std::printf("%-28s %10.3f %10.3f %8.2f  %s\n", "sample-validation (20k)",
              s1, p1, s1 / p1, cs_serial == cs_parallel ? "match" : "DIFFER");
  bool ok = cs_serial == cs_parallel;

  const double s2 = bench_local_solves(sys, term, 1, &cs_serial);
  const double p2 = bench_local_solves(sys, term, hw, &cs_parallel);
  std::printf("%-28s %10.3f %10.3f %8.2f  %s\n", "local solves (3 agents)",
              s2, p2, s2 / p2, cs_serial == cs_parallel ? "match" : "DIFFER");
  ok = ok && cs_serial == cs_parallel;

  if (!ok) {
    std::printf("\nbitwise mismatch between serial and parallel paths\n");
    return 1;
  }
  return 0;
}
