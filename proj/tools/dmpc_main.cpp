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

/// Command-line front end: closed-loop runs, horizon sweeps, adaptive-horizon
/// runs, terminal-ingredient validation and artifact audits for the
/// three-mass benchmark.  All artifacts are CSV/JSON; identical
/// configuration and seed produce byte-identical CSVs (modulo the sweep
/// wall_time column, which measures this machine).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dmpc/csv.hpp"
#include "dmpc/scenario.hpp"
#include "dmpc/simulation.hpp"
#include "dmpc/terminal_design.hpp"

namespace {

using dmpc::CsvTable;
using dmpc::format_double;

struct CommonArgs {
  std::string config_path;
  std::string out_dir_flag;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
};

dmpc::ScenarioConfig load_config(const CommonArgs& args) {
  dmpc::ScenarioConfig cfg = args.config_path.empty()
                                 ? dmpc::ScenarioConfig::defaults()
                                 : dmpc::load_scenario(args.config_path);
  if (args.seed) cfg.terminal.seed = *args.seed;
  cfg.negotiation.jobs = args.jobs;
  return cfg;
}

/// Output directory precedence: --out-dir flag, then DMPC_OUT_DIR, then the
/// config's output_dir, then ./out.
std::filesystem::path resolve_out_dir(const CommonArgs& args,
                                      const dmpc::ScenarioConfig& cfg) {
  if (!args.out_dir_flag.empty()) return args.out_dir_flag;
  if (const char* env = std::getenv("DMPC_OUT_DIR"); env && *env) return env;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return "out";
}

std::string state_header(int i) { return "x" + std::to_string(i + 1); }
std::string input_header(int i) { return "u" + std::to_string(i + 1); }

CsvTable trajectory_table(const dmpc::SimulationResult& sim) {
  CsvTable t;
  const int n = static_cast<int>(sim.states.front().size());
  const int m = static_cast<int>(sim.inputs.front().size());
  t.header.push_back("k");
  for (int i = 0; i < n; ++i) t.header.push_back(state_header(i));
  for (int i = 0; i < m; ++i) t.header.push_back(input_header(i));
  for (std::size_t k = 0; k < sim.states.size(); ++k) {
    std::vector<std::string> row;
    row.push_back(std::to_string(k));
    for (int i = 0; i < n; ++i) row.push_back(format_double(sim.states[k][i]));
    for (int i = 0; i < m; ++i) row.push_back(format_double(sim.inputs[k][i]));
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable trace_table(const dmpc::SimulationResult& sim, int num_agents) {
  CsvTable t;
  t.header = {"k", "p", "J"};
  for (int i = 0; i < num_agents; ++i) {
    t.header.push_back("lambda" + std::to_string(i + 1));
  }
  for (int i = 0; i < num_agents; ++i) {
    t.header.push_back("gamma" + std::to_string(i + 1));
  }
  for (int i = 0; i < num_agents; ++i) {
    t.header.push_back("Nc" + std::to_string(i + 1));
  }
  t.header.push_back("feas_residual");
  for (std::size_t k = 0; k < sim.traces.size(); ++k) {
    for (const auto& rec : sim.traces[k].iterations) {
      std::vector<std::string> row;
      row.push_back(std::to_string(k));
      row.push_back(std::to_string(rec.iteration));
      row.push_back(format_double(rec.objective));
      for (int i = 0; i < num_agents; ++i) {
        row.push_back(format_double(rec.lambda[i]));
      }
      for (int i = 0; i < num_agents; ++i) {
        row.push_back(format_double(rec.gamma[i]));
      }
      for (int i = 0; i < num_agents; ++i) {
        row.push_back(std::to_string(rec.control_horizons[i]));
      }
      row.push_back(format_double(rec.feasibility_residual));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

CsvTable nc_evolution_table(const dmpc::SimulationResult& sim,
                            int num_agents) {
  CsvTable t;
  t.header = {"global_iteration", "k", "p"};
  for (int i = 0; i < num_agents; ++i) {
    t.header.push_back("Nc" + std::to_string(i + 1));
  }
  long global = 0;
  for (std::size_t k = 0; k < sim.traces.size(); ++k) {
    for (const auto& rec : sim.traces[k].iterations) {
      std::vector<std::string> row;
      row.push_back(std::to_string(global++));
      row.push_back(std::to_string(k));
      row.push_back(std::to_string(rec.iteration));
      for (int i = 0; i < num_agents; ++i) {
        row.push_back(std::to_string(rec.control_horizons[i]));
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

CsvTable sweep_table(const std::vector<dmpc::SweepRow>& rows) {
  CsvTable t;
  t.header = {"Nc2", "Nc3", "Jcc", "iterations", "wall_time"};
  for (const auto& row : rows) {
    t.rows.push_back({std::to_string(row.nc2), std::to_string(row.nc3),
                      format_double(row.jcc), std::to_string(row.iterations),
                      format_double(row.wall_seconds)});
  }
  return t;
}

void print_summary(const dmpc::SimulationResult& sim,
                   const std::filesystem::path& dir) {
  double local_total = 0.0;
  for (double s : sim.local_solve_seconds) local_total += s;
  std::cout << "steps:                    " << sim.states.size()
            << " (k = 0.." << sim.states.size() - 1 << ")\n"
            << "accumulated cost J_cc:    " << format_double(sim.jcc) << "\n"
            << "negotiation iterations:   " << sim.total_iterations << "\n"
            << "max feasibility residual: "
            << format_double(sim.max_feasibility_violation) << "\n"
            << "monotonicity violations:  " << sim.monotonicity_violations
            << "\n"
            << "wall time:                " << format_double(sim.wall_seconds)
            << " s (local solves " << format_double(local_total) << " s over "
            << sim.local_solve_seconds.size() << " calls)\n"
            << "artifacts:                " << (dir / "trajectory.csv").string()
            << ", trace.csv, nc-evolution.csv\n";
}

void write_run_artifacts(const dmpc::SimulationResult& sim, int num_agents,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  dmpc::write_csv((dir / "trajectory.csv").string(), trajectory_table(sim));
  dmpc::write_csv((dir / "trace.csv").string(), trace_table(sim, num_agents));
  dmpc::write_csv((dir / "nc-evolution.csv").string(),
                  nc_evolution_table(sim, num_agents));
}

int cmd_run(const CommonArgs& args, bool adaptive, double epsilon,
            bool epsilon_set) {
  dmpc::ScenarioConfig cfg = load_config(args);
  if (adaptive) {
    cfg.negotiation.adapt_horizons = true;
    cfg.negotiation.nc0_update = dmpc::Nc0Update::MeanOfPreviousStep;
  }
  if (epsilon_set) cfg.negotiation.epsilon_shrink = epsilon;
  cfg.validate();
  const std::filesystem::path dir = resolve_out_dir(args, cfg);

  const dmpc::PartitionedSystem sys = cfg.make_system();
  const dmpc::TerminalIngredients term = cfg.make_terminal(sys, args.jobs);
  const dmpc::SimulationResult sim =
      simulate(sys, term, cfg.make_simulation_options());

  write_run_artifacts(sim, sys.num_agents(), dir);
  print_summary(sim, dir);
  if (sim.monotonicity_violations > 0) {
    std::cerr << "error: objective increased along the run\n";
    return 1;
  }
  if (sim.max_feasibility_violation > cfg.negotiation.feasibility_tol) {
    std::cerr << "error: feasibility residual exceeded the tolerance\n";
    return 1;
  }
  return 0;
}

std::vector<int> parse_grid(const std::string& text, const std::string& name) {
  // Accepts "8" or "start:step:stop" (inclusive).
  std::vector<int> grid;
  const auto bad = [&]() {
    throw CLI::ValidationError(
        name, "expected an integer or start:step:stop, got '" + text + "'");
  };
  const std::size_t c1 = text.find(':');
  if (c1 == std::string::npos) {
    try {
      grid.push_back(std::stoi(text));
    } catch (...) {
      bad();
    }
    return grid;
  }
  const std::size_t c2 = text.find(':', c1 + 1);
  if (c2 == std::string::npos) bad();
  int start = 0, step = 0, stop = 0;
  try {
    start = std::stoi(text.substr(0, c1));
    step = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
    stop = std::stoi(text.substr(c2 + 1));
  } catch (...) {
    bad();
  }
  if (step <= 0 || stop < start) bad();
  for (int v = start; v <= stop; v += step) grid.push_back(v);
  return grid;
}

int cmd_sweep(const CommonArgs& args, const std::string& nc2_text,
              const std::string& nc3_text) {
  dmpc::ScenarioConfig cfg = load_config(args);
  cfg.validate();
  const std::filesystem::path dir = resolve_out_dir(args, cfg);

  dmpc::SweepSpec spec;
  spec.nc1 = 10;
  spec.nc2_grid = parse_grid(nc2_text, "--nc2");
  spec.nc3_grid = parse_grid(nc3_text, "--nc3");

  const dmpc::PartitionedSystem sys = cfg.make_system();
  const dmpc::TerminalIngredients term = cfg.make_terminal(sys, args.jobs);
  const std::vector<dmpc::SweepRow> rows =
      run_sweep(sys, term, cfg.make_simulation_options(), spec, args.jobs);

  std::filesystem::create_directories(dir);
  dmpc::write_csv((dir / "sweep.csv").string(), sweep_table(rows));
  std::cout << "Nc2  Nc3  Jcc            iterations  wall_s\n";
  for (const auto& row : rows) {
    std::printf("%-4d %-4d %-14.6f %-11ld %.2f\n", row.nc2, row.nc3, row.jcc,
                row.iterations, row.wall_seconds);
  }
  std::cout << "artifact: " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_validate_terminal(const CommonArgs& args) {
  dmpc::ScenarioConfig cfg = load_config(args);
  cfg.validate();
  const std::filesystem::path dir = resolve_out_dir(args, cfg);
  const dmpc::PartitionedSystem sys = cfg.make_system();
  const dmpc::TerminalIngredients term = cfg.make_terminal(sys, args.jobs);

  // Independent check on fresh samples: a distinct seed stream from the
  // design's, so this is not a replay of the accepted samples.
  dmpc::TerminalDesignOptions check = cfg.terminal;
  check.seed = cfg.terminal.seed + 1;
  const std::vector<Eigen::VectorXd> samples =
      dmpc::sample_terminal_set(sys, term, check.num_samples, check.seed);
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& x : samples) {
    worst = std::max(worst, dmpc::decrease_residual(sys, term, x));
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(term.weight);
  std::cout << "alpha:                 " << format_double(term.alpha) << "\n"
            << "P eigenvalues:         ";
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    std::cout << (i ? " " : "") << format_double(es.eigenvalues()[i]);
  }
  std::cout << "\n"
            << "worst decrease residual over " << samples.size()
            << " fresh samples: " << format_double(worst) << "\n";

  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "terminal.json", std::ios::binary);
  out << dmpc::ingredients_to_json(term) << "\n";
  out.flush();
  std::cout << "artifact: " << (dir / "terminal.json").string() << "\n";

  if (worst > 1e-8) {
    std::cerr << "error: decrease condition violated on fresh samples\n";
    return 1;
  }
  return 0;
}

int cmd_audit(const CommonArgs& args) {
  dmpc::ScenarioConfig cfg = load_config(args);
  cfg.validate();
  const std::filesystem::path dir = resolve_out_dir(args, cfg);
  const dmpc::PartitionedSystem sys = cfg.make_system();
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  const int num_agents = sys.num_agents();
  int failures = 0;
  const auto check = [&failures](bool ok, const std::string& what) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << what << "\n";
    if (!ok) ++failures;
  };

  // Trajectory: recompute the dynamics step by step and re-check the boxes.
  const CsvTable traj = dmpc::read_csv((dir / "trajectory.csv").string());
  bool headers_ok = traj.column("k") == 0;
  for (int i = 0; i < n; ++i) {
    headers_ok = headers_ok && traj.column(state_header(i)) == 1 + i;
  }
  for (int i = 0; i < m; ++i) {
    headers_ok = headers_ok && traj.column(input_header(i)) == 1 + n + i;
  }
  check(headers_ok, "trajectory.csv header layout");

  std::vector<Eigen::VectorXd> xs, us;
  for (const auto& row : traj.rows) {
    Eigen::VectorXd x(n), u(m);
    for (int i = 0; i < n; ++i) x[i] = dmpc::parse_double(row[1 + i]);
    for (int i = 0; i < m; ++i) u[i] = dmpc::parse_double(row[1 + n + i]);
    xs.push_back(x);
    us.push_back(u);
  }
  double dyn_residual = 0.0;
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const Eigen::VectorXd next = discretize_step(sys, xs[k], us[k]);
    dyn_residual =
        std::max(dyn_residual, (next - xs[k + 1]).lpNorm<Eigen::Infinity>());
  }
  check(dyn_residual <= 1e-9, "dynamics replay residual " +
                                  format_double(dyn_residual) + " <= 1e-09");

  const dmpc::BoxSet xbox = sys.global_state_box();
  const dmpc::BoxSet ubox = sys.global_input_box();
  double box_violation = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    box_violation = std::max(box_violation, xbox.violation(xs[k]));
    box_violation = std::max(box_violation, ubox.violation(us[k]));
  }
  check(box_violation <= cfg.negotiation.feasibility_tol,
        "state/input boxes, violation " + format_double(box_violation));

  // Trace: per-step monotone J, bounded residuals, horizons in range.
  const CsvTable trace = dmpc::read_csv((dir / "trace.csv").string());
  const int col_k = trace.column("k");
  const int col_j = trace.column("J");
  const int col_res = trace.column("feas_residual");
  std::vector<int> col_nc(num_agents);
  bool trace_cols = col_k >= 0 && col_j >= 0 && col_res >= 0;
  for (int i = 0; i < num_agents; ++i) {
    col_nc[i] = trace.column("Nc" + std::to_string(i + 1));
    trace_cols = trace_cols && col_nc[i] >= 0;
  }
  check(trace_cols, "trace.csv header layout");
  if (!trace_cols) return 1;

  bool mono_ok = true, residual_ok = true, nc_ok = true;
  std::string prev_k;
  double prev_j = 0.0;
  for (const auto& row : trace.rows) {
    const double j = dmpc::parse_double(row[col_j]);
    if (row[col_k] == prev_k &&
        j > prev_j + 1e-9 * (1.0 + std::abs(prev_j))) {
      mono_ok = false;
    }
    prev_k = row[col_k];
    prev_j = j;
    if (dmpc::parse_double(row[col_res]) > cfg.negotiation.feasibility_tol) {
      residual_ok = false;
    }
    for (int i = 0; i < num_agents; ++i) {
      const double nc = dmpc::parse_double(row[col_nc[i]]);
      if (nc < 1 || nc > cfg.negotiation.prediction_horizon) nc_ok = false;
    }
  }
  check(mono_ok, "trace objective non-increasing within each step");
  check(residual_ok, "trace feasibility residuals within tolerance");
  check(nc_ok, "trace control horizons within [1, prediction horizon]");

  std::cout << (failures == 0 ? "audit passed" : "audit FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Cooperative distributed MPC simulator for the three-mass benchmark"};
  app.require_subcommand(1);

  CommonArgs args;
  app.add_option("--config", args.config_path,
                 "Scenario file (JSON); defaults to the pinned benchmark");
  app.add_option("--out-dir", args.out_dir_flag,
                 "Artifact directory (overrides DMPC_OUT_DIR and the config)");
  app.add_option("--jobs", args.jobs,
                 "Worker threads for parallel sections (<= 0: auto)");
  std::uint64_t seed_value = 0;
  CLI::Option* seed_opt = app.add_option(
      "--seed", seed_value, "Override the terminal-design sampling seed");

  CLI::App* run = app.add_subcommand("run", "Closed-loop simulation");
  run->fallthrough();
  CLI::App* sweep =
      app.add_subcommand("sweep", "Control-horizon sweep experiment");
  sweep->fallthrough();
  std::string nc2_text = "8:4:24", nc3_text = "8:4:24";
  sweep->add_option("--nc2", nc2_text, "Agent-2 grid (int or start:step:stop)");
  sweep->add_option("--nc3", nc3_text, "Agent-3 grid (int or start:step:stop)");
  CLI::App* adapt = app.add_subcommand(
      "adapt", "Closed-loop run with shrinking horizons and mean updates");
  adapt->fallthrough();
  double epsilon = 5e-6;
  CLI::Option* eps_opt = adapt->add_option(
      "--epsilon", epsilon, "Shrink slack: accept Nc-1 when the cost increase "
                            "stays below this");
  CLI::App* validate = app.add_subcommand(
      "validate-terminal", "Design (or check pinned) terminal ingredients");
  validate->fallthrough();
  CLI::App* audit = app.add_subcommand(
      "audit", "Recheck CSV artifacts in the output directory");
  audit->fallthrough();

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) args.seed = seed_value;

  try {
    if (run->parsed()) return cmd_run(args, false, 0.0, false);
    if (sweep->parsed()) return cmd_sweep(args, nc2_text, nc3_text);
    if (adapt->parsed()) {
      return cmd_run(args, true, epsilon, static_cast<bool>(*eps_opt));
    }
    if (validate->parsed()) return cmd_validate_terminal(args);
    if (audit->parsed()) return cmd_audit(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
