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

#include "dmpc/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

namespace dmpc {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw ConfigError(origin + ": " + what);
}

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed,
                         const std::string& origin) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (item.key() == name) {
        known = true;
        break;
      }
    }
    if (!known) fail(origin, "unknown key '" + item.key() + "' in " + where);
  }
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_double(const json& v, const std::string& field,
                 const std::string& origin) {
  if (!v.is_number()) fail(origin, field + " must be a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& field,
           const std::string& origin) {
  if (!v.is_number_integer()) fail(origin, field + " must be an integer");
  return v.get<int>();
}

bool as_bool(const json& v, const std::string& field,
             const std::string& origin) {
  if (!v.is_boolean()) fail(origin, field + " must be a boolean");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field,
                      const std::string& origin) {
  if (!v.is_string()) fail(origin, field + " must be a string");
  return v.get<std::string>();
}

Eigen::VectorXd as_vector(const json& v, int size, const std::string& field,
                          const std::string& origin) {
  if (!v.is_array() || static_cast<int>(v.size()) != size) {
    fail(origin, field + " must be an array of " + std::to_string(size) +
                     " numbers");
  }
  Eigen::VectorXd out(size);
  for (int i = 0; i < size; ++i) {
    out[i] = as_double(v[i], field + "[" + std::to_string(i) + "]", origin);
  }
  return out;
}

Eigen::MatrixXd as_matrix(const json& v, const std::string& field,
                          const std::string& origin) {
  if (!v.is_array() || v.empty()) {
    fail(origin, field + " must be a non-empty array of rows");
  }
  const int rows = static_cast<int>(v.size());
  if (!v[0].is_array() || v[0].empty()) {
    fail(origin, field + " rows must be non-empty arrays");
  }
  const int cols = static_cast<int>(v[0].size());
  Eigen::MatrixXd out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!v[r].is_array() || static_cast<int>(v[r].size()) != cols) {
      fail(origin, field + " rows must all have " + std::to_string(cols) +
                       " entries");
    }
    for (int c = 0; c < cols; ++c) {
      out(r, c) = as_double(v[r][c],
                            field + "[" + std::to_string(r) + "][" +
                                std::to_string(c) + "]",
                            origin);
    }
  }
  return out;
}

void parse_system(const json& obj, ScenarioConfig& cfg,
                  const std::string& origin) {
  reject_unknown_keys(obj, "system",
                      {"masses", "ground_spring", "coupling", "damping",
                       "sample_time", "discretization", "position_bound",
                       "velocity_bound", "input_bound"},
                      origin);
  if (const json* v = find(obj, "masses")) {
    const Eigen::VectorXd m = as_vector(*v, 3, "system.masses", origin);
    cfg.params.mass1 = m[0];
    cfg.params.mass2 = m[1];
    cfg.params.mass3 = m[2];
  }
  if (const json* v = find(obj, "ground_spring")) {
    cfg.params.k0 = as_double(*v, "system.ground_spring", origin);
  }
  if (const json* v = find(obj, "coupling")) {
    cfg.params.kc = as_double(*v, "system.coupling", origin);
  }
  if (const json* v = find(obj, "damping")) {
    cfg.params.hd = as_double(*v, "system.damping", origin);
  }
  if (const json* v = find(obj, "sample_time")) {
    cfg.sample_time = as_double(*v, "system.sample_time", origin);
  }
  if (const json* v = find(obj, "discretization")) {
    const std::string name = as_string(*v, "system.discretization", origin);
    if (name == "rk4") {
      cfg.discretization = Discretization::RK4;
    } else if (name == "euler") {
      cfg.discretization = Discretization::Euler;
    } else {
      fail(origin, "system.discretization must be 'rk4' or 'euler', got '" +
                       name + "'");
    }
  }
  if (const json* v = find(obj, "position_bound")) {
    cfg.bounds.position = as_double(*v, "system.position_bound", origin);
  }
  if (const json* v = find(obj, "velocity_bound")) {
    cfg.bounds.velocity = as_double(*v, "system.velocity_bound", origin);
  }
  if (const json* v = find(obj, "input_bound")) {
    cfg.bounds.input = as_double(*v, "system.input_bound", origin);
  }
}

void parse_negotiation(const json& obj, ScenarioConfig& cfg,
                       const std::string& origin) {
  reject_unknown_keys(obj, "negotiation",
                      {"max_iterations", "convergence_tol", "feasibility_tol",
                       "adapt_horizons", "epsilon_shrink", "nc0_update",
                       "tail_law"},
                      origin);
  NegotiationConfig& n = cfg.negotiation;
  if (const json* v = find(obj, "max_iterations")) {
    n.max_iterations = as_int(*v, "negotiation.max_iterations", origin);
  }
  if (const json* v = find(obj, "convergence_tol")) {
    n.convergence_tol = as_double(*v, "negotiation.convergence_tol", origin);
  }
  if (const json* v = find(obj, "feasibility_tol")) {
    n.feasibility_tol = as_double(*v, "negotiation.feasibility_tol", origin);
  }
  if (const json* v = find(obj, "adapt_horizons")) {
    n.adapt_horizons = as_bool(*v, "negotiation.adapt_horizons", origin);
  }
  if (const json* v = find(obj, "epsilon_shrink")) {
    n.epsilon_shrink = as_double(*v, "negotiation.epsilon_shrink", origin);
  }
  if (const json* v = find(obj, "nc0_update")) {
    const std::string name = as_string(*v, "negotiation.nc0_update", origin);
    if (name == "fixed") {
      n.nc0_update = Nc0Update::Fixed;
    } else if (name == "mean_of_previous_step") {
      n.nc0_update = Nc0Update::MeanOfPreviousStep;
    } else {
      fail(origin,
           "negotiation.nc0_update must be 'fixed' or "
           "'mean_of_previous_step', got '" +
               name + "'");
    }
  }
  if (const json* v = find(obj, "tail_law")) {
    const std::string name = as_string(*v, "negotiation.tail_law", origin);
    if (name == "terminal") {
      n.tail_law = TailLaw::Terminal;
    } else if (name == "hold_last") {
      n.tail_law = TailLaw::HoldLast;
    } else {
      fail(origin, "negotiation.tail_law must be 'terminal' or 'hold_last', "
                   "got '" +
                       name + "'");
    }
  }
}

void parse_solver(const json& obj, NlpOptions& s, const std::string& origin) {
  reject_unknown_keys(obj, "solver",
                      {"optimality_tol", "max_outer", "max_inner",
                       "penalty_init", "penalty_growth", "penalty_max",
                       "history", "max_line_search"},
                      origin);
  if (const json* v = find(obj, "optimality_tol")) {
    s.optimality_tol = as_double(*v, "solver.optimality_tol", origin);
  }
  if (const json* v = find(obj, "max_outer")) {
    s.max_outer = as_int(*v, "solver.max_outer", origin);
  }
  if (const json* v = find(obj, "max_inner")) {
    s.max_inner = as_int(*v, "solver.max_inner", origin);
  }
  if (const json* v = find(obj, "penalty_init")) {
    s.penalty_init = as_double(*v, "solver.penalty_init", origin);
  }
  if (const json* v = find(obj, "penalty_growth")) {
    s.penalty_growth = as_double(*v, "solver.penalty_growth", origin);
  }
  if (const json* v = find(obj, "penalty_max")) {
    s.penalty_max = as_double(*v, "solver.penalty_max", origin);
  }
  if (const json* v = find(obj, "history")) {
    s.history = as_int(*v, "solver.history", origin);
  }
  if (const json* v = find(obj, "max_line_search")) {
    s.max_line_search = as_int(*v, "solver.max_line_search", origin);
  }
}

void parse_terminal(const json& obj, ScenarioConfig& cfg,
                    const std::string& origin) {
  reject_unknown_keys(
      obj, "terminal",
      {"decrease_margin", "num_samples", "seed", "ingredients"}, origin);
  if (const json* v = find(obj, "decrease_margin")) {
    cfg.terminal.decrease_margin =
        as_double(*v, "terminal.decrease_margin", origin);
  }
  if (const json* v = find(obj, "num_samples")) {
    cfg.terminal.num_samples = as_int(*v, "terminal.num_samples", origin);
  }
  if (const json* v = find(obj, "seed")) {
    if (!v->is_number_unsigned()) {
      fail(origin, "terminal.seed must be a non-negative integer");
    }
    cfg.terminal.seed = v->get<std::uint64_t>();
  }
  if (const json* v = find(obj, "ingredients")) {
    if (v->is_null()) return;
    if (!v->is_object()) {
      fail(origin, "terminal.ingredients must be an object or null");
    }
    reject_unknown_keys(*v, "terminal.ingredients",
                        {"gain", "weight", "alpha"}, origin);
    const json* gain = find(*v, "gain");
    const json* weight = find(*v, "weight");
    const json* alpha = find(*v, "alpha");
    if (!gain || !weight || !alpha) {
      fail(origin,
           "terminal.ingredients needs all of gain, weight and alpha");
    }
    TerminalIngredients term;
    term.gain = as_matrix(*gain, "terminal.ingredients.gain", origin);
    term.weight = as_matrix(*weight, "terminal.ingredients.weight", origin);
    term.alpha = as_double(*alpha, "terminal.ingredients.alpha", origin);
    cfg.pinned_ingredients = std::move(term);
  }
}

}  // namespace

ScenarioConfig ScenarioConfig::defaults() {
  ScenarioConfig cfg;
  cfg.initial_state = Eigen::VectorXd(6);
  cfg.initial_state << 0.8, 0.0, -0.6, 0.0, 1.0, 0.0;
  cfg.control_horizons = Eigen::Vector3i(10, 12, 16);
  cfg.negotiation.prediction_horizon = 16;
  return cfg;
}

PartitionedSystem ScenarioConfig::make_system() const {
  return build_benchmark(params, weights, bounds, sample_time,
                         discretization);
}

SimulationOptions ScenarioConfig::make_simulation_options() const {
  SimulationOptions opts;
  opts.initial_state = initial_state;
  opts.steps = steps;
  opts.control_horizons = control_horizons;
  opts.negotiation = negotiation;
  return opts;
}

TerminalIngredients ScenarioConfig::make_terminal(
    const PartitionedSystem& sys, int jobs) const {
  if (pinned_ingredients) {
    if (pinned_ingredients->gain.cols() != sys.state_dim() ||
        pinned_ingredients->gain.rows() != sys.input_dim()) {
      throw ConfigError(
          "scenario: pinned terminal.ingredients.gain does not match the "
          "system dimensions");
    }
    TerminalIngredients term = *pinned_ingredients;
    term.validate();
    return term;
  }
  TerminalDesignOptions opts = terminal;
  opts.jobs = jobs;
  return design_terminal(sys, opts);
}

void ScenarioConfig::validate() const {
  const auto bad = [](const std::string& what) {
    throw ConfigError("scenario: " + what);
  };
  if (params.mass1 <= 0 || params.mass2 <= 0 || params.mass3 <= 0) {
    bad("system.masses must be positive");
  }
  if (sample_time <= 0) bad("system.sample_time must be positive");
  if (bounds.position <= 0 || bounds.velocity <= 0 || bounds.input <= 0) {
    bad("system bounds must be positive");
  }
  if (weights.state.size() != 6 || weights.input.size() != 3) {
    bad("weights must be sized 6 (state) and 3 (input)");
  }
  if (weights.state.minCoeff() < 0) bad("weights.state must be >= 0");
  if (weights.input.minCoeff() <= 0) bad("weights.input must be > 0");
  if (initial_state.size() != 6) bad("initial_state must have 6 entries");
  for (int i = 0; i < 3; ++i) {
    const double r = initial_state[2 * i];
    const double v = initial_state[2 * i + 1];
    if (std::abs(r) >= bounds.position || std::abs(v) >= bounds.velocity) {
      bad("initial_state[" + std::to_string(2 * i) + ".." +
          std::to_string(2 * i + 1) +
          "] must lie strictly inside the state box");
    }
  }
  if (steps < 0) bad("steps must be non-negative");
  const int np = negotiation.prediction_horizon;
  if (np < 1) bad("horizons.prediction must be at least 1");
  if (control_horizons.size() != 3) {
    bad("horizons.control must have 3 entries");
  }
  for (int i = 0; i < 3; ++i) {
    if (control_horizons[i] < 1 || control_horizons[i] > np) {
      bad("horizons.control[" + std::to_string(i) +
          "] must lie in [1, horizons.prediction]");
    }
  }
  if (negotiation.max_iterations < 1) {
    bad("negotiation.max_iterations must be at least 1");
  }
  if (negotiation.convergence_tol <= 0) {
    bad("negotiation.convergence_tol must be positive");
  }
  if (negotiation.feasibility_tol <= 0) {
    bad("negotiation.feasibility_tol must be positive");
  }
  if (negotiation.epsilon_shrink < 0) {
    bad("negotiation.epsilon_shrink must be non-negative");
  }
  const NlpOptions& s = negotiation.solver;
  if (s.optimality_tol <= 0) bad("solver.optimality_tol must be positive");
  if (s.max_outer < 1 || s.max_inner < 1) {
    bad("solver iteration limits must be at least 1");
  }
  if (s.penalty_init <= 0 || s.penalty_growth <= 1 || s.penalty_max <= 0) {
    bad("solver penalty schedule must satisfy init > 0, growth > 1, "
        "max > 0");
  }
  if (s.history < 1) bad("solver.history must be at least 1");
  if (s.max_line_search < 1) bad("solver.max_line_search must be at least 1");
  if (terminal.decrease_margin <= 0) {
    bad("terminal.decrease_margin must be positive");
  }
  if (terminal.num_samples < 1000) {
    bad("terminal.num_samples must be at least 1000");
  }
  if (pinned_ingredients) {
    if (pinned_ingredients->gain.rows() != 3 ||
        pinned_ingredients->gain.cols() != 6 ||
        pinned_ingredients->weight.rows() != 6 ||
        pinned_ingredients->weight.cols() != 6) {
      bad("terminal.ingredients matrices must be 3x6 (gain) and 6x6 "
          "(weight)");
    }
    if (!(pinned_ingredients->alpha > 0)) {
      bad("terminal.ingredients.alpha must be positive");
    }
  }
}

ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(origin, std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail(origin, "top level must be an object");
  reject_unknown_keys(root, "scenario",
                      {"schema_version", "system", "weights", "initial_state",
                       "steps", "horizons", "negotiation", "solver",
                       "terminal", "output_dir"},
                      origin);
  const json* version = find(root, "schema_version");
  if (!version) fail(origin, "missing schema_version");
  if (as_int(*version, "schema_version", origin) != kSchemaVersion) {
    fail(origin, "unsupported schema_version (expected " +
                     std::to_string(kSchemaVersion) + ")");
  }

  ScenarioConfig cfg = ScenarioConfig::defaults();
  if (const json* v = find(root, "system")) {
    if (!v->is_object()) fail(origin, "system must be an object");
    parse_system(*v, cfg, origin);
  }
  if (const json* v = find(root, "weights")) {
    if (!v->is_object()) fail(origin, "weights must be an object");
    reject_unknown_keys(*v, "weights", {"state", "input"}, origin);
    if (const json* w = find(*v, "state")) {
      cfg.weights.state = as_vector(*w, 6, "weights.state", origin);
    }
    if (const json* w = find(*v, "input")) {
      cfg.weights.input = as_vector(*w, 3, "weights.input", origin);
    }
  }
  if (const json* v = find(root, "initial_state")) {
    cfg.initial_state = as_vector(*v, 6, "initial_state", origin);
  }
  if (const json* v = find(root, "steps")) {
    cfg.steps = as_int(*v, "steps", origin);
  }
  if (const json* v = find(root, "horizons")) {
    if (!v->is_object()) fail(origin, "horizons must be an object");
    reject_unknown_keys(*v, "horizons", {"control", "prediction"}, origin);
    if (const json* h = find(*v, "control")) {
      if (!h->is_array() || h->size() != 3) {
        fail(origin, "horizons.control must be an array of 3 integers");
      }
      for (int i = 0; i < 3; ++i) {
        cfg.control_horizons[i] =
            as_int((*h)[i], "horizons.control[" + std::to_string(i) + "]",
                   origin);
      }
    }
    if (const json* h = find(*v, "prediction")) {
      cfg.negotiation.prediction_horizon =
          as_int(*h, "horizons.prediction", origin);
    }
  }
  if (const json* v = find(root, "negotiation")) {
    if (!v->is_object()) fail(origin, "negotiation must be an object");
    parse_negotiation(*v, cfg, origin);
  }
  if (const json* v = find(root, "solver")) {
    if (!v->is_object()) fail(origin, "solver must be an object");
    parse_solver(*v, cfg.negotiation.solver, origin);
  }
  if (const json* v = find(root, "terminal")) {
    if (!v->is_object()) fail(origin, "terminal must be an object");
    parse_terminal(*v, cfg, origin);
  }
  if (const json* v = find(root, "output_dir")) {
    cfg.output_dir = as_string(*v, "output_dir", origin);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path);
}

std::string ingredients_to_json(const TerminalIngredients& term) {
  json gain = json::array();
  for (Eigen::Index r = 0; r < term.gain.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < term.gain.cols(); ++c) {
      row.push_back(term.gain(r, c));
    }
    gain.push_back(std::move(row));
  }
  json weight = json::array();
  for (Eigen::Index r = 0; r < term.weight.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < term.weight.cols(); ++c) {
      row.push_back(term.weight(r, c));
    }
    weight.push_back(std::move(row));
  }
  json out;
  out["gain"] = std::move(gain);
  out["weight"] = std::move(weight);
  out["alpha"] = term.alpha;
  return out.dump(2);
}

}  // namespace dmpc
