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

#ifndef DMPC_SCENARIO_HPP
#define DMPC_SCENARIO_HPP

#include <optional>
#include <string>

#include "dmpc/terminal_design.hpp"
#include "dmpc/three_mass.hpp"

namespace dmpc {

/// Everything needed to reproduce a run, loaded from a JSON file with a
/// schema_version field.  Unknown keys are hard errors.  Defaults encode
/// the pinned benchmark scenario.
struct ScenarioConfig {
  ThreeMassParams params;
  ThreeMassWeights weights = ThreeMassWeights::defaults();
  ThreeMassBounds bounds;
  double sample_time = 0.15;
  Discretization discretization = Discretization::RK4;
  Eigen::VectorXd initial_state;     ///< default (0.8, 0, -0.6, 0, 1.0, 0)
  int steps = 60;                    ///< T_sim
  Eigen::VectorXi control_horizons;  ///< default (10, 12, 16)
  NegotiationConfig negotiation;     ///< prediction horizon default 16
  TerminalDesignOptions terminal;
  /// When present, reused instead of running the design.
  std::optional<TerminalIngredients> pinned_ingredients;
  std::string output_dir;  ///< empty means unset

  static ScenarioConfig defaults();

  PartitionedSystem make_system() const;
  SimulationOptions make_simulation_options() const;
  /// Pinned ingredients when present (validated), otherwise a fresh design.
  TerminalIngredients make_terminal(const PartitionedSystem& sys,
                                    int jobs) const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

ScenarioConfig load_scenario(const std::string& path);
/// `origin` names the source (file path) in diagnostics.
ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& origin);

/// Terminal ingredients as JSON (matrices row-major), so a validated design
/// can be pinned into a scenario file.
std::string ingredients_to_json(const TerminalIngredients& term);

}  // namespace dmpc

#endif  // DMPC_SCENARIO_HPP
