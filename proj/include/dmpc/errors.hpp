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

#ifndef DMPC_ERRORS_HPP
#define DMPC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dmpc {

/// Malformed model or plan data: dimension mismatches, empty boxes,
/// horizons out of range, bad configuration values.
struct InvalidArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values produced by the dynamics during integration.
struct IntegrationBlowupError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Terminal-ingredient design failed (Riccati divergence, empty terminal
/// set, decrease-condition breach on a certified sample).
struct TerminalDesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A negotiation precondition or certified invariant was violated at
/// runtime: infeasible warm start, objective increase beyond tolerance,
/// infeasible shifted candidate.
struct ProtocolViolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scenario / CLI configuration rejected during validation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dmpc

#endif  // DMPC_ERRORS_HPP
