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

#include "dmpc/terminal.hpp"

#include <Eigen/Eigenvalues>

namespace dmpc {

void TerminalIngredients::validate() const {
  const auto n = weight.rows();
  if (weight.cols() != n || gain.cols() != n || gain.rows() < 1) {
    throw TerminalDesignError("terminal ingredients: dimension mismatch");
  }
  if ((weight - weight.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw TerminalDesignError("terminal ingredients: P is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(weight);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw TerminalDesignError(
        "terminal ingredients: P is not positive definite");
  }
  if (!(alpha > 0.0)) {
    throw TerminalDesignError("terminal ingredients: alpha must be positive");
  }
}

}  // namespace dmpc
