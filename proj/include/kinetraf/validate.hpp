#pragma once

#include <string>
#include <vector>

#include "kinetraf/config.hpp"

namespace kinetraf {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;  // worst observed deviation
  double limit = 0.0;
  std::string detail;
};

/// Model self-checks run by the `validate` command: matrix stochasticity,
/// matrix/direct oracle agreement, mass conservation of the RHS,
/// indifferentiability of identical classes, grid independence of the
/// equilibria and the bifurcation of the lowest speed node.
std::vector<CheckResult> run_validation(const RunConfig& config);

}  // namespace kinetraf
