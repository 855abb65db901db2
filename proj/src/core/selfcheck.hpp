// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

namespace khan {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Names of every registered property suite, in run order.
std::vector<std::string> selfcheck_names();

// Run the suites whose name contains `filter` (empty = all). Each suite is
// self-contained and deterministic.
std::vector<CheckResult> run_selfchecks(const std::string& filter = "");

}  // namespace khan
