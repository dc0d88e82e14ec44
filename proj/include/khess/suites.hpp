// Property suites behind `khess verify`. Each runs at desk scale and returns
// a machine-readable report; a failing suite carries the first failing
// sample so it can be replayed.
#pragma once

#include "khess/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace khess {

struct SuiteOptions {
  /// Random draws per configuration; the suite default when absent. Zero
  /// gives a vacuous pass flagged "no samples".
  std::optional<std::size_t> samples;
  std::uint64_t seed = 1;
};

struct SuiteResult {
  std::string suite;
  bool pass = false;
  json report;  ///< {"suite", "pass", "samples", "statistics", ["failure"], ["note"]}
};

const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for an unknown suite name.
SuiteResult run_suite(const std::string& name, const SuiteOptions& options = {});

}  // namespace khess
