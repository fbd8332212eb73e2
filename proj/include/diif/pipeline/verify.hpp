#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace diif {

struct CheckResult {
  std::string name;
  bool passed = false;
  // Reported only; does not affect the overall verdict.
  bool informational = false;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 7;
  std::optional<std::filesystem::path> golden_dir;
};

/// Quick oracle and invariant checks on small random instances: batched vs
/// sequential decode, grouping and slicing laws, ensemble weights, boundary
/// behaviour, analytic gradients, and MAC accounting.
std::vector<CheckResult> run_self_checks(const VerifyOptions& options = {});

}  // namespace diif
