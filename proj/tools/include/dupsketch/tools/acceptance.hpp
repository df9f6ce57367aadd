#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace dupsketch::tools {

inline constexpr int kCriteriaCount = 14;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  /// Short human-readable summary of what was measured.
  std::string detail;
  std::vector<std::pair<std::string, double>> metrics;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  /// Criteria to run, empty = all.
  std::vector<int> only;
  /// Every instance and sampler seed is derived from this one.
  std::uint64_t seed = 1;
  /// Called after each criterion finishes.
  std::function<void(const CriterionResult&)> on_result;
};

std::string criterion_title(int id);

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// "PASS  3  online dominance: ..." style line.
std::string format_criterion(const CriterionResult& r, bool with_time = true);

}  // namespace dupsketch::tools
