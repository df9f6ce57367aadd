#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dupsketch/tools/acceptance.hpp"
#include "dupsketch/types.hpp"

namespace dupsketch::tools {

/// Bad flags, unknown algorithm ids, missing files. The CLI maps it to exit 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Ids accepted by run_experiment, in CLI order.
const std::vector<std::string>& algorithm_ids();
bool is_algorithm(std::string_view id);

/// Parameters of the synthetic data used when no input file is given.
/// Matrix algorithms draw A = L R + G; stream algorithms duplicate or
/// insert/delete `distinct` such rows.
struct SyntheticSource {
  std::int64_t coeff_range = 100;
  std::int64_t noise_range = 5000;
  /// Distinct rows in generated streams; 0 picks max(d, n / 50).
  std::size_t distinct = 0;
  /// Entry bound M for generated turnstile streams.
  std::int64_t entry_bound = 7;
  std::uint64_t data_seed = 1;
};

struct ExperimentConfig {
  std::string algorithm;
  std::size_t n = 10000;
  Eigen::Index d = 8;
  Eigen::Index k = 4;
  double p = 2.0;
  double eps = 0.5;
  double delta = 0.01;
  /// Oversampling constants C1 = C2.
  double c = 0.25;
  /// Subsampling levels for `turnstile` (0 = one level per halving).
  int levels = 0;
  std::vector<std::uint64_t> seeds{1};
  SyntheticSource synthetic;
  /// Data file; empty means synthetic. Tagged CSV for dedup-embed and
  /// robust, turnstile CSV for turnstile and bounded, PGM or tagged CSV
  /// (rows in order) for the matrix algorithms.
  std::string input;
  /// Report path; empty means stdout.
  std::string output;
  std::string format = "json";
  /// Worker threads for the seed fan-out (0 = hardware concurrency).
  int threads = 0;
  /// Include wall-clock runtimes. Off by default so reports are
  /// byte-identical across runs.
  bool timings = false;
  /// Acceptance criteria to run (empty = all).
  std::vector<int> criteria;

  /// Throws UsageError.
  void validate() const;
};

struct SeedMetrics {
  std::uint64_t seed = 0;
  /// All hard invariants held and no module error was raised.
  bool ok = true;
  std::string error;
  /// Algorithm-specific headline number: the achieved epsilon for
  /// embeddings, the cost ratio for coresets, the zeta factor for robust.
  double distortion = 0.0;
  std::size_t samples = 0;
  int passes = 0;
  std::size_t switches = 0;
  double runtime = 0.0;
  std::vector<std::pair<std::string, double>> extra;
};

struct Quantiles {
  double min = 0.0;
  double median = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

Quantiles quantiles(std::vector<double> values);

struct Report {
  ExperimentConfig config;
  std::string version;
  std::vector<SeedMetrics> seeds;
  std::vector<CriterionResult> criteria;
  bool ok = true;
};

/// Runs every seed (in parallel when threads != 1) and collects metrics.
/// Module errors are recorded per seed; only usage errors throw. `progress`
/// sees each acceptance criterion as it finishes.
Report run_experiment(const ExperimentConfig& config,
                      const std::function<void(const CriterionResult&)>& progress = {});

std::string report_json(const Report& report);
/// One row per seed (or per criterion for the acceptance suite).
std::string report_csv(const Report& report);
/// Writes in config.format to config.output, or to stdout when empty.
void write_report(const Report& report);

std::string library_version();

}  // namespace dupsketch::tools
