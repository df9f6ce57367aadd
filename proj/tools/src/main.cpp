#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dupsketch/tools/experiment.hpp"

using namespace dupsketch::tools;

namespace {

// "--seeds 5" runs seed, seed+1, ..., seed+4; "--seeds 3,9,27" runs that list.
std::vector<std::uint64_t> parse_seeds(const std::string& spec, std::uint64_t first) {
  std::vector<std::uint64_t> out;
  if (spec.empty()) return {first};
  try {
    if (spec.find(',') == std::string::npos) {
      const auto count = std::stoull(spec);
      for (std::uint64_t i = 0; i < count; ++i) out.push_back(first + i);
    } else {
      std::stringstream ss(spec);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stoull(item));
    }
  } catch (const std::exception&) {
    throw UsageError("--seeds expects a count or a comma separated list");
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketches and coresets for duplicated, turnstile and low-rank data"};
  app.set_version_flag("--version", library_version());
  app.require_subcommand(1);
  app.fallthrough();

  ExperimentConfig cfg;
  std::uint64_t seed = 1;
  std::string seeds;
  app.add_option("--p", cfg.p, "Norm exponent p >= 1")->capture_default_str();
  app.add_option("--eps", cfg.eps, "Accuracy in (0, 1)")->capture_default_str();
  app.add_option("--delta", cfg.delta, "Failure probability")->capture_default_str();
  app.add_option("--k", cfg.k, "Target rank")->capture_default_str();
  app.add_option("--seed", seed, "First seed")->capture_default_str();
  app.add_option("--seeds", seeds, "Seed count, or a comma separated seed list");
  app.add_option("--input", cfg.input, "Data file (CSV stream, turnstile CSV or PGM image)");
  app.add_option("--out", cfg.output, "Report path (default stdout)");
  app.add_option("--format", cfg.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--n", cfg.n, "Rows or stream length of synthetic data")->capture_default_str();
  app.add_option("--d", cfg.d, "Dimension of synthetic data")->capture_default_str();
  app.add_option("--c", cfg.c, "Oversampling constants C1 = C2")->capture_default_str();
  app.add_option("--distinct", cfg.synthetic.distinct, "Distinct rows in synthetic streams (0 = max(d, n/50))");
  app.add_option("--coeff-range", cfg.synthetic.coeff_range, "L and R entries in [-r, r]")->capture_default_str();
  app.add_option("--noise-range", cfg.synthetic.noise_range, "G entries in [-r, r]")->capture_default_str();
  app.add_option("--entry-bound", cfg.synthetic.entry_bound, "Turnstile rows in [-M, M]^d")->capture_default_str();
  app.add_option("--data-seed", cfg.synthetic.data_seed, "Seed of the synthetic data")->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads for the seed fan-out (0 = all cores)");
  app.add_flag("--timings", cfg.timings, "Include wall-clock runtimes in the report");

  app.add_subcommand("dedup-embed", "One-pass subspace embedding of a tagged stream with duplicates");
  app.add_subcommand("online-sample", "Online sensitivity sampling of a matrix");
  app.add_subcommand("linf-coreset", "Ridge-leverage strong coreset for l_inf subspace approximation");
  app.add_subcommand("lp-approx", "l_p subspace approximation through exponential scaling");
  auto* turnstile = app.add_subcommand("turnstile", "Multipass embedding of a turnstile stream");
  turnstile->add_option("--levels", cfg.levels, "Subsampling levels t (0 = log2 n)");
  app.add_subcommand("bounded", "Bounded-entries structure queried at random integer points");
  app.add_subcommand("robust", "Sketch-switching sensitivities against the oblivious baseline");
  auto* acceptance = app.add_subcommand("acceptance", "Run the acceptance suite");
  acceptance->add_option("--criteria", cfg.criteria, "Criteria to run (default all)")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.algorithm = app.get_subcommands().front()->get_name();
    cfg.seeds = parse_seeds(seeds, seed);
    const auto report = run_experiment(cfg, [](const CriterionResult& r) {
      std::cerr << format_criterion(r) << std::endl;
    });
    write_report(report);
    return report.ok ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
