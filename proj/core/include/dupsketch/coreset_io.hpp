#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "dupsketch/types.hpp"

namespace dupsketch {

struct CoresetHeader {
  double p = 2.0;
  double eps = 0.5;
  std::uint64_t seed = 0;
  /// 0 when no condition-number bound was in force.
  double kappa_bound = 0.0;
};

/// {"header": {p, eps, seed, kappa_bound}, "entries": [{tag, weight, row}]}.
/// Untagged entries carry "tag": null. Doubles round-trip exactly.
void write_coreset_json(std::ostream& out, const WeightedCoreset& coreset, const CoresetHeader& header);
std::string coreset_to_json(const WeightedCoreset& coreset, const CoresetHeader& header);

struct LoadedCoreset {
  WeightedCoreset coreset;
  CoresetHeader header;
};

LoadedCoreset read_coreset_json(std::istream& in);
LoadedCoreset coreset_from_json(const std::string& text);

}  // namespace dupsketch
