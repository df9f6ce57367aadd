#pragma once

#include <cstdint>
#include <vector>

namespace dupsketch {

/// Upper tail Pr[X >= stat] for a chi-square variable with `dof` degrees.
double chi_square_pvalue(double stat, double dof);

/// Pearson goodness of fit of observed counts against expected
/// probabilities (which must sum to 1). Returns the p-value.
double chi_square_gof(const std::vector<std::uint64_t>& observed,
                      const std::vector<double>& probabilities);

struct KsResult {
  double statistic = 0.0;
  double pvalue = 0.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic Kolmogorov law
/// (Stephens' small-sample correction).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Survival function of the Kolmogorov distribution.
double kolmogorov_sf(double lambda);

}  // namespace dupsketch
