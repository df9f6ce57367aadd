#include "dupsketch/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "dupsketch/types.hpp"

namespace dupsketch {

double chi_square_pvalue(double stat, double dof) {
  if (dof <= 0) throw Error("chi_square_pvalue: dof must be positive");
  if (stat <= 0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

double chi_square_gof(const std::vector<std::uint64_t>& observed,
                      const std::vector<double>& probabilities) {
  if (observed.size() != probabilities.size() || observed.size() < 2) {
    throw Error("chi_square_gof: need matching vectors with >= 2 cells");
  }
  double total = 0.0;
  for (const auto c : observed) total += static_cast<double>(c);
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * probabilities[i];
    if (expected <= 0.0) throw Error("chi_square_gof: zero expected count");
    const double diff = static_cast<double>(observed[i]) - expected;
    stat += diff * diff / expected;
  }
  return chi_square_pvalue(stat, static_cast<double>(observed.size() - 1));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sq = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.pvalue = kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

}  // namespace dupsketch
