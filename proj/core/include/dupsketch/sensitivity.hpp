#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

/// Overestimates v of the l_p sensitivities with v_i >= beta * tau_i.
struct SensitivityVector {
  Vector values;
  double beta = 1.0;
};

/// tau_i = max_x |<a_i, x>|^p / ||Ax||_p^p, capped at 1. Zero rows give 0.
/// p = 2 uses the pseudo-inverse quadratic form, p = 1 an exact LP and
/// other p the reweighted least-squares solver.
double lp_sensitivity(const Matrix& a, Eigen::Index i, double p);

/// Same against an arbitrary row block: max_x |<row, x>|^p / ||M x||_p^p,
/// capped at 1 and equal to 1 when row has a component outside rowspace(M).
double lp_sensitivity_against(const Matrix& m, const Vector& row, double p);

Vector lp_sensitivities(const Matrix& a, double p);

/// The per-unit-sensitivity sampling rate
/// C1 (C2 d log(d / eps) + log(1 / delta)) / eps^2.
double sensitivity_rate(Eigen::Index d, const Config& cfg);

/// Bernoulli row sampling at p_i = min(1, rate * v_i / beta); kept rows are
/// rescaled by p_i^{-1/p}. Randomness is counter based on (seed, i).
WeightedCoreset sensitivity_sample(const Matrix& a, const SensitivityVector& v,
                                   const Config& cfg, std::uint64_t seed,
                                   const std::vector<Tag>* tags = nullptr);

/// High-probability cap on the output size of sensitivity_sample:
/// min(n, 2 sum_i p_i + 8 log(1 / delta) + 8).
double sensitivity_sample_bound(const SensitivityVector& v, Eigen::Index d, const Config& cfg);

/// (sum_i tau_i, d^{max(p/2, 1)}).
std::pair<double, double> sensitivity_sum_bound_check(const Matrix& a, double p);

}  // namespace dupsketch
