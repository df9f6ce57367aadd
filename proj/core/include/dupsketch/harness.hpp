#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "dupsketch/types.hpp"

namespace dupsketch {

/// A = L R + G with L (n x k), R (k x d) uniform integers in
/// [-coeff_range, coeff_range] and G (n x d) uniform integers in
/// [-noise_range, noise_range].
Matrix gen_synthetic(Eigen::Index n, Eigen::Index d, Eigen::Index k, std::int64_t coeff_range,
                     std::int64_t noise_range, std::uint64_t seed);

struct SyntheticParts {
  Matrix l;
  Matrix r;
  Matrix a;
};
/// Same draw as gen_synthetic, keeping the factors.
SyntheticParts gen_synthetic_parts(Eigen::Index n, Eigen::Index d, Eigen::Index k,
                                   std::int64_t coeff_range, std::int64_t noise_range,
                                   std::uint64_t seed);

/// I.i.d. standard Gaussian matrix.
Matrix gen_gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

/// Tagged stream of `length` elements over the rows of `distinct` (row r
/// carries tag r + 1). Every row occurs at least once; the remaining slots
/// draw rows uniformly; order is a uniform shuffle.
std::vector<TaggedRow> duplicate_stream(const Matrix& distinct, std::size_t length,
                                        std::uint64_t seed);

/// Turnstile stream of `length` updates over `distinct` distinct nonzero
/// integer rows in {-bound, ..., bound}^dim. Deletions only remove extra
/// copies, so every frequency stays positive and every row survives.
std::vector<TurnstileUpdate> turnstile_stream(Eigen::Index distinct, Eigen::Index dim,
                                              std::int64_t bound, std::size_t length,
                                              std::uint64_t seed, double delete_rate = 0.3);

/// Extremes of ||S x||_2 / ||A x||_2 over x in rowspace(A). S may have any
/// number of rows; a zero S gives (0, 0).
std::pair<double, double> spectral_distortion(const Matrix& a, const Matrix& s);

/// max over x in rowspace(A_S) of ||A x||_inf / ||A_S x||_inf, one LP per
/// row of A. Rows orthogonal to rowspace(A_S) are skipped and counted.
struct LinfDistortion {
  double phi = 1.0;
  std::size_t skipped = 0;
};
LinfDistortion measure_distortion_linf(const Matrix& a, const std::vector<Eigen::Index>& subset);

/// Binary (P5) or ASCII (P2) 8-bit grayscale PGM; image rows become matrix rows.
Matrix read_pgm(std::istream& in);
Matrix read_pgm_file(const std::string& path);

}  // namespace dupsketch
