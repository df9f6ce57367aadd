#include "dupsketch/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "dupsketch/hash.hpp"
#include "dupsketch/solvers.hpp"

namespace dupsketch {

SyntheticParts gen_synthetic_parts(Eigen::Index n, Eigen::Index d, Eigen::Index k,
                                   std::int64_t coeff_range, std::int64_t noise_range,
                                   std::uint64_t seed) {
  if (n < 1 || d < 1) throw Error("gen_synthetic: dimensions must be positive");
  if (k < 0 || k > std::min(n, d)) throw Error("gen_synthetic: k must lie in [0, min(n, d)]");
  if (coeff_range < 0 || noise_range < 0) throw Error("gen_synthetic: ranges must be >= 0");
  Rng rng(seed);
  auto draw = [&](std::int64_t r) { return static_cast<double>(rng.uniform_int(-r, r)); };
  Matrix l(n, k);
  Matrix r(k, d);
  for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = draw(coeff_range);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = draw(coeff_range);
  Matrix a = l * r;
  if (noise_range > 0) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] += draw(noise_range);
  }
  return {std::move(l), std::move(r), std::move(a)};
}

Matrix gen_synthetic(Eigen::Index n, Eigen::Index d, Eigen::Index k, std::int64_t coeff_range,
                     std::int64_t noise_range, std::uint64_t seed) {
  return gen_synthetic_parts(n, d, k, coeff_range, noise_range, seed).a;
}

Matrix gen_gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix a(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
  }
  return a;
}

std::vector<TaggedRow> duplicate_stream(const Matrix& distinct, std::size_t length,
                                        std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(distinct.rows());
  if (length < m) throw Error("duplicate_stream: length must cover every distinct row");
  Rng rng(seed);
  std::vector<std::size_t> order(length);
  for (std::size_t i = 0; i < length; ++i) {
    order[i] = i < m ? i : static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1));
  }
  // Fisher-Yates with the seeded generator keeps output library independent.
  for (std::size_t i = length; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<TaggedRow> out;
  out.reserve(length);
  for (const auto r : order) {
    out.push_back({static_cast<Tag>(r + 1), distinct.row(static_cast<Eigen::Index>(r)).transpose()});
  }
  return out;
}

std::vector<TurnstileUpdate> turnstile_stream(Eigen::Index distinct, Eigen::Index dim,
                                              std::int64_t bound, std::size_t length,
                                              std::uint64_t seed, double delete_rate) {
  const auto m = static_cast<std::size_t>(distinct);
  if (length < m) throw Error("turnstile_stream: length must cover every distinct row");
  double cells = 1.0;
  for (Eigen::Index c = 0; c < dim; ++c) cells *= static_cast<double>(2 * bound + 1);
  if (static_cast<double>(m) > cells - 1.0) throw Error("turnstile_stream: too many distinct rows");
  Rng rng(seed);
  std::set<std::vector<std::int64_t>> used;
  std::vector<std::vector<std::int64_t>> rows;
  while (rows.size() < m) {
    std::vector<std::int64_t> r(static_cast<std::size_t>(dim));
    for (auto& v : r) v = rng.uniform_int(-bound, bound);
    if (std::all_of(r.begin(), r.end(), [](std::int64_t v) { return v == 0; })) continue;
    if (used.insert(r).second) rows.push_back(r);
  }
  std::vector<std::int64_t> count(m, 0);
  std::vector<std::size_t> absent(m);
  for (std::size_t r = 0; r < m; ++r) absent[r] = r;
  std::vector<TurnstileUpdate> out;
  out.reserve(length);
  for (std::size_t step = 0; step < length; ++step) {
    const std::size_t left = length - step;
    std::size_t r = 0;
    int sign = +1;
    if (absent.size() == left || (!absent.empty() && rng.bernoulli(static_cast<double>(absent.size()) / left))) {
      const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(absent.size()) - 1));
      r = absent[k];
      absent[k] = absent.back();
      absent.pop_back();
    } else {
      r = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(m) - 1));
      if (count[r] >= 2 && rng.bernoulli(delete_rate)) sign = -1;
      if (count[r] == 0) {
        absent.erase(std::find(absent.begin(), absent.end(), r));
      }
    }
    count[r] += sign;
    out.push_back({sign, rows[r]});
  }
  return out;
}

std::pair<double, double> spectral_distortion(const Matrix& a, const Matrix& s) {
  if (s.cols() != a.cols()) throw Error("spectral_distortion: column mismatch");
  const GramFactor g(a, a.cols());
  if (g.rank() == 0) throw Error("spectral_distortion: A is zero");
  if (s.rows() == 0) return {0.0, 0.0};
  const Matrix whitened = s * (g.basis() * g.singular_values().cwiseInverse().asDiagonal());
  Eigen::BDCSVD<Matrix> svd(whitened);
  const Vector& sv = svd.singularValues();
  const double hi = sv.size() ? sv[0] : 0.0;
  const double lo = whitened.rows() < whitened.cols() ? 0.0 : sv[sv.size() - 1];
  return {lo, hi};
}

LinfDistortion measure_distortion_linf(const Matrix& a, const std::vector<Eigen::Index>& subset) {
  std::vector<Vector> rows;
  for (const auto i : subset) {
    if (i < 0 || i >= a.rows()) throw Error("measure_distortion_linf: index out of range");
    rows.push_back(a.row(i).transpose());
  }
  const Matrix as = stack_rows(rows, a.cols());
  const GramFactor g(as, a.cols());
  if (g.rank() == 0) throw Error("measure_distortion_linf: A_S is zero");
  LinfDistortion out;
  for (Eigen::Index j = 0; j < a.rows(); ++j) {
    const Vector proj = g.basis() * (g.basis().transpose() * a.row(j).transpose());
    if (proj.squaredNorm() <= 1e-24 * std::max(a.row(j).squaredNorm(), 1e-300)) {
      ++out.skipped;
      continue;
    }
    const SolverResult r = min_linf_subject_linear(as, proj);
    if (r.value > 0.0) out.phi = std::max(out.phi, 1.0 / r.value);
  }
  return out;
}

namespace {

std::string pgm_token(std::istream& in) {
  std::string tok;
  char c = 0;
  while (in.get(c)) {
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(c);
  }
  if (tok.empty()) throw Error("pgm: unexpected end of file");
  return tok;
}

}  // namespace

Matrix read_pgm(std::istream& in) {
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") throw Error("pgm: unsupported format " + magic);
  const long width = std::stol(pgm_token(in));
  const long height = std::stol(pgm_token(in));
  const long maxval = std::stol(pgm_token(in));
  if (width < 1 || height < 1) throw Error("pgm: bad dimensions");
  if (maxval < 1 || maxval > 255) throw Error("pgm: only 8-bit images are supported");
  Matrix out(height, width);
  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      if (magic == "P5") {
        const int ch = in.get();
        if (ch == EOF) throw Error("pgm: truncated pixel data");
        out(r, c) = static_cast<double>(ch);
      } else {
        out(r, c) = std::stod(pgm_token(in));
      }
    }
  }
  return out;
}

Matrix read_pgm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  return read_pgm(in);
}

}  // namespace dupsketch
