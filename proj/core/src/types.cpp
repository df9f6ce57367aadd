#include "dupsketch/types.hpp"

#include <cmath>

namespace dupsketch {

void Config::validate() const {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("config: p must be a finite real >= 1");
  if (!(eps > 0.0 && eps < 1.0)) throw Error("config: eps must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw Error("config: delta must lie in (0, 1)");
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(oversample > 0.0)) {
    throw Error("config: oversampling constants must be positive");
  }
  if (!(lp_tolerance > 0.0) || !(pnorm_tolerance > 0.0)) {
    throw Error("config: solver tolerances must be positive");
  }
  if (!(sensitivity_inflation > 0.0)) throw Error("config: sensitivity_inflation must be positive");
}

Matrix WeightedCoreset::matrix(Eigen::Index cols) const {
  Matrix out(static_cast<Eigen::Index>(entries.size()), cols);
  for (std::size_t r = 0; r < entries.size(); ++r) {
    if (entries[r].row.size() != cols) throw Error("coreset row has the wrong dimension");
    out.row(static_cast<Eigen::Index>(r)) = entries[r].weight * entries[r].row.transpose();
  }
  return out;
}

Matrix stack_rows(const std::vector<Vector>& rows, Eigen::Index cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw Error("stack_rows: dimension mismatch");
    out.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  }
  return out;
}

}  // namespace dupsketch
