#include "pgan/common/linprog.hpp"

#include <cmath>
#include <limits>

#include "pgan/common/error.hpp"

namespace pgan::lp {
namespace {

constexpr double kPivotTol = 1e-12;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c < cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> cells_;
};

// Runs simplex iterations on the objective stored in the last tableau row.
// Columns >= `enter_limit` never enter the basis.
bool iterate(Tableau& t, std::vector<std::size_t>& basis, std::vector<bool>& active_row,
             std::size_t enter_limit) {
  const std::size_t obj = t.rows() - 1;
  const std::size_t rhs = t.cols() - 1;
  for (;;) {
    std::size_t enter = enter_limit;
    for (std::size_t c = 0; c < enter_limit; ++c) {
      if (t.at(obj, c) < -1e-11) {
        enter = c;
        break;
      }
    }
    if (enter == enter_limit) return true;

    std::size_t leave = obj;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < obj; ++r) {
      if (!active_row[r] || t.at(r, enter) <= kPivotTol) continue;
      const double ratio = t.at(r, rhs) / t.at(r, enter);
      if (ratio < best - 1e-14 || (std::abs(ratio - best) <= 1e-14 && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == obj) return false;
    t.pivot(leave, enter);
    basis[leave] = enter;
  }
}

}  // namespace

Result solve(std::span<const double> a, std::size_t rows, std::size_t cols,
             std::span<const double> b, std::span<const double> c, double feasibility_tol) {
  if (a.size() != rows * cols || b.size() != rows || c.size() != cols) {
    throw DimensionError("lp::solve: A is " + std::to_string(a.size()) + " entries, expected " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  // Columns: [original | artificial | rhs]; rows: [constraints | objective].
  const std::size_t n_art = rows;
  Tableau t(rows + 1, cols + n_art + 1);
  const std::size_t rhs = cols + n_art;
  const std::size_t obj = rows;
  std::vector<std::size_t> basis(rows + 1, 0);
  std::vector<bool> active_row(rows, true);

  for (std::size_t r = 0; r < rows; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < cols; ++j) t.at(r, j) = sign * a[r * cols + j];
    t.at(r, cols + r) = 1.0;
    t.at(r, rhs) = sign * b[r];
    basis[r] = cols + r;
  }
  basis[obj] = std::numeric_limits<std::size_t>::max();

  // Phase one: minimise the sum of artificials.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) t.at(obj, j) -= t.at(r, j);
    t.at(obj, rhs) -= t.at(r, rhs);
  }
  iterate(t, basis, active_row, cols + n_art);

  Result result;
  result.infeasibility = -t.at(obj, rhs);
  if (result.infeasibility > feasibility_tol) {
    result.status = Status::infeasible;
    return result;
  }

  // Drive zero-level artificials out of the basis; rows where that is
  // impossible are linearly dependent on the others.
  for (std::size_t r = 0; r < rows; ++r) {
    if (basis[r] < cols) continue;
    std::size_t pc = cols;
    for (std::size_t j = 0; j < cols; ++j) {
      if (std::abs(t.at(r, j)) > 1e-9) {
        pc = j;
        break;
      }
    }
    if (pc == cols) {
      active_row[r] = false;
    } else {
      t.pivot(r, pc);
      basis[r] = pc;
    }
  }

  // Phase two objective row.
  for (std::size_t j = 0; j <= rhs; ++j) t.at(obj, j) = 0.0;
  for (std::size_t j = 0; j < cols; ++j) t.at(obj, j) = c[j];
  for (std::size_t r = 0; r < rows; ++r) {
    if (!active_row[r]) continue;
    const double cb = c[basis[r]];
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j <= rhs; ++j) t.at(obj, j) -= cb * t.at(r, j);
  }
  if (!iterate(t, basis, active_row, cols)) {
    result.status = Status::unbounded;
    return result;
  }

  result.status = Status::optimal;
  result.x.assign(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (active_row[r] && basis[r] < cols) result.x[basis[r]] = t.at(r, rhs);
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < cols; ++j) result.objective += c[j] * result.x[j];
  return result;
}

}  // namespace pgan::lp
