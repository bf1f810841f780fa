#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pgan::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// Sum of artificial variables left after phase one (0 when feasible).
  double infeasibility = 0.0;
};

/// Dense two-phase simplex for   min c'x  s.t.  A x = b,  x >= 0.
///
/// `a` is row-major with `rows` x `cols` entries. Bland's rule is used for
/// both entering and leaving variables, so degenerate problems (transport
/// polytopes, hull tests) terminate. Redundant equality rows are detected
/// after phase one and dropped. A problem is reported infeasible when the
/// phase-one residual exceeds `feasibility_tol`.
Result solve(std::span<const double> a, std::size_t rows, std::size_t cols,
             std::span<const double> b, std::span<const double> c,
             double feasibility_tol = 1e-9);

}  // namespace pgan::lp
