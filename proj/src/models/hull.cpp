#include "pgan/models/hull.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pgan/common/error.hpp"
#include "pgan/common/linprog.hpp"

namespace pgan::models {
namespace {

struct Vec2 {
  double x;
  double y;
  auto operator<=>(const Vec2&) const = default;
};

double cross(Vec2 o, Vec2 a, Vec2 b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

// Counter-clockwise hull without collinear vertices.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Vec2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

HullResult planar(std::span<const double> point, const nn::Tensor& anchors, double tolerance) {
  std::vector<Vec2> pts;
  pts.reserve(anchors.rows());
  for (std::size_t r = 0; r < anchors.rows(); ++r) pts.push_back({anchors(r, 0), anchors(r, 1)});
  const Vec2 p{point[0], point[1]};
  const auto hull = convex_hull(std::move(pts));

  HullResult out;
  if (hull.size() <= 2) {
    const double dist = segment_distance(p, hull.front(), hull.back());
    out.margin = -dist;
    out.inside = dist <= tolerance;
    return out;
  }

  bool inside = true;
  double inner = std::numeric_limits<double>::infinity();
  double outer = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 a = hull[i];
    const Vec2 b = hull[(i + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const double signed_dist = cross(a, b, p) / len;
    if (signed_dist < 0.0) inside = false;
    inner = std::min(inner, signed_dist);
    outer = std::min(outer, segment_distance(p, a, b));
  }
  out.margin = inside ? inner : -outer;
  out.inside = out.margin >= -tolerance;
  return out;
}

// Solves the small dense system m x = rhs in place (partial pivoting).
bool solve_dense(std::vector<double>& m, std::vector<double>& rhs, std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(m[r * n + col]) > std::abs(m[piv * n + col])) piv = r;
    }
    if (std::abs(m[piv * n + col]) < 1e-14) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m[piv * n + c], m[col * n + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r * n + col] / m[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) m[r * n + c] -= f * m[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t r = 0; r < n; ++r) rhs[r] /= m[r * n + r];
  return true;
}

// Wolfe's minimum-norm-point algorithm on the rows of `pts`.
double min_norm(const std::vector<std::vector<double>>& pts) {
  const std::size_t d = pts.front().size();
  auto dot = [d](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
    return s;
  };
  double scale = 0.0;
  std::size_t start = 0;
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double n2 = dot(pts[j], pts[j]);
    scale = std::max(scale, n2);
    if (n2 < dot(pts[start], pts[start])) start = j;
  }
  if (scale == 0.0) return 0.0;

  std::vector<std::size_t> active{start};
  std::vector<double> lambda{1.0};
  std::vector<double> x = pts[start];
  auto combine = [&](const std::vector<double>& w) {
    std::vector<double> y(d, 0.0);
    for (std::size_t i = 0; i < active.size(); ++i) {
      for (std::size_t c = 0; c < d; ++c) y[c] += w[i] * pts[active[i]][c];
    }
    return y;
  };

  for (int outer = 0; outer < 1000; ++outer) {
    std::size_t best = 0;
    double best_dot = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double v = dot(x, pts[j]);
      if (v < best_dot) {
        best_dot = v;
        best = j;
      }
    }
    const double xx = dot(x, x);
    if (xx - best_dot <= 1e-12 * scale) break;
    if (std::find(active.begin(), active.end(), best) != active.end()) break;
    active.push_back(best);
    lambda.push_back(0.0);

    for (int inner = 0; inner < 1000; ++inner) {
      // Affine minimiser over the active set: [G 1; 1' 0][a; mu] = [0; 1].
      const std::size_t s = active.size();
      const std::size_t n = s + 1;
      std::vector<double> m(n * n, 0.0);
      std::vector<double> rhs(n, 0.0);
      for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = 0; j < s; ++j) m[i * n + j] = dot(pts[active[i]], pts[active[j]]);
        m[i * n + s] = 1.0;
        m[s * n + i] = 1.0;
      }
      rhs[s] = 1.0;
      if (!solve_dense(m, rhs, n)) {
        active.pop_back();
        lambda.pop_back();
        return std::sqrt(dot(x, x));
      }
      std::vector<double> alpha(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(s));
      if (std::all_of(alpha.begin(), alpha.end(), [](double a) { return a > 1e-12; })) {
        lambda = alpha;
        x = combine(lambda);
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < s; ++i) {
        if (alpha[i] <= 1e-12) theta = std::min(theta, lambda[i] / (lambda[i] - alpha[i]));
      }
      for (std::size_t i = 0; i < s; ++i) lambda[i] = theta * alpha[i] + (1.0 - theta) * lambda[i];
      std::vector<std::size_t> keep_idx;
      std::vector<double> keep_lambda;
      for (std::size_t i = 0; i < s; ++i) {
        if (lambda[i] > 1e-12) {
          keep_idx.push_back(active[i]);
          keep_lambda.push_back(lambda[i]);
        }
      }
      active = std::move(keep_idx);
      lambda = std::move(keep_lambda);
      x = combine(lambda);
    }
  }
  return std::sqrt(dot(x, x));
}

}  // namespace

nn::Tensor hull_polygon(const nn::Tensor& points) {
  if (points.rank() != 2 || points.cols() != 2) {
    throw DimensionError("hull_polygon: expected [n x 2] points, got " + points.shape_string());
  }
  std::vector<Vec2> pts;
  pts.reserve(points.rows());
  for (std::size_t r = 0; r < points.rows(); ++r) pts.push_back({points(r, 0), points(r, 1)});
  const auto hull = convex_hull(std::move(pts));
  nn::Tensor out = nn::Tensor::matrix(hull.size(), 2);
  for (std::size_t i = 0; i < hull.size(); ++i) {
    out(i, 0) = hull[i].x;
    out(i, 1) = hull[i].y;
  }
  return out;
}

double hull_distance(std::span<const double> point, const nn::Tensor& anchors) {
  if (anchors.rank() != 2 || anchors.rows() == 0 || anchors.cols() != point.size()) {
    throw DimensionError("hull_distance: anchors " + anchors.shape_string() + " vs point of size " +
                         std::to_string(point.size()));
  }
  std::vector<std::vector<double>> shifted(anchors.rows(), std::vector<double>(point.size()));
  for (std::size_t r = 0; r < anchors.rows(); ++r) {
    for (std::size_t c = 0; c < point.size(); ++c) shifted[r][c] = anchors(r, c) - point[c];
  }
  return min_norm(shifted);
}

HullResult hull_membership(std::span<const double> point, const nn::Tensor& anchors, double tolerance) {
  if (anchors.rank() != 2 || anchors.rows() == 0 || anchors.cols() != point.size()) {
    throw DimensionError("hull_membership: anchors " + anchors.shape_string() + " vs point of size " +
                         std::to_string(point.size()));
  }
  const std::size_t d = point.size();
  if (d == 2) return planar(point, anchors, tolerance);

  HullResult out;
  if (d == 1) {
    double lo = anchors[0];
    double hi = anchors[0];
    for (std::size_t r = 1; r < anchors.rows(); ++r) {
      lo = std::min(lo, anchors[r]);
      hi = std::max(hi, anchors[r]);
    }
    out.margin = std::min(point[0] - lo, hi - point[0]);
    out.inside = out.margin >= -tolerance;
    return out;
  }

  const std::size_t n = anchors.rows();
  std::vector<double> a((d + 1) * n);
  std::vector<double> b(d + 1);
  for (std::size_t c = 0; c < d; ++c) {
    for (std::size_t j = 0; j < n; ++j) a[c * n + j] = anchors(j, c);
    b[c] = point[c];
  }
  for (std::size_t j = 0; j < n; ++j) a[d * n + j] = 1.0;
  b[d] = 1.0;
  const std::vector<double> cost(n, 0.0);
  const auto lp_result = lp::solve(a, d + 1, n, b, cost, tolerance);
  if (lp_result.status == lp::Status::infeasible) {
    out.inside = false;
    out.margin = -hull_distance(point, anchors);
    return out;
  }
  out.inside = true;
  out.margin = 0.0;
  // With no more anchors than dimensions the hull has no interior, so every
  // member is a boundary point.
  out.margin_exact = n <= d;
  return out;
}

}  // namespace pgan::models
