#pragma once

#include <span>

#include "pgan/nn/tensor.hpp"

namespace pgan::models {

inline constexpr double kHullTolerance = 1e-6;

struct HullResult {
  bool inside = false;
  /// Signed distance to the hull boundary: positive inside, negative outside.
  double margin = 0.0;
  /// False when the margin of an interior point could not be computed
  /// exactly (d > 2); `margin` is then reported as 0.
  bool margin_exact = true;
};

/// Whether `point` lies in the convex hull of the rows of `anchors`.
///
/// In two dimensions the hull polygon is built explicitly (monotone chain)
/// and the margin is an exact signed distance. In higher dimensions
/// membership is feasibility of  sum_j l_j a_j = point, sum_j l_j = 1,
/// l >= 0, and the outside distance is the exact minimum-norm point of the
/// shifted hull.
HullResult hull_membership(std::span<const double> point, const nn::Tensor& anchors,
                           double tolerance = kHullTolerance);

/// Euclidean distance from `point` to the convex hull of `anchors`
/// (0 when inside). Works in any dimension.
double hull_distance(std::span<const double> point, const nn::Tensor& anchors);

/// Vertices of the planar convex hull of the rows of `points` [n x 2],
/// counter-clockwise, without collinear vertices.
nn::Tensor hull_polygon(const nn::Tensor& points);

}  // namespace pgan::models
