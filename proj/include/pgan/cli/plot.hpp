#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "pgan/data/dataset.hpp"
#include "pgan/nn/tensor.hpp"
#include "pgan/training/config.hpp"

namespace pgan::cli {

/// Iteration against every loss series that has at least one value; one
/// polyline per series.
void write_loss_svg(std::ostream& out, const training::LossCurve& curve, std::string_view title);

using Predictor = std::function<std::vector<int>(const nn::Tensor&)>;

/// Class-coloured grid sweep over the bounding box of `points` (2-D only),
/// with the points drawn on top.
void write_boundary_svg(std::ostream& out, const Predictor& predict, const data::Dataset& points,
                        std::size_t grid = 80);

/// Per-class hull polygons of `anchors` with `samples` drawn in the colour of
/// their label. Everything must be 2-D.
void write_hull_scatter_svg(std::ostream& out, const std::vector<nn::Tensor>& anchors, const nn::Tensor& samples,
                            std::span<const int> sample_labels, std::string_view title);

}  // namespace pgan::cli
