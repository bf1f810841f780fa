#pragma once

#include <cstdint>
#include <vector>

#include "pgan/data/dataset.hpp"

namespace pgan::data {

/// Isotropic Gaussian clusters; class c gets exactly counts[c] points around
/// centers[c].
Dataset make_blobs(const std::vector<std::size_t>& counts, const std::vector<std::vector<double>>& centers,
                   double stddev, std::uint64_t seed);

/// Concentric 2-D annuli: class c sits at radius radii[c] (uniform angle,
/// Gaussian radial noise). Inner classes lie inside the convex hull of outer
/// ones. Radii closer than six noise standard deviations are reported in
/// Dataset::notes.
Dataset make_rings(const std::vector<std::size_t>& counts, const std::vector<double>& radii, double noise,
                   std::uint64_t seed);

}  // namespace pgan::data
