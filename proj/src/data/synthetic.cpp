#include "pgan/data/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "pgan/common/error.hpp"
#include "pgan/common/rng.hpp"

namespace pgan::data {

Dataset make_blobs(const std::vector<std::size_t>& counts, const std::vector<std::vector<double>>& centers,
                   double stddev, std::uint64_t seed) {
  if (counts.empty()) throw DomainError("make_blobs: no classes requested");
  if (centers.size() != counts.size()) {
    throw DimensionError("make_blobs: " + std::to_string(centers.size()) + " centers for " +
                         std::to_string(counts.size()) + " classes");
  }
  if (!(stddev > 0.0)) throw DomainError("make_blobs: stddev must be positive");
  const std::size_t d = centers.front().size();
  for (std::size_t a = 0; a < centers.size(); ++a) {
    if (centers[a].size() != d || d == 0) throw DimensionError("make_blobs: centers differ in dimension");
    for (std::size_t b = 0; b < a; ++b) {
      if (centers[a] == centers[b]) throw DomainError("make_blobs: centers must be distinct");
    }
  }

  Dataset ds;
  ds.name = "blobs";
  ds.num_classes = counts.size();
  std::size_t total = 0;
  for (auto c : counts) total += c;
  ds.features = nn::Tensor::matrix(total, d);
  ds.labels.reserve(total);
  Rng rng(seed);
  std::size_t row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
      for (std::size_t j = 0; j < d; ++j) ds.features(row, j) = centers[c][j] + rng.normal(0.0, stddev);
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.degenerate = std::find(counts.begin(), counts.end(), 0) != counts.end();
  ds.validate();
  return ds;
}

Dataset make_rings(const std::vector<std::size_t>& counts, const std::vector<double>& radii, double noise,
                   std::uint64_t seed) {
  if (counts.empty()) throw DomainError("make_rings: no classes requested");
  if (radii.size() != counts.size()) throw DimensionError("make_rings: one radius per class required");
  if (noise < 0.0) throw DomainError("make_rings: noise must be non-negative");
  for (std::size_t c = 1; c < radii.size(); ++c) {
    if (!(radii[c] > radii[c - 1])) throw DomainError("make_rings: radii must be strictly increasing");
  }

  Dataset ds;
  ds.name = "rings";
  ds.num_classes = counts.size();
  for (std::size_t c = 1; c < radii.size(); ++c) {
    if (radii[c] - radii[c - 1] < 6.0 * noise) {
      ds.notes.push_back("warning: rings " + std::to_string(c - 1) + " and " + std::to_string(c) +
                         " overlap at this noise level");
    }
  }
  std::size_t total = 0;
  for (auto c : counts) total += c;
  ds.features = nn::Tensor::matrix(total, 2);
  Rng rng(seed);
  std::size_t row = 0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
      const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double r = noise > 0.0 ? radii[c] + rng.normal(0.0, noise) : radii[c];
      ds.features(row, 0) = r * std::cos(theta);
      ds.features(row, 1) = r * std::sin(theta);
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.degenerate = std::find(counts.begin(), counts.end(), 0) != counts.end();
  ds.validate();
  return ds;
}

}  // namespace pgan::data
