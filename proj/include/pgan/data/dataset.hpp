#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pgan/nn/tensor.hpp"

namespace pgan::data {

enum class FeatureSpace { raw, extracted };

struct ImageShape {
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// Feature matrix plus integer labels in [0, num_classes).
struct Dataset {
  nn::Tensor features;  // [n x d]
  std::vector<int> labels;
  std::size_t num_classes = 0;
  std::string name;
  FeatureSpace feature_space = FeatureSpace::raw;
  /// Empty, or one flag per row marking generated samples.
  std::vector<std::uint8_t> synthetic;
  /// Set when rows are images (used to write IDX back out).
  std::optional<ImageShape> image_shape;
  /// Classes with zero samples are allowed only when this is set.
  bool degenerate = false;
  /// Free-form warnings and provenance notes gathered while building.
  std::vector<std::string> notes;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.rank() == 2 ? features.cols() : 0; }
  std::vector<std::size_t> class_counts() const;
  std::vector<std::size_t> indices_of(int label) const;
  bool is_synthetic(std::size_t row) const { return !synthetic.empty() && synthetic[row] != 0; }

  /// Throws DomainError/DimensionError when an invariant is broken.
  void validate() const;

  /// Subset of rows, in the given order; flags and metadata carried along.
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Class priors with a permutation listing classes by non-decreasing prior.
/// Ties keep class-id order, so the majority class is the last entry.
struct ClassPriors {
  std::vector<double> priors;
  std::vector<int> ascending_order;

  std::size_t num_classes() const { return priors.size(); }
  int majority() const { return ascending_order.back(); }
};

ClassPriors class_priors(const Dataset& ds);
ClassPriors priors_from_counts(const std::vector<std::size_t>& counts);

/// CSV with header f0,...,f{d-1},label and 17 significant digits.
void write_csv(std::ostream& out, const Dataset& ds);
void write_csv(const std::filesystem::path& path, const Dataset& ds);
/// `num_classes` of 0 means max label + 1.
Dataset read_csv(std::istream& in, std::size_t num_classes = 0, std::string name = "csv");
Dataset read_csv(const std::filesystem::path& path, std::size_t num_classes = 0);

/// Keeps only the listed classes, relabelled 0..k-1 in the listed order.
Dataset select_classes(const Dataset& ds, const std::vector<int>& classes);

}  // namespace pgan::data
