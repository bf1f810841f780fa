#pragma once

#include <cstdint>
#include <vector>

#include "pgan/data/dataset.hpp"

namespace pgan::data {

/// Per-class count lists used by the published imbalance protocols.
inline const std::vector<std::size_t> kMnistProtocolCounts{5000, 4000, 3000, 2000, 1500,
                                                           1000, 500,  250,  100,  50};
inline const std::vector<std::size_t> kCifarProtocolCounts{5000, 4500, 4000, 3500, 3000,
                                                           2500, 2000, 1500, 1000, 500};

/// Subsamples each class without replacement to exactly target_counts[c]
/// rows (seeded shuffle, then prefix). Kept rows retain their original
/// relative order.
Dataset apply_imbalance(const Dataset& ds, const std::vector<std::size_t>& target_counts, std::uint64_t seed);

/// Splits off `test_per_class` random rows of every class as a balanced
/// held-out set. Returns {train, test}.
std::pair<Dataset, Dataset> split_per_class(const Dataset& ds, std::size_t test_per_class, std::uint64_t seed);

/// SMOTE: appends x + u (x_nn - x), u ~ U(0,1), where x_nn is one of the k
/// nearest same-class neighbours of a random class member, until every class
/// reaches target_counts[c]. A class with one sample is grown by duplicating
/// it with Gaussian jitter (sigma = 1% of each feature's range), noted in
/// Dataset::notes. Appended rows are flagged synthetic.
Dataset smote_oversample(const Dataset& ds, std::size_t k, const std::vector<std::size_t>& target_counts,
                         std::uint64_t seed);

/// Random duplication of existing class members up to target_counts.
Dataset random_oversample(const Dataset& ds, const std::vector<std::size_t>& target_counts, std::uint64_t seed);

/// Target counts that raise every class to the largest class count.
std::vector<std::size_t> equalized_counts(const Dataset& ds);

}  // namespace pgan::data
