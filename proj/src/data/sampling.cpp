#include "pgan/data/sampling.hpp"

#include <algorithm>
#include <numeric>

#include "pgan/common/error.hpp"
#include "pgan/common/rng.hpp"

namespace pgan::data {
namespace {

void check_targets(const Dataset& ds, const std::vector<std::size_t>& targets, const char* op) {
  if (targets.size() != ds.num_classes) {
    throw DimensionError(std::string(op) + ": " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(ds.num_classes) + " classes");
  }
}

// Grows `ds` so that every class has at least its target; existing rows are
// kept unflagged, appended rows flagged synthetic.
Dataset prepare_growth(const Dataset& ds, const std::vector<std::size_t>& targets, const char* op) {
  check_targets(ds, targets, op);
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (targets[c] < counts[c]) {
      throw DomainError(std::string(op) + ": target " + std::to_string(targets[c]) + " for class " +
                        std::to_string(c) + " is below its current count " + std::to_string(counts[c]));
    }
  }
  Dataset out = ds;
  if (out.synthetic.empty()) out.synthetic.assign(out.size(), 0);
  return out;
}

void append_row(Dataset& ds, const std::vector<double>& row, int label) {
  ds.features.append_rows(nn::Tensor({1, row.size()}, row));
  ds.labels.push_back(label);
  ds.synthetic.push_back(1);
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

}  // namespace

Dataset apply_imbalance(const Dataset& ds, const std::vector<std::size_t>& target_counts, std::uint64_t seed) {
  check_targets(ds, target_counts, "apply_imbalance");
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    auto idx = ds.indices_of(static_cast<int>(c));
    if (target_counts[c] > idx.size()) {
      throw DomainError("apply_imbalance: class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                        " samples, " + std::to_string(target_counts[c]) + " requested");
    }
    Rng rng(mix_seed(seed, c));
    rng.shuffle(idx.begin(), idx.end());
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(target_counts[c]));
  }
  std::sort(keep.begin(), keep.end());
  Dataset out = ds.subset(keep);
  out.degenerate = std::find(target_counts.begin(), target_counts.end(), 0) != target_counts.end();
  out.validate();
  return out;
}

std::pair<Dataset, Dataset> split_per_class(const Dataset& ds, std::size_t test_per_class, std::uint64_t seed) {
  std::vector<std::size_t> train, test;
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    auto idx = ds.indices_of(static_cast<int>(c));
    if (idx.size() <= test_per_class) {
      throw DomainError("split_per_class: class " + std::to_string(c) + " has only " +
                        std::to_string(idx.size()) + " samples for a held-out size of " +
                        std::to_string(test_per_class));
    }
    Rng rng(mix_seed(seed, 1000 + c));
    rng.shuffle(idx.begin(), idx.end());
    test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(test_per_class));
    train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(test_per_class), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {ds.subset(train), ds.subset(test)};
}

Dataset smote_oversample(const Dataset& ds, std::size_t k, const std::vector<std::size_t>& target_counts,
                         std::uint64_t seed) {
  if (k == 0) throw DomainError("smote_oversample: k must be >= 1");
  Dataset out = prepare_growth(ds, target_counts, "smote_oversample");
  const std::size_t d = ds.dim();
  const auto counts = ds.class_counts();

  std::vector<double> range(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = ds.features(0, j), hi = lo;
    for (std::size_t r = 1; r < ds.size(); ++r) {
      lo = std::min(lo, ds.features(r, j));
      hi = std::max(hi, ds.features(r, j));
    }
    range[j] = hi - lo;
  }

  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    const std::size_t need = target_counts[c] - counts[c];
    if (need == 0) continue;
    const auto members = ds.indices_of(static_cast<int>(c));
    if (members.empty()) {
      throw DomainError("smote_oversample: class " + std::to_string(c) + " has no samples to interpolate");
    }
    Rng rng(mix_seed(seed, c));
    if (members.size() == 1) {
      out.notes.push_back("smote: class " + std::to_string(c) +
                          " has a single sample; grown by jittered duplication");
      const auto base = ds.features.row(members[0]);
      for (std::size_t s = 0; s < need; ++s) {
        std::vector<double> row(base.begin(), base.end());
        for (std::size_t j = 0; j < d; ++j) {
          if (range[j] > 0.0) row[j] += rng.normal(0.0, 0.01 * range[j]);
        }
        append_row(out, row, static_cast<int>(c));
      }
      continue;
    }

    // k nearest same-class neighbours of every member.
    const std::size_t kk = std::min(k, members.size() - 1);
    std::vector<std::vector<std::size_t>> neighbours(members.size());
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < members.size(); ++a) {
      dist.clear();
      for (std::size_t b = 0; b < members.size(); ++b) {
        if (a == b) continue;
        dist.emplace_back(squared_distance(ds.features.row(members[a]), ds.features.row(members[b])), b);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
      for (std::size_t i = 0; i < kk; ++i) neighbours[a].push_back(members[dist[i].second]);
    }

    for (std::size_t s = 0; s < need; ++s) {
      const std::size_t a = rng.index(members.size());
      const std::size_t nb = neighbours[a][rng.index(kk)];
      const double u = rng.uniform();
      const auto x = ds.features.row(members[a]);
      const auto y = ds.features.row(nb);
      std::vector<double> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = x[j] + u * (y[j] - x[j]);
      append_row(out, row, static_cast<int>(c));
    }
  }
  out.validate();
  return out;
}

Dataset random_oversample(const Dataset& ds, const std::vector<std::size_t>& target_counts, std::uint64_t seed) {
  Dataset out = prepare_growth(ds, target_counts, "random_oversample");
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < ds.num_classes; ++c) {
    const auto members = ds.indices_of(static_cast<int>(c));
    if (target_counts[c] > counts[c] && members.empty()) {
      throw DomainError("random_oversample: class " + std::to_string(c) + " has no samples");
    }
    Rng rng(mix_seed(seed, c));
    for (std::size_t s = counts[c]; s < target_counts[c]; ++s) {
      const auto row = ds.features.row(members[rng.index(members.size())]);
      append_row(out, std::vector<double>(row.begin(), row.end()), static_cast<int>(c));
    }
  }
  out.validate();
  return out;
}

std::vector<std::size_t> equalized_counts(const Dataset& ds) {
  const auto counts = ds.class_counts();
  const std::size_t top = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  return std::vector<std::size_t>(counts.size(), top);
}

}  // namespace pgan::data
