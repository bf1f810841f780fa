#include "pgan/data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pgan/common/error.hpp"

namespace pgan::data {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) {
    if (y >= 0 && static_cast<std::size_t>(y) < num_classes) counts[static_cast<std::size_t>(y)]++;
  }
  return counts;
}

std::vector<std::size_t> Dataset::indices_of(int label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) idx.push_back(i);
  }
  return idx;
}

void Dataset::validate() const {
  if (features.rank() != 2) throw DimensionError(name + ": features must be a matrix");
  if (features.rows() != labels.size()) {
    throw DimensionError(name + ": " + std::to_string(features.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (!synthetic.empty() && synthetic.size() != labels.size()) {
    throw DimensionError(name + ": synthetic flag count differs from row count");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DomainError(name + ": label " + std::to_string(y) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
  }
  if (!features.all_finite()) throw DomainError(name + ": non-finite feature value");
  if (!degenerate) {
    const auto counts = class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) {
        throw DomainError(name + ": class " + std::to_string(c) + " has no samples");
      }
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.features = features.gather_rows(rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels[r]);
  if (!synthetic.empty()) {
    for (auto r : rows) out.synthetic.push_back(synthetic[r]);
  }
  out.num_classes = num_classes;
  out.name = name;
  out.feature_space = feature_space;
  out.image_shape = image_shape;
  out.degenerate = degenerate;
  out.notes = notes;
  return out;
}

ClassPriors priors_from_counts(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  if (total == 0.0) throw DomainError("class_priors: dataset is empty");
  ClassPriors p;
  for (auto c : counts) p.priors.push_back(static_cast<double>(c) / total);
  p.ascending_order.resize(counts.size());
  std::iota(p.ascending_order.begin(), p.ascending_order.end(), 0);
  std::stable_sort(p.ascending_order.begin(), p.ascending_order.end(),
                   [&](int a, int b) { return p.priors[static_cast<std::size_t>(a)] < p.priors[static_cast<std::size_t>(b)]; });
  return p;
}

ClassPriors class_priors(const Dataset& ds) { return priors_from_counts(ds.class_counts()); }

void write_csv(std::ostream& out, const Dataset& ds) {
  const std::size_t d = ds.dim();
  for (std::size_t j = 0; j < d; ++j) out << 'f' << j << ',';
  out << "label\n";
  char buf[40];
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << ds.labels[r] << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(out, ds);
}

Dataset read_csv(std::istream& in, std::size_t num_classes, std::string name) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError(name + ": empty CSV");
  std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  if (!line.ends_with("label")) throw FormatError(name + ": last header column must be 'label'");
  const std::size_t d = columns - 1;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t j = 0; j < columns; ++j) {
      const char* stop = std::find(p, end, ',');
      if ((j + 1 < columns) == (stop == end)) {
        throw FormatError(name + ": line " + std::to_string(line_no) + " has the wrong number of columns");
      }
      if (j < d) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(p, stop, v);
        if (ec != std::errc() || ptr != stop) {
          throw FormatError(name + ": bad number on line " + std::to_string(line_no));
        }
        values.push_back(v);
      } else {
        int y = 0;
        auto [ptr, ec] = std::from_chars(p, stop, y);
        if (ec != std::errc() || ptr != stop) {
          throw FormatError(name + ": bad label on line " + std::to_string(line_no));
        }
        labels.push_back(y);
      }
      p = stop == end ? end : stop + 1;
    }
  }
  Dataset ds;
  ds.features = nn::Tensor({labels.size(), d}, std::move(values));
  ds.labels = std::move(labels);
  int max_label = -1;
  for (int y : ds.labels) max_label = std::max(max_label, y);
  ds.num_classes = num_classes ? num_classes : static_cast<std::size_t>(max_label + 1);
  ds.name = std::move(name);
  const auto counts = ds.class_counts();
  ds.degenerate = std::find(counts.begin(), counts.end(), 0) != counts.end();
  ds.validate();
  return ds;
}

Dataset read_csv(const std::filesystem::path& path, std::size_t num_classes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv(in, num_classes, path.stem().string());
}

Dataset select_classes(const Dataset& ds, const std::vector<int>& classes) {
  std::vector<int> remap(ds.num_classes, -1);
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i] < 0 || static_cast<std::size_t>(classes[i]) >= ds.num_classes) {
      throw DomainError("select_classes: class " + std::to_string(classes[i]) + " not present");
    }
    remap[static_cast<std::size_t>(classes[i])] = static_cast<int>(i);
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    if (remap[static_cast<std::size_t>(ds.labels[r])] >= 0) rows.push_back(r);
  }
  Dataset out = ds.subset(rows);
  for (int& y : out.labels) y = remap[static_cast<std::size_t>(y)];
  out.num_classes = classes.size();
  const auto counts = out.class_counts();
  out.degenerate = std::find(counts.begin(), counts.end(), 0) != counts.end();
  out.validate();
  return out;
}

}  // namespace pgan::data
