#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pgan/training/config.hpp"
#include "pgan/training/pgan.hpp"

namespace pgan::cli {

/// Where the data comes from and how it is imbalanced.
///
/// For synthetic kinds each class is generated with counts[c] +
/// test_per_class points and the balanced test split is taken out first.
/// For file kinds the test split is taken first and the remainder is then
/// subsampled to `counts` (all rows when `counts` is empty).
struct DatasetSpec {
  std::string kind = "blobs";  // blobs | rings | csv | idx
  std::vector<std::size_t> counts{1000, 100, 20};
  /// Blob centres; empty places class c on a circle of radius 4.
  std::vector<std::vector<double>> centers;
  double stddev = 1.0;
  std::vector<double> radii;
  double noise = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path path;
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t downscale = 1;
  /// Classes kept from file data, relabelled 0..k-1 in this order.
  std::vector<int> classes;
};

struct EvalSpec {
  std::size_t test_per_class = 200;
  training::EvalMode mode = training::EvalMode::retrained_c;
  /// Neighbours used by the smote method.
  std::size_t smote_k = 5;
};

inline const std::vector<std::string> kMethods{"pgan", "plain", "oversample", "smote", "vanilla_gan", "cgan"};

struct ExperimentConfig {
  std::string name = "experiment";
  std::string method = "pgan";
  DatasetSpec dataset;
  training::TrainingConfig training;
  EvalSpec eval;
  /// Relative paths resolve against the output root.
  std::filesystem::path output_dir;
  /// Extra pgan checkpoints every N iterations; 0 disables them.
  std::size_t checkpoint_every = 0;

  /// Throws ConfigError.
  void validate() const;
};

/// Sets one key. Unknown keys and malformed values throw ConfigError.
void set_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);
/// `key=value` form used by --set.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

/// Reads `key = value` lines; `#` starts a comment.
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Every key in a fixed order, one `key = value` per line. Parsing the
/// result reproduces the config exactly.
std::string canonical_text(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// PGAN_OUTPUT_ROOT when set, otherwise `runs`.
std::filesystem::path output_root();
/// output_dir (or the experiment name) resolved against output_root().
std::filesystem::path run_directory(const ExperimentConfig& cfg);

}  // namespace pgan::cli
