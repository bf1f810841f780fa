#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pgan/cli/config.hpp"
#include "pgan/data/dataset.hpp"
#include "pgan/metrics/metrics.hpp"
#include "pgan/training/config.hpp"

namespace pgan::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

struct RunOptions {
  /// Off: wall-clock columns are written as 0 and the manifest carries no
  /// date, so reruns are byte-identical.
  bool timestamps = true;
  /// Progress lines; null silences them.
  std::ostream* log = nullptr;
};

struct PreparedData {
  data::Dataset train;
  data::Dataset test;
  std::string train_hash;
  std::string test_hash;
};

/// Builds the train/test split and writes data/train.csv, data/test.csv,
/// data/split.txt and data/priors.csv (plus IDX files for image data).
PreparedData cmd_prepare(const ExperimentConfig& cfg, const RunOptions& opt = {});
/// Reads what cmd_prepare wrote; throws Error naming the missing path.
PreparedData load_prepared(const ExperimentConfig& cfg);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  training::LossCurve curve;
};

/// Trains cfg.method and writes checkpoint.bin, losses.csv and losses.svg.
/// On divergence the partial curve is still written before rethrowing.
TrainOutcome cmd_train(const ExperimentConfig& cfg, const RunOptions& opt = {});

struct EvalOutcome {
  metrics::MetricsReport metrics;
  metrics::UncertaintyReport uncertainty;
};

/// Scores a checkpoint on the held-out split (or `split` = "train") and
/// writes metrics.csv, uncertainty.csv and summary.txt. Two-dimensional
/// data also gets boundary.svg, and generative methods samples.svg.
EvalOutcome cmd_evaluate(const ExperimentConfig& cfg, const RunOptions& opt = {},
                         const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                         const std::string& split = "test");

struct CompareRow {
  std::string run;
  std::string method;
  double macro_f1 = 0.0;
  double average_accuracy = 0.0;
  double least_confidence = 0.0;
  double margin_of_confidence = 0.0;
  double ratio_of_confidence = 0.0;
  double entropy = 0.0;
};

/// Runs (or reuses) prepare, train and evaluate for each config in turn,
/// checks they share one split, and writes comparison.csv and
/// comparison.txt into `out_dir`.
std::vector<CompareRow> cmd_compare(const std::vector<ExperimentConfig>& configs,
                                    const std::filesystem::path& out_dir, const RunOptions& opt = {});

/// Runs the finite-difference suite; returns the process exit code.
int cmd_gradcheck(std::size_t seeds, std::ostream& out);

}  // namespace pgan::cli
