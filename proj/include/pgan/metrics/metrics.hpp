#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pgan/nn/tensor.hpp"

namespace pgan::metrics {

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
  /// Set when F1 was defined as 0 because the class has no support and no
  /// predictions.
  bool undefined = false;
};

struct MetricsReport {
  std::vector<ClassScore> classes;
  double macro_f1 = 0.0;
  /// Unweighted mean of per-class recall over classes with support.
  double average_accuracy = 0.0;
  /// confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::string> flags;
};

MetricsReport f1_report(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes);

/// Per-sample uncertainty scores of one probability row (m >= 2).
double least_confidence(std::span<const double> probs);
double margin_of_confidence(std::span<const double> probs);
double ratio_of_confidence(std::span<const double> probs);
double entropy_measure(std::span<const double> probs);

struct Measure {
  double sum = 0.0;
  double mean = 0.0;
};

struct UncertaintyReport {
  Measure least_confidence;
  Measure margin_of_confidence;
  Measure ratio_of_confidence;
  Measure entropy;
  std::size_t n = 0;
  std::size_t m = 0;
};

/// Rows must sum to 1 within 1e-6.
UncertaintyReport uncertainty_metrics(const nn::Tensor& probs);

/// sum p ln(p / q); throws DomainError where q = 0 < p.
double kl_divergence(std::span<const double> p, std::span<const double> q);

enum class Metric { euclidean, manhattan };

struct EmdResult {
  double distance = 0.0;
  nn::Tensor plan;  // [|p| x |q|] mass moved from p_i to q_j
};

/// Exact optimal transport between p and q under `cost` [|p| x |q|],
/// solved as a linear program.
EmdResult emd_with_cost(std::span<const double> p, std::span<const double> q, const nn::Tensor& cost);
/// p and q on shared support points (rows of `points`).
EmdResult emd_discrete(std::span<const double> p, std::span<const double> q, const nn::Tensor& points,
                       Metric metric = Metric::euclidean);

/// Closed form on the line: integral of |CDF_p - CDF_q| over the sorted support.
double emd_1d_cdf(std::span<const double> p, std::span<const double> q, std::span<const double> points);

/// Exact EMD between two uniform empirical samples on the line.
double emd_1d_samples(std::vector<double> a, std::vector<double> b);

/// Mean 1-D EMD over `n_proj` seeded random unit directions.
double distribution_shift(const nn::Tensor& real, const nn::Tensor& generated, std::size_t n_proj,
                          std::uint64_t seed);

/// One row per class plus a summary row.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);
/// One row per measure: measure,sum,mean.
void write_uncertainty_csv(std::ostream& out, const UncertaintyReport& report);
std::string summary_text(const MetricsReport& metrics, const UncertaintyReport& uncertainty);

}  // namespace pgan::metrics
