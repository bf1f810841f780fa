#include "pgan/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "pgan/common/error.hpp"
#include "pgan/common/linprog.hpp"
#include "pgan/common/rng.hpp"

namespace pgan::metrics {
namespace {

std::pair<double, double> top_two(std::span<const double> probs) {
  if (probs.size() < 2) throw DomainError("uncertainty measures need at least two classes");
  double first = -1.0;
  double second = -1.0;
  for (double v : probs) {
    if (v > first) {
      second = first;
      first = v;
    } else if (v > second) {
      second = v;
    }
  }
  return {first, second};
}

void check_distribution(std::span<const double> p, const char* what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + ": entries must be finite and >= 0");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw DomainError(std::string(what) + ": distribution sums to " + std::to_string(total));
  }
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MetricsReport f1_report(std::span<const int> predictions, std::span<const int> labels, std::size_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("f1_report: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  MetricsReport rep;
  rep.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    const int p = predictions[i];
    if (y < 0 || p < 0 || static_cast<std::size_t>(y) >= num_classes || static_cast<std::size_t>(p) >= num_classes) {
      throw DomainError("f1_report: label out of range at position " + std::to_string(i));
    }
    ++rep.confusion[static_cast<std::size_t>(y)][static_cast<std::size_t>(p)];
  }
  rep.classes.resize(num_classes);
  double recall_sum = 0.0;
  std::size_t supported = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto& s = rep.classes[c];
    const double tp = static_cast<double>(rep.confusion[c][c]);
    for (std::size_t j = 0; j < num_classes; ++j) {
      s.support += rep.confusion[c][j];
      s.predicted += rep.confusion[j][c];
    }
    s.precision = s.predicted > 0 ? tp / static_cast<double>(s.predicted) : 0.0;
    s.recall = s.support > 0 ? tp / static_cast<double>(s.support) : 0.0;
    const double denom = 2.0 * tp + static_cast<double>(s.predicted - rep.confusion[c][c]) +
                         static_cast<double>(s.support - rep.confusion[c][c]);
    s.f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    if (s.support == 0 && s.predicted == 0) {
      s.undefined = true;
      rep.flags.push_back("class " + std::to_string(c) + " has no support and no predictions; F1 set to 0");
    }
    if (s.support > 0) {
      recall_sum += s.recall;
      ++supported;
    }
    rep.macro_f1 += s.f1 / static_cast<double>(num_classes);
  }
  rep.average_accuracy = supported > 0 ? recall_sum / static_cast<double>(supported) : 0.0;
  return rep;
}

double least_confidence(std::span<const double> probs) {
  const double m = static_cast<double>(probs.size());
  return m * (1.0 - top_two(probs).first) / (m - 1.0);
}

double margin_of_confidence(std::span<const double> probs) {
  const auto [a, b] = top_two(probs);
  return 1.0 - (a - b);
}

double ratio_of_confidence(std::span<const double> probs) {
  const auto [a, b] = top_two(probs);
  return b / a;
}

double entropy_measure(std::span<const double> probs) {
  if (probs.size() < 2) throw DomainError("uncertainty measures need at least two classes");
  double h = 0.0;
  for (double y : probs) {
    if (y > 0.0) h -= y * std::log2(y);
  }
  return h / std::log2(static_cast<double>(probs.size()));
}

UncertaintyReport uncertainty_metrics(const nn::Tensor& probs) {
  if (probs.rank() != 2 || probs.cols() < 2) {
    throw DimensionError("uncertainty_metrics: need an [n x m] matrix with m >= 2, got " + probs.shape_string());
  }
  UncertaintyReport rep;
  rep.n = probs.rows();
  rep.m = probs.cols();
  for (std::size_t r = 0; r < rep.n; ++r) {
    const auto row = probs.row(r);
    const double total = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-6) {
      throw DomainError("uncertainty_metrics: row " + std::to_string(r) + " sums to " + std::to_string(total));
    }
    rep.least_confidence.sum += least_confidence(row);
    rep.margin_of_confidence.sum += margin_of_confidence(row);
    rep.ratio_of_confidence.sum += ratio_of_confidence(row);
    rep.entropy.sum += entropy_measure(row);
  }
  const double n = static_cast<double>(rep.n);
  for (Measure* m : {&rep.least_confidence, &rep.margin_of_confidence, &rep.ratio_of_confidence, &rep.entropy}) {
    m->mean = rep.n > 0 ? m->sum / n : 0.0;
  }
  return rep;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DimensionError("kl_divergence: supports differ in size");
  check_distribution(p, "kl_divergence p");
  check_distribution(q, "kl_divergence q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      throw DomainError("kl_divergence: q is 0 where p is positive (index " + std::to_string(i) + ")");
    }
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(kl, 0.0);
}

EmdResult emd_with_cost(std::span<const double> p, std::span<const double> q, const nn::Tensor& cost) {
  const std::size_t n = p.size();
  const std::size_t m = q.size();
  if (cost.rank() != 2 || cost.rows() != n || cost.cols() != m) {
    throw DimensionError("emd_discrete: cost " + cost.shape_string() + " for " + std::to_string(n) + " x " +
                         std::to_string(m) + " masses");
  }
  check_distribution(p, "emd_discrete p");
  check_distribution(q, "emd_discrete q");
  // Variables gamma_ij, row-major; constraints: row sums = p, column sums = q.
  const std::size_t vars = n * m;
  std::vector<double> a((n + m) * vars, 0.0);
  std::vector<double> b(n + m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      a[i * vars + i * m + j] = 1.0;
      a[(n + j) * vars + i * m + j] = 1.0;
    }
    b[i] = p[i];
  }
  for (std::size_t j = 0; j < m; ++j) b[n + j] = q[j];
  const auto res = lp::solve(a, n + m, vars, b, cost.values(), 1e-9);
  if (res.status != lp::Status::optimal) throw Error("emd_discrete: transport problem not solved");
  EmdResult out;
  out.plan = nn::Tensor({n, m}, res.x);
  out.distance = res.objective;
  return out;
}

EmdResult emd_discrete(std::span<const double> p, std::span<const double> q, const nn::Tensor& points,
                       Metric metric) {
  if (points.rank() != 2 || points.rows() != p.size()) {
    throw DimensionError("emd_discrete: support " + points.shape_string() + " for " + std::to_string(p.size()) +
                         " masses");
  }
  const std::size_t n = points.rows();
  nn::Tensor cost = nn::Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < points.cols(); ++c) {
        const double diff = points(i, c) - points(j, c);
        d += metric == Metric::euclidean ? diff * diff : std::abs(diff);
      }
      cost(i, j) = metric == Metric::euclidean ? std::sqrt(d) : d;
    }
  }
  return emd_with_cost(p, q, cost);
}

double emd_1d_cdf(std::span<const double> p, std::span<const double> q, std::span<const double> points) {
  if (p.size() != q.size() || p.size() != points.size()) throw DimensionError("emd_1d_cdf: size mismatch");
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  double cdf_gap = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    cdf_gap += p[order[i]] - q[order[i]];
    total += std::abs(cdf_gap) * (points[order[i + 1]] - points[order[i]]);
  }
  return total;
}

double emd_1d_samples(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DomainError("emd_1d_samples: both samples must be non-empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  // Walk both quantile functions over the merged breakpoints k/|a| and l/|b|.
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double t = 0.0;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const double next = std::min(next_a, next_b);
    total += (next - t) * std::abs(a[i] - b[j]);
    t = next;
    if (next_a <= next) ++i;
    if (next_b <= next) ++j;
  }
  return total;
}

double distribution_shift(const nn::Tensor& real, const nn::Tensor& generated, std::size_t n_proj,
                          std::uint64_t seed) {
  if (real.rank() != 2 || generated.rank() != 2 || real.cols() != generated.cols() || real.rows() == 0 ||
      generated.rows() == 0) {
    throw DimensionError("distribution_shift: sets " + real.shape_string() + " and " + generated.shape_string());
  }
  if (n_proj == 0) throw DomainError("distribution_shift: need at least one projection");
  Rng rng(seed);
  const std::size_t d = real.cols();
  double total = 0.0;
  for (std::size_t k = 0; k < n_proj; ++k) {
    std::vector<double> dir(d);
    double norm = 0.0;
    while (norm == 0.0) {
      for (double& v : dir) v = rng.normal();
      norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
    }
    auto project = [&](const nn::Tensor& x) {
      std::vector<double> out(x.rows());
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto row = x.row(r);
        out[r] = std::inner_product(row.begin(), row.end(), dir.begin(), 0.0) / norm;
      }
      return out;
    };
    total += emd_1d_samples(project(real), project(generated));
  }
  return total / static_cast<double>(n_proj);
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out << "class,precision,recall,f1,support\n";
  std::size_t total = 0;
  for (std::size_t c = 0; c < report.classes.size(); ++c) {
    const auto& s = report.classes[c];
    out << c << ',' << num(s.precision) << ',' << num(s.recall) << ',' << num(s.f1) << ',' << s.support << '\n';
    total += s.support;
  }
  out << "macro,," << num(report.average_accuracy) << ',' << num(report.macro_f1) << ',' << total << '\n';
}

void write_uncertainty_csv(std::ostream& out, const UncertaintyReport& report) {
  out << "measure,sum,mean\n";
  out << "least_confidence," << num(report.least_confidence.sum) << ',' << num(report.least_confidence.mean) << '\n';
  out << "margin_of_confidence," << num(report.margin_of_confidence.sum) << ','
      << num(report.margin_of_confidence.mean) << '\n';
  out << "ratio_of_confidence," << num(report.ratio_of_confidence.sum) << ','
      << num(report.ratio_of_confidence.mean) << '\n';
  out << "entropy," << num(report.entropy.sum) << ',' << num(report.entropy.mean) << '\n';
}

std::string summary_text(const MetricsReport& metrics, const UncertaintyReport& u) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "macro F1          %.4f\naverage accuracy  %.4f\n", metrics.macro_f1,
                metrics.average_accuracy);
  os << buf;
  for (std::size_t c = 0; c < metrics.classes.size(); ++c) {
    const auto& s = metrics.classes[c];
    std::snprintf(buf, sizeof buf, "  class %-3zu P %.4f  R %.4f  F1 %.4f  n %zu\n", c, s.precision, s.recall, s.f1,
                  s.support);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "uncertainty (mean over %zu samples, %zu classes)\n  least confidence %.4f\n  margin %.4f\n"
                "  ratio %.4f\n  entropy %.4f\n",
                u.n, u.m, u.least_confidence.mean, u.margin_of_confidence.mean, u.ratio_of_confidence.mean,
                u.entropy.mean);
  os << buf;
  for (const auto& f : metrics.flags) os << "note: " << f << '\n';
  return os.str();
}

}  // namespace pgan::metrics
