#include "pgan/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "pgan/common/error.hpp"
#include "pgan/models/hull.hpp"

namespace pgan::cli {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof kPalette[0])]; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  // Widens degenerate ranges and pads by `frac` of the span.
  void pad(double frac) {
    if (!(x1 >= x0)) x0 = 0, x1 = 1;
    if (!(y1 >= y0)) y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double dx = (x1 - x0) * frac, dy = (y1 - y0) * frac;
    x0 -= dx, x1 += dx, y0 -= dy, y1 += dy;
  }
  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kWidth - 2 * kMargin); }
  double sy(double y) const { return kHeight - kMargin - (y - y0) / (y1 - y0) * (kHeight - 2 * kMargin); }
};

void open_svg(std::ostream& out, std::string_view title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << escape(title) << "</text>\n";
}

void axes(std::ostream& out, const Box& box, std::string_view xlabel, std::string_view ylabel) {
  const double left = kMargin, right = kWidth - kMargin, top = kMargin, bottom = kHeight - kMargin;
  out << "<g stroke=\"black\" stroke-width=\"1\">\n"
      << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom << "\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom << "\"/>\n"
      << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<text x=\"" << left << "\" y=\"" << bottom + 16 << "\">" << label(box.x0) << "</text>\n"
      << "<text x=\"" << right << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\">" << label(box.x1)
      << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << label(box.y0)
      << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\">" << label(box.y1)
      << "</text>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(xlabel) << "</text>\n"
      << "<text x=\"14\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << kHeight / 2 << ")\">" << escape(ylabel) << "</text>\n</g>\n";
}

}  // namespace

void write_loss_svg(std::ostream& out, const training::LossCurve& curve, std::string_view title) {
  struct Series {
    const char* name;
    double training::LossRecord::*field;
  };
  const Series all[] = {{"loss_G", &training::LossRecord::loss_G},
                        {"loss_D", &training::LossRecord::loss_D},
                        {"loss_C", &training::LossRecord::loss_C}};
  Box box;
  std::vector<Series> active;
  for (const auto& s : all) {
    bool any = false;
    for (const auto& r : curve.records()) {
      const double v = r.*s.field;
      if (!std::isfinite(v)) continue;
      box.add(static_cast<double>(r.iteration), v);
      any = true;
    }
    if (any) active.push_back(s);
  }
  box.pad(0.02);
  open_svg(out, title);
  axes(out, box, "iteration", "loss");
  for (std::size_t i = 0; i < active.size(); ++i) {
    const auto& s = active[i];
    out << "<polyline class=\"" << s.name << "\" fill=\"none\" stroke=\"" << colour(i)
        << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (const auto& r : curve.records()) {
      const double v = r.*s.field;
      if (!std::isfinite(v)) continue;
      if (!first) out << ' ';
      out << num(box.sx(static_cast<double>(r.iteration))) << ',' << num(box.sy(v));
      first = false;
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kMargin - 60 << "\" y=\"" << kMargin + 14 * static_cast<double>(i)
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << colour(i) << "\">" << s.name << "</text>\n";
  }
  out << "</svg>\n";
}

void write_boundary_svg(std::ostream& out, const Predictor& predict, const data::Dataset& points,
                        std::size_t grid) {
  if (points.dim() != 2) throw DimensionError("boundary plot needs 2-D points, got " + std::to_string(points.dim()));
  if (grid < 2) throw DomainError("boundary plot grid must be at least 2");
  Box box;
  for (std::size_t r = 0; r < points.size(); ++r) box.add(points.features(r, 0), points.features(r, 1));
  box.pad(0.05);
  nn::Tensor cells = nn::Tensor::matrix(grid * grid, 2);
  const double cw = (box.x1 - box.x0) / static_cast<double>(grid);
  const double ch = (box.y1 - box.y0) / static_cast<double>(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    for (std::size_t j = 0; j < grid; ++j) {
      cells(i * grid + j, 0) = box.x0 + (static_cast<double>(j) + 0.5) * cw;
      cells(i * grid + j, 1) = box.y0 + (static_cast<double>(i) + 0.5) * ch;
    }
  }
  const auto labels = predict(cells);
  open_svg(out, "decision regions");
  out << "<g opacity=\"0.35\" shape-rendering=\"crispEdges\">\n";
  const double pw = box.sx(box.x0 + cw) - box.sx(box.x0);
  const double ph = box.sy(box.y0) - box.sy(box.y0 + ch);
  for (std::size_t c = 0; c < cells.rows(); ++c) {
    out << "<rect x=\"" << num(box.sx(cells(c, 0) - cw / 2)) << "\" y=\"" << num(box.sy(cells(c, 1) + ch / 2))
        << "\" width=\"" << num(pw) << "\" height=\"" << num(ph) << "\" fill=\""
        << colour(static_cast<std::size_t>(labels[c])) << "\"/>\n";
  }
  out << "</g>\n<g stroke=\"black\" stroke-width=\"0.3\">\n";
  for (std::size_t r = 0; r < points.size(); ++r) {
    out << "<circle cx=\"" << num(box.sx(points.features(r, 0))) << "\" cy=\"" << num(box.sy(points.features(r, 1)))
        << "\" r=\"2\" fill=\"" << colour(static_cast<std::size_t>(points.labels[r])) << "\"/>\n";
  }
  out << "</g>\n";
  axes(out, box, "x0", "x1");
  out << "</svg>\n";
}

void write_hull_scatter_svg(std::ostream& out, const std::vector<nn::Tensor>& anchors, const nn::Tensor& samples,
                            std::span<const int> sample_labels, std::string_view title) {
  if (samples.rows() != sample_labels.size()) {
    throw DimensionError("scatter plot: " + std::to_string(samples.rows()) + " samples for " +
                         std::to_string(sample_labels.size()) + " labels");
  }
  Box box;
  for (const auto& a : anchors) {
    if (a.rank() != 2 || a.cols() != 2) throw DimensionError("scatter plot needs 2-D anchors");
    for (std::size_t r = 0; r < a.rows(); ++r) box.add(a(r, 0), a(r, 1));
  }
  if (samples.rows() > 0 && samples.cols() != 2) throw DimensionError("scatter plot needs 2-D samples");
  for (std::size_t r = 0; r < samples.rows(); ++r) box.add(samples(r, 0), samples(r, 1));
  box.pad(0.05);
  open_svg(out, title);
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    if (anchors[k].rows() == 0) continue;
    const auto poly = models::hull_polygon(anchors[k]);
    out << "<polygon class=\"hull\" fill=\"" << colour(k) << "\" fill-opacity=\"0.12\" stroke=\"" << colour(k)
        << "\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < poly.rows(); ++i) {
      if (i) out << ' ';
      out << num(box.sx(poly(i, 0))) << ',' << num(box.sy(poly(i, 1)));
    }
    out << "\"/>\n";
    for (std::size_t r = 0; r < anchors[k].rows(); ++r) {
      out << "<circle cx=\"" << num(box.sx(anchors[k](r, 0))) << "\" cy=\"" << num(box.sy(anchors[k](r, 1)))
          << "\" r=\"2.5\" fill=\"none\" stroke=\"" << colour(k) << "\"/>\n";
    }
  }
  for (std::size_t r = 0; r < samples.rows(); ++r) {
    out << "<circle class=\"sample\" cx=\"" << num(box.sx(samples(r, 0))) << "\" cy=\"" << num(box.sy(samples(r, 1)))
        << "\" r=\"1.5\" fill=\"" << colour(static_cast<std::size_t>(sample_labels[r])) << "\"/>\n";
  }
  axes(out, box, "x0", "x1");
  out << "</svg>\n";
}

}  // namespace pgan::cli
