#include "pgan/data/idx.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <vector>

#include "pgan/common/error.hpp"

namespace pgan::data {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                         static_cast<char>(v)};
  out.write(bytes, 4);
}

void require_size(const std::vector<std::uint8_t>& b, std::size_t expected, const std::filesystem::path& path) {
  if (b.size() != expected) {
    throw FormatError(path.string() + ": expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(b.size()));
  }
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t downscale) {
  if (downscale == 0) throw DomainError("load_idx: downscale factor must be >= 1");
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  if (img.size() < 16) throw FormatError(images_path.string() + ": header truncated");
  if (lab.size() < 8) throw FormatError(labels_path.string() + ": header truncated");
  if (be32(img, 0) != kIdxImageMagic) {
    throw FormatError(images_path.string() + ": bad magic, expected 0x00000803");
  }
  if (be32(lab, 0) != kIdxLabelMagic) {
    throw FormatError(labels_path.string() + ": bad magic, expected 0x00000801");
  }
  const std::size_t n = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t n_labels = be32(lab, 4);
  if (n != n_labels) {
    throw FormatError("load_idx: " + std::to_string(n) + " images but " + std::to_string(n_labels) + " labels");
  }
  require_size(img, 16 + n * rows * cols, images_path);
  require_size(lab, 8 + n, labels_path);
  if (rows % downscale != 0 || cols % downscale != 0) {
    throw DomainError("load_idx: " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " images are not divisible by downscale factor " + std::to_string(downscale));
  }

  const std::size_t out_rows = rows / downscale;
  const std::size_t out_cols = cols / downscale;
  const double pool = 1.0 / static_cast<double>(downscale * downscale);
  Dataset ds;
  ds.name = images_path.stem().string();
  ds.features = nn::Tensor::matrix(n, out_rows * out_cols);
  ds.image_shape = ImageShape{out_rows, out_cols};
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t* pixels = img.data() + 16 + i * rows * cols;
    for (std::size_t r = 0; r < out_rows; ++r) {
      for (std::size_t c = 0; c < out_cols; ++c) {
        double acc = 0.0;
        for (std::size_t dr = 0; dr < downscale; ++dr) {
          for (std::size_t dc = 0; dc < downscale; ++dc) {
            acc += pixels[(r * downscale + dr) * cols + c * downscale + dc];
          }
        }
        ds.features(i, r * out_cols + c) = acc * pool / 255.0;
      }
    }
    ds.labels.push_back(lab[8 + i]);
    max_label = std::max(max_label, static_cast<int>(lab[8 + i]));
  }
  ds.num_classes = static_cast<std::size_t>(max_label + 1);
  const auto counts = ds.class_counts();
  ds.degenerate = std::find(counts.begin(), counts.end(), 0) != counts.end();
  ds.validate();
  return ds;
}

void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const Dataset& ds) {
  if (!ds.image_shape) throw DomainError("write_idx: dataset has no image shape");
  const auto [rows, cols] = *ds.image_shape;
  if (rows * cols != ds.dim()) throw DimensionError("write_idx: image shape does not match feature width");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw Error("write_idx: cannot open output files");
  put_be32(img, kIdxImageMagic);
  put_be32(img, static_cast<std::uint32_t>(ds.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  put_be32(lab, kIdxLabelMagic);
  put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  std::vector<char> buf(ds.dim());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const double v = row[j];
      if (v < 0.0 || v > 1.0) throw DomainError("write_idx: pixel value outside [0, 1]");
      buf[j] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0)));
    }
    img.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (ds.labels[i] < 0 || ds.labels[i] > 255) throw DomainError("write_idx: label does not fit a byte");
    lab.put(static_cast<char>(ds.labels[i]));
  }
}

}  // namespace pgan::data
