#pragma once

#include <filesystem>

#include "pgan/data/dataset.hpp"

namespace pgan::data {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair (big-endian headers, unsigned byte
/// payload). Pixels are scaled to [0, 1]; `downscale` > 1 mean-pools
/// non-overlapping downscale x downscale blocks.
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t downscale = 1);

/// Writes `ds` back as IDX files. Requires Dataset::image_shape and features
/// in [0, 1]; values are mapped to round(255 * v).
void write_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
               const Dataset& ds);

}  // namespace pgan::data
