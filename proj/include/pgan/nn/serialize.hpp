#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pgan/nn/network.hpp"

namespace pgan::nn {

inline constexpr char kBlobMagic[4] = {'P', 'G', 'N', 'N'};
inline constexpr std::uint16_t kBlobVersion = 1;

/// Versioned binary parameter snapshot.
///
/// Layout (all integers and floats little-endian):
///   "PGNN"  u16 version  u32 section_count
///   per section: u16 name_len, name bytes, u8 kind, payload
///     kind 0 network : u32 layers; per layer u8 activation, u32 out, u32 in,
///                      out*in f64 weights (row-major), out f64 bias
///     kind 1 doubles : u64 count, f64 values
///     kind 2 indices : u64 count, u64 values
///     kind 3 text    : u64 length, bytes
class Blob {
 public:
  using Indices = std::vector<std::uint64_t>;
  using Section = std::variant<Network, std::vector<double>, Indices, std::string>;

  void put(std::string name, Section value);
  bool contains(std::string_view name) const;

  const Network& network(std::string_view name) const;
  const std::vector<double>& doubles(std::string_view name) const;
  const Indices& indices(std::string_view name) const;
  const std::string& text(std::string_view name) const;

  const std::vector<std::pair<std::string, Section>>& sections() const noexcept { return sections_; }

 private:
  const Section& find(std::string_view name) const;
  std::vector<std::pair<std::string, Section>> sections_;
};

std::vector<std::uint8_t> encode(const Blob& blob);
Blob decode(std::span<const std::uint8_t> bytes);

void save_blob(const std::filesystem::path& path, const Blob& blob);
Blob load_blob(const std::filesystem::path& path);

/// Single-network snapshot stored under the section name "net".
std::vector<std::uint8_t> encode_network(const Network& net);
Network decode_network(std::span<const std::uint8_t> bytes);

}  // namespace pgan::nn
