#include "pgan/nn/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "pgan/common/error.hpp"

namespace pgan::nn {
namespace {

enum class Kind : std::uint8_t { network = 0, doubles = 1, indices = 2, text = 3 };

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { put_le(v, 2); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f64(double v) { put_le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void put_le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(get_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f64() { return std::bit_cast<double>(get_le(8)); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw FormatError("blob truncated: need " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", " + std::to_string(in_.size() - pos_) + " left");
    }
  }
  std::uint64_t get_le(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= std::uint64_t{in_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(bytes);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void write_network(Writer& w, const Network& net) {
  w.u32(static_cast<std::uint32_t>(net.depth()));
  for (const auto& layer : net.layers()) {
    w.u8(static_cast<std::uint8_t>(layer.activation));
    w.u32(static_cast<std::uint32_t>(layer.out()));
    w.u32(static_cast<std::uint32_t>(layer.in()));
    for (double v : layer.weight.values()) w.f64(v);
    for (double v : layer.bias.values()) w.f64(v);
  }
}

Network read_network(Reader& r) {
  const std::uint32_t depth = r.u32();
  std::vector<DenseLayer> layers;
  for (std::uint32_t l = 0; l < depth; ++l) {
    const std::uint8_t act = r.u8();
    if (act > static_cast<std::uint8_t>(Activation::softmax)) {
      throw FormatError("blob: unknown activation code " + std::to_string(act));
    }
    const std::size_t out = r.u32();
    const std::size_t in = r.u32();
    DenseLayer layer{Tensor::matrix(out, in), Tensor::vector(out), static_cast<Activation>(act)};
    for (double& v : layer.weight.values()) v = r.f64();
    for (double& v : layer.bias.values()) v = r.f64();
    layers.push_back(std::move(layer));
  }
  try {
    return Network(std::move(layers));
  } catch (const ConsistencyError& e) {
    throw FormatError(std::string("blob: stored network is inconsistent: ") + e.what());
  }
}

}  // namespace

void Blob::put(std::string name, Section value) {
  for (auto& [n, v] : sections_) {
    if (n == name) {
      v = std::move(value);
      return;
    }
  }
  sections_.emplace_back(std::move(name), std::move(value));
}

bool Blob::contains(std::string_view name) const {
  for (const auto& [n, v] : sections_) {
    if (n == name) return true;
  }
  return false;
}

const Blob::Section& Blob::find(std::string_view name) const {
  for (const auto& [n, v] : sections_) {
    if (n == name) return v;
  }
  throw FormatError("blob: missing section '" + std::string(name) + "'");
}

template <class T>
static const T& typed(const Blob::Section& s, std::string_view name) {
  if (const auto* p = std::get_if<T>(&s)) return *p;
  throw FormatError("blob: section '" + std::string(name) + "' has an unexpected kind");
}

const Network& Blob::network(std::string_view name) const { return typed<Network>(find(name), name); }
const std::vector<double>& Blob::doubles(std::string_view name) const {
  return typed<std::vector<double>>(find(name), name);
}
const Blob::Indices& Blob::indices(std::string_view name) const { return typed<Indices>(find(name), name); }
const std::string& Blob::text(std::string_view name) const { return typed<std::string>(find(name), name); }

std::vector<std::uint8_t> encode(const Blob& blob) {
  Writer w;
  w.raw(std::string_view(kBlobMagic, 4));
  w.u16(kBlobVersion);
  w.u32(static_cast<std::uint32_t>(blob.sections().size()));
  for (const auto& [name, section] : blob.sections()) {
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, Network>) {
            w.u8(static_cast<std::uint8_t>(Kind::network));
            write_network(w, v);
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            w.u8(static_cast<std::uint8_t>(Kind::doubles));
            w.u64(v.size());
            for (double x : v) w.f64(x);
          } else if constexpr (std::is_same_v<T, Blob::Indices>) {
            w.u8(static_cast<std::uint8_t>(Kind::indices));
            w.u64(v.size());
            for (auto x : v) w.u64(x);
          } else {
            w.u8(static_cast<std::uint8_t>(Kind::text));
            w.u64(v.size());
            w.raw(v);
          }
        },
        section);
  }
  return w.take();
}

Blob decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.raw(4) != std::string_view(kBlobMagic, 4)) throw FormatError("blob: bad magic, expected PGNN");
  const std::uint16_t version = r.u16();
  if (version != kBlobVersion) {
    throw FormatError("blob: unsupported version " + std::to_string(version));
  }
  Blob blob;
  const std::uint32_t count = r.u32();
  for (std::uint32_t s = 0; s < count; ++s) {
    std::string name = r.raw(r.u16());
    const auto kind = static_cast<Kind>(r.u8());
    switch (kind) {
      case Kind::network:
        blob.put(std::move(name), read_network(r));
        break;
      case Kind::doubles: {
        std::vector<double> v(r.u64());
        for (double& x : v) x = r.f64();
        blob.put(std::move(name), std::move(v));
        break;
      }
      case Kind::indices: {
        Blob::Indices v(r.u64());
        for (auto& x : v) x = r.u64();
        blob.put(std::move(name), std::move(v));
        break;
      }
      case Kind::text:
        blob.put(std::move(name), r.raw(r.u64()));
        break;
      default:
        throw FormatError("blob: unknown section kind in '" + name + "'");
    }
  }
  if (!r.done()) throw FormatError("blob: trailing bytes after last section");
  return blob;
}

void save_blob(const std::filesystem::path& path, const Blob& blob) {
  const auto bytes = encode(blob);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Blob load_blob(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

std::vector<std::uint8_t> encode_network(const Network& net) {
  Blob b;
  b.put("net", net);
  return encode(b);
}

Network decode_network(std::span<const std::uint8_t> bytes) { return decode(bytes).network("net"); }

}  // namespace pgan::nn
