#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "peneo/optim.hpp"
#include "peneo/tensor.hpp"

namespace peneo {

// Tensor container file: magic "PENE", u32 version, then records of
// (u32 name length, name bytes, u32 rank, u64 dims..., f32 payload),
// all little-endian. Round-trips must be bit-exact.
namespace ckpt {

constexpr char kMagic[4] = {'P', 'E', 'N', 'E'};
constexpr std::uint32_t kVersion = 1;

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f32(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(os, bits);
}

inline bool get_u32(std::istream& is, std::uint32_t* v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  *v = 0;
  for (int i = 0; i < 4; ++i) *v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return true;
}

inline bool get_u64(std::istream& is, std::uint64_t* v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) return false;
  *v = 0;
  for (int i = 0; i < 8; ++i) *v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

}  // namespace detail

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline void save(const std::string& path, const NamedTensors& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open for write: " + path);
  os.write(kMagic, 4);
  detail::put_u32(os, kVersion);
  for (const auto& [name, tensor] : tensors) {
    detail::put_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u32(os, static_cast<std::uint32_t>(tensor.rank()));
    for (int d : tensor.dims()) detail::put_u64(os, static_cast<std::uint64_t>(d));
    for (std::size_t i = 0; i < tensor.size(); ++i) detail::put_f32(os, tensor[i]);
  }
  if (!os) throw DataError("checkpoint: write failed: " + path);
}

inline NamedTensors load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic in " + path);
  }
  std::uint32_t version = 0;
  if (!detail::get_u32(is, &version) || version != kVersion) {
    throw DataError("checkpoint: unsupported version in " + path);
  }
  NamedTensors out;
  for (;;) {
    std::uint32_t name_len = 0;
    if (!detail::get_u32(is, &name_len)) break;  // clean EOF
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw DataError("checkpoint: truncated name");
    std::uint32_t rank = 0;
    if (!detail::get_u32(is, &rank)) throw DataError("checkpoint: truncated rank");
    std::vector<int> dims;
    std::size_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint64_t d = 0;
      if (!detail::get_u64(is, &d) || d == 0) throw DataError("checkpoint: bad dimension");
      dims.push_back(static_cast<int>(d));
      numel *= static_cast<std::size_t>(d);
    }
    std::vector<float> values(numel);
    for (std::size_t i = 0; i < numel; ++i) {
      std::uint32_t bits = 0;
      if (!detail::get_u32(is, &bits)) throw DataError("checkpoint: truncated payload");
      std::memcpy(&values[i], &bits, 4);
    }
    out.emplace_back(std::move(name), Tensor::from_values(std::move(dims), std::move(values)));
  }
  return out;
}

inline const Tensor* find(const NamedTensors& tensors, const std::string& name) {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

}  // namespace ckpt

// Save/restore a parameter store's values (not optimizer state).
template <class T>
void save_param_store(const std::string& path, const ParamStoreT<T>& params) {
  ckpt::NamedTensors tensors;
  tensors.reserve(params.slots.size());
  for (const auto& s : params.slots) {
    tensors.emplace_back(s->name, s->value.template cast<float>());
  }
  ckpt::save(path, tensors);
}

template <class T>
void load_param_store(const ckpt::NamedTensors& tensors, ParamStoreT<T>& params) {
  for (auto& s : params.slots) {
    const Tensor* t = ckpt::find(tensors, s->name);
    if (t == nullptr) throw DataError("checkpoint: missing tensor " + s->name);
    if (t->dims() != s->value.dims()) {
      throw DataError("checkpoint: dims mismatch for " + s->name);
    }
    for (std::size_t i = 0; i < t->size(); ++i) s->value[i] = static_cast<T>((*t)[i]);
  }
}

}  // namespace peneo
