#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rbert/common.hpp"
#include "rbert/nn.hpp"

namespace rbert {

// Named-tensor container. Layout (all integers little-endian):
//   magic "RBCK", u32 version, u32 tensor count
//   per tensor: u32 name length, name bytes, u8 dtype (8 = float64),
//               u32 ndim, u64 dims...
//   then raw values per tensor, in header order.
// Shared parameters appear once under their canonical name.
namespace ckpt {

constexpr char kMagic[4] = {'R', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 8;

template <class T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw data_error("checkpoint: truncated file");
  return v;
}

}  // namespace ckpt

inline void save_checkpoint(const std::string& path,
                            std::span<Parameter* const> params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot open checkpoint for writing: " + path);
  out.write(ckpt::kMagic, 4);
  ckpt::write_raw(out, ckpt::kVersion);
  ckpt::write_raw(out, static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    ckpt::write_raw(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    ckpt::write_raw(out, ckpt::kDtypeF64);
    ckpt::write_raw(out, static_cast<std::uint32_t>(p->value.shape.size()));
    for (int d : p->value.shape) {
      ckpt::write_raw(out, static_cast<std::uint64_t>(d));
    }
  }
  for (const Parameter* p : params) {
    static_assert(sizeof(Real) == 8);
    out.write(reinterpret_cast<const char*>(p->value.v.data()),
              static_cast<std::streamsize>(p->value.v.size() * sizeof(Real)));
  }
  if (!out) throw data_error("checkpoint write failed: " + path);
}

// Loads values into the given parameters, matched by name. Every parameter
// must be present with its exact shape; unknown tensors in the file are an
// error too.
inline void load_checkpoint(const std::string& path,
                            std::span<Parameter* const> params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, ckpt::kMagic, 4) != 0) {
    throw data_error("not a checkpoint file: " + path);
  }
  if (ckpt::read_raw<std::uint32_t>(in) != ckpt::kVersion) {
    throw data_error("unsupported checkpoint version: " + path);
  }
  std::uint32_t count = ckpt::read_raw<std::uint32_t>(in);
  struct Entry {
    std::string name;
    std::vector<int> shape;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    std::uint32_t name_len = ckpt::read_raw<std::uint32_t>(in);
    e.name.resize(name_len);
    in.read(e.name.data(), name_len);
    if (ckpt::read_raw<std::uint8_t>(in) != ckpt::kDtypeF64) {
      throw data_error("checkpoint: unsupported dtype for " + e.name);
    }
    std::uint32_t ndim = ckpt::read_raw<std::uint32_t>(in);
    for (std::uint32_t d = 0; d < ndim; ++d) {
      e.shape.push_back(static_cast<int>(ckpt::read_raw<std::uint64_t>(in)));
    }
    entries.push_back(std::move(e));
  }
  std::map<std::string, Parameter*> by_name;
  for (Parameter* p : params) by_name[p->name] = p;
  std::map<std::string, bool> filled;
  for (const Entry& e : entries) {
    auto it = by_name.find(e.name);
    if (it == by_name.end()) {
      throw data_error("checkpoint: unknown tensor " + e.name);
    }
    Parameter* p = it->second;
    if (p->value.shape != e.shape) {
      throw data_error("checkpoint: shape mismatch for " + e.name);
    }
    in.read(reinterpret_cast<char*>(p->value.v.data()),
            static_cast<std::streamsize>(p->value.v.size() * sizeof(Real)));
    if (!in) throw data_error("checkpoint: truncated values for " + e.name);
    filled[e.name] = true;
  }
  for (Parameter* p : params) {
    if (!filled.count(p->name)) {
      throw data_error("checkpoint: missing tensor " + p->name);
    }
  }
}

}  // namespace rbert
