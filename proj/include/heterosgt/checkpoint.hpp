#pragma once

// Versioned binary checkpoint: magic, format version, the resolved config as
// text, then named tensors with their shapes. Values are little-endian doubles.

#include "autodiff.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace heterosgt::checkpoint {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr char kMagic[8] = {'H', 'S', 'G', 'T', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;

struct Checkpoint {
  std::string config;
  std::map<std::string, ad::Matrix> tensors;
};

namespace detail {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw CheckpointError("checkpoint truncated");
  return v;
}

inline std::string get_string(std::istream& is, std::uint64_t limit) {
  const auto n = get<std::uint64_t>(is);
  if (n > limit) throw CheckpointError("checkpoint string length out of range");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw CheckpointError("checkpoint truncated");
  return s;
}

}  // namespace detail

inline void write(std::ostream& os, const std::string& config, const std::vector<const ad::Parameter*>& params) {
  os.write(kMagic, sizeof kMagic);
  detail::put(os, kVersion);
  detail::put<std::uint64_t>(os, config.size());
  os.write(config.data(), static_cast<std::streamsize>(config.size()));
  detail::put<std::uint64_t>(os, params.size());
  for (const ad::Parameter* p : params) {
    detail::put<std::uint64_t>(os, p->name.size());
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.rows()));
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(p->value.cols()));
    os.write(reinterpret_cast<const char*>(p->value.data()),
             static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!os) throw CheckpointError("failed writing checkpoint");
}

inline Checkpoint read(std::istream& is) {
  char magic[sizeof kMagic];
  if (!is.read(magic, sizeof magic) || !std::equal(magic, magic + sizeof magic, kMagic))
    throw CheckpointError("not a checkpoint file");
  const auto version = detail::get<std::uint32_t>(is);
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config = detail::get_string(is, 1u << 24);
  const auto count = detail::get<std::uint64_t>(is);
  for (std::uint64_t t = 0; t < count; ++t) {
    std::string name = detail::get_string(is, 4096);
    const auto rows = detail::get<std::uint64_t>(is);
    const auto cols = detail::get<std::uint64_t>(is);
    if (rows > (1u << 28) || cols > (1u << 28) || rows * cols > (1ull << 31))
      throw CheckpointError("tensor '" + name + "' has an implausible shape");
    ad::Matrix m(static_cast<ad::Index>(rows), static_cast<ad::Index>(cols));
    if (m.size() && !is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double))))
      throw CheckpointError("checkpoint truncated");
    if (!ck.tensors.emplace(std::move(name), std::move(m)).second) throw CheckpointError("duplicate tensor name");
  }
  return ck;
}

inline void save(const std::filesystem::path& path, const std::string& config,
                 const std::vector<const ad::Parameter*>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  write(os, config, params);
}

inline Checkpoint load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
  return read(is);
}

/// Copies every parameter by name; missing tensors and shape mismatches throw.
inline void restore(const Checkpoint& ck, const std::vector<ad::Parameter*>& params) {
  for (ad::Parameter* p : params) {
    auto it = ck.tensors.find(p->name);
    if (it == ck.tensors.end()) throw CheckpointError("checkpoint lacks tensor '" + p->name + "'");
    if (it->second.rows() != p->value.rows() || it->second.cols() != p->value.cols())
      throw CheckpointError("shape mismatch for tensor '" + p->name + "'");
    p->value = it->second;
  }
}

}  // namespace heterosgt::checkpoint
