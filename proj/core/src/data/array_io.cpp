#include "aad/data/array_io.hpp"

#include <cstring>
#include <fstream>

#include "aad/errors.hpp"

namespace aad::data {

namespace {

constexpr char kMagic[8] = {'A', 'A', 'D', 'A', 'R', 'R', 'A', 'Y'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kDtypeFloat32 = 1;

static_assert(sizeof(float) == 4);

template <typename T>
void write_le(std::ofstream& out, T v) {
  // Fields are little-endian on disk; this build targets LE hosts.
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void write_array(const std::filesystem::path& path, const ArrayData& array) {
  std::int64_t numel = 1;
  for (auto d : array.shape) {
    if (d <= 0) throw_io("write_array: non-positive dim ", d, " for ", path);
    numel *= d;
  }
  if (numel != static_cast<std::int64_t>(array.values.size()))
    throw_io("write_array: shape product ", numel, " vs ",
             array.values.size(), " values for ", path);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("write_array: cannot open ", path);
  out.write(kMagic, sizeof(kMagic));
  write_le(out, kVersion);
  write_le(out, kDtypeFloat32);
  write_le(out, static_cast<std::uint32_t>(array.shape.size()));
  for (auto d : array.shape) write_le(out, static_cast<std::uint64_t>(d));
  out.write(reinterpret_cast<const char*>(array.values.data()),
            static_cast<std::streamsize>(array.values.size() * 4));
  if (!out) throw_io("write_array: write failed for ", path);
}

ArrayData read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("read_array: cannot open ", path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw_io("read_array: bad magic in ", path);
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion)
    throw_io("read_array: unsupported version ", version, " in ", path);
  const auto dtype = read_le<std::uint32_t>(in);
  if (dtype != kDtypeFloat32)
    throw_io("read_array: unsupported dtype code ", dtype, " in ", path);
  const auto ndim = read_le<std::uint32_t>(in);
  if (ndim > 8) throw_io("read_array: implausible ndim ", ndim, " in ", path);

  ArrayData array;
  std::int64_t numel = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const auto d = static_cast<std::int64_t>(read_le<std::uint64_t>(in));
    if (!in || d <= 0 || d > (1LL << 32))
      throw_io("read_array: bad dimension in ", path);
    array.shape.push_back(d);
    numel *= d;
  }
  array.values.resize(static_cast<std::size_t>(numel));
  in.read(reinterpret_cast<char*>(array.values.data()),
          static_cast<std::streamsize>(numel * 4));
  if (!in)
    throw_io("read_array: truncated payload in ", path, " (expected ", numel,
             " float32 values)");
  return array;
}

}  // namespace aad::data
