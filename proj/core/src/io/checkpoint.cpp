#include "aad/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "aad/errors.hpp"

namespace aad::io {

namespace {

constexpr char kMagic[8] = {'A', 'A', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

void Checkpoint::put(const std::string& name, std::vector<std::int64_t> shape,
                     std::vector<float> values) {
  if (shape_numel(shape) != static_cast<std::int64_t>(values.size()))
    throw_io("checkpoint: shape/value mismatch for tensor '", name, "'");
  if (index_.count(name))
    throw_io("checkpoint: duplicate tensor name '", name, "'");
  index_[name] = entries_.size();
  entries_.push_back({name, std::move(shape), std::move(values)});
}

void Checkpoint::put_doubles(const std::string& name,
                             std::vector<std::int64_t> shape,
                             const std::vector<double>& values) {
  std::vector<float> f(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    f[i] = static_cast<float>(values[i]);
  put(name, std::move(shape), std::move(f));
}

void Checkpoint::put_scalar(const std::string& name, double value) {
  put_doubles(name, {1}, {value});
}

bool Checkpoint::has(const std::string& name) const {
  return index_.count(name) > 0;
}

const TensorEntry& Checkpoint::get(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end())
    throw_io("checkpoint: missing tensor '", name, "'");
  return entries_[it->second];
}

std::vector<double> Checkpoint::get_doubles(const std::string& name) const {
  const auto& e = get(name);
  std::vector<double> d(e.values.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    d[i] = static_cast<double>(e.values[i]);
  return d;
}

double Checkpoint::get_scalar(const std::string& name) const {
  const auto& e = get(name);
  if (e.values.size() != 1)
    throw_io("checkpoint: tensor '", name, "' is not a scalar");
  return static_cast<double>(e.values[0]);
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io("checkpoint: cannot open ", path, " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_le(out, kVersion);
  write_le(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    write_le(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    write_le(out, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) write_le(out, static_cast<std::uint64_t>(d));
  }
  for (const auto& e : entries_)
    out.write(reinterpret_cast<const char*>(e.values.data()),
              static_cast<std::streamsize>(e.values.size() * 4));
  if (!out) throw_io("checkpoint: write failed for ", path);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("checkpoint: cannot open ", path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw_io("checkpoint: bad magic in ", path);
  const auto version = read_le<std::uint32_t>(in);
  if (version != kVersion)
    throw_io("checkpoint: unsupported version ", version, " in ", path);
  const auto count = read_le<std::uint32_t>(in);

  Checkpoint ckpt;
  std::vector<std::int64_t> counts;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_le<std::uint32_t>(in);
    if (!in || name_len > 4096)
      throw_io("checkpoint: bad tensor name length in ", path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = read_le<std::uint32_t>(in);
    if (!in || ndim > 8) throw_io("checkpoint: bad ndim in ", path);
    std::vector<std::int64_t> shape;
    for (std::uint32_t d = 0; d < ndim; ++d)
      shape.push_back(static_cast<std::int64_t>(read_le<std::uint64_t>(in)));
    counts.push_back(shape_numel(shape));
    ckpt.index_[name] = ckpt.entries_.size();
    ckpt.entries_.push_back({std::move(name), std::move(shape), {}});
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& e = ckpt.entries_[i];
    e.values.resize(static_cast<std::size_t>(counts[i]));
    in.read(reinterpret_cast<char*>(e.values.data()),
            static_cast<std::streamsize>(e.values.size() * 4));
    if (!in)
      throw_io("checkpoint: truncated payload for tensor '", e.name, "' in ",
               path);
  }
  return ckpt;
}

}  // namespace aad::io
