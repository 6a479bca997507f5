#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace aad::io {

struct TensorEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

/// Named-tensor container: a header carrying the format version and the
/// tensor list with shapes, followed by little-endian float32 payloads in
/// header order. save/load round-trips bit-exactly.
class Checkpoint {
 public:
  void put(const std::string& name, std::vector<std::int64_t> shape,
           std::vector<float> values);
  void put_doubles(const std::string& name, std::vector<std::int64_t> shape,
                   const std::vector<double>& values);
  void put_scalar(const std::string& name, double value);

  bool has(const std::string& name) const;
  const TensorEntry& get(const std::string& name) const;
  std::vector<double> get_doubles(const std::string& name) const;
  double get_scalar(const std::string& name) const;

  const std::vector<TensorEntry>& entries() const { return entries_; }

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<TensorEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace aad::io
