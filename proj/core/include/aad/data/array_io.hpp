#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace aad::data {

/// On-disk array: magic, version, dtype code, ndim, dims, then the payload
/// as little-endian 32-bit floats. Round-trips bit-exactly.
struct ArrayData {
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

void write_array(const std::filesystem::path& path, const ArrayData& array);
ArrayData read_array(const std::filesystem::path& path);

}  // namespace aad::data
