#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace aad::io {

/// Fixed-column CSV writer; numbers formatted with %.10g.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path,
            std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);

  static std::string num(double v);
  static std::string num(std::int64_t v);

 private:
  std::ofstream out_;
  std::size_t n_cols_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws if missing
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace aad::io
