#include "aad/io/csv.hpp"

#include <cstdio>
#include <sstream>

#include "aad/errors.hpp"

namespace aad::io {

CsvWriter::CsvWriter(const std::filesystem::path& path,
                     std::vector<std::string> header)
    : out_(path, std::ios::trunc), n_cols_(header.size()) {
  if (!out_) throw_io("csv: cannot open ", path, " for writing");
  if (header.empty()) throw_io("csv: empty header for ", path);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_)
    throw_io("csv: row with ", cells.size(), " cells, header has ", n_cols_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw_io("csv: write failed");
}

std::string CsvWriter::num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string CsvWriter::num(std::int64_t v) { return std::to_string(v); }

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw_io("csv: missing column '", name, "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("csv: cannot open ", path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw_io("csv: empty file ", path);
  return table;
}

}  // namespace aad::io
