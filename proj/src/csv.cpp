#include "atomsense/csv.hpp"

#include <cstdio>
#include <sstream>

namespace atomsense {

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path), n_cols_(header.size()), path_(path) {
  if (!out_) throw CsvError("cannot open for writing: " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    out_ << header[i] << (i + 1 < header.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != n_cols_) {
    throw CsvError(path_ + ": row width does not match header");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    out_ << format_full(values[i]) << (i + 1 < values.size() ? "," : "");
  }
  out_ << "\n";
  if (!out_) throw CsvError(path_ + ": write failed");
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> CsvTable::col(const std::string& name) const {
  const int idx = column(name);
  if (idx < 0) throw CsvError("missing CSV column: " + name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[idx]);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open for reading: " + path);
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path + ": empty file");
  {
    std::istringstream hs(line);
    std::string field;
    while (std::getline(hs, field, ',')) table.header.push_back(field);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<double> row;
    row.reserve(table.header.size());
    while (std::getline(ls, field, ',')) row.push_back(std::stod(field));
    if (row.size() != table.header.size()) {
      throw CsvError(path + ": ragged row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace atomsense
