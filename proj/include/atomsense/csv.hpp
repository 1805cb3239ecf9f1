#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "atomsense/types.hpp"

namespace atomsense {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Streaming CSV writer with a fixed header and full-precision floats
/// (%.17g), so reruns of a deterministic pipeline are byte-identical.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t n_cols_;
  std::string path_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 when absent
  std::vector<double> col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

std::string format_full(double v);

}  // namespace atomsense
