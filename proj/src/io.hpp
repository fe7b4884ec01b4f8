#pragma once

#include <string>
#include <vector>

#include "linalg.hpp"

namespace gbv {

// Numeric CSV with a mandatory header row.
struct CsvTable {
  std::vector<std::string> columns;
  Mat values;  // rows x columns

  long rows() const { return values.rows(); }
  int col_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& columns, const Mat& values);

// Round-trip-exact double formatting (17 significant digits).
std::string format_double(double v);

}  // namespace gbv
