#include "io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace gbv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim spaces and a trailing CR
    size_t a = cell.find_first_not_of(" \t\r");
    size_t b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

int CsvTable::col_index(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty CSV file: " + path);

  CsvTable table;
  table.columns = split_line(line);
  if (table.columns.empty()) throw IoError("CSV header is empty: " + path);

  std::vector<double> flat;
  long rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != table.columns.size())
      throw IoError("CSV row has wrong number of columns in " + path);
    for (const auto& c : cells) {
      try {
        size_t pos = 0;
        const double v = std::stod(c, &pos);
        if (pos != c.size()) throw std::invalid_argument(c);
        flat.push_back(v);
      } catch (const std::exception&) {
        throw IoError("non-numeric CSV cell '" + c + "' in " + path);
      }
    }
    ++rows;
  }

  table.values.resize(rows, static_cast<long>(table.columns.size()));
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < table.values.cols(); ++c)
      table.values(r, c) = flat[static_cast<size_t>(r) * table.values.cols() + c];
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns, const Mat& values) {
  if (static_cast<long>(columns.size()) != values.cols())
    throw ArgumentError("write_csv: header/matrix column mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV file: " + path);
  for (size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
  out << "\n";
  for (long r = 0; r < values.rows(); ++r) {
    for (long c = 0; c < values.cols(); ++c) out << (c ? "," : "") << format_double(values(r, c));
    out << "\n";
  }
  if (!out) throw IoError("failed writing CSV file: " + path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace gbv
