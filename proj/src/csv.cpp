#include "rrp/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rrp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

double parse_cell(const std::string& raw, std::size_t row,
                  const std::string& col) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw DomainError("non-numeric cell at (row " + std::to_string(row) +
                      ", col " + col + "): '" + cell + "'");
  }
  if (!std::isfinite(value)) {
    throw DomainError("non-finite value at (row " + std::to_string(row) +
                      ", col " + col + ")");
  }
  return value;
}

struct Parsed {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  bool has_y = false;
};

Parsed parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DomainError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  std::vector<std::string> names;
  for (const std::string& h : header) names.push_back(trim(h));
  bool has_y = !names.empty() && names.back() == "y";
  const std::size_t d = has_y ? names.size() - 1 : names.size();
  if (d == 0) throw DomainError("header declares no feature columns: " + path);
  for (std::size_t k = 0; k < d; ++k) {
    const std::string expected = "x" + std::to_string(k + 1);
    if (names[k] != expected) {
      throw DomainError("unexpected header column '" + names[k] +
                        "' (expected '" + expected + "')");
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_idx = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row_idx;
    if (trim(line).empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != names.size()) {
      throw DomainError("row " + std::to_string(row_idx) + " has " +
                        std::to_string(cells.size()) + " cells, expected " +
                        std::to_string(names.size()));
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      values.push_back(parse_cell(cells[k], row_idx, names[k]));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw DomainError("file has a header but no rows: " + path);

  Parsed out;
  out.has_y = has_y;
  out.X.resize(static_cast<Index>(rows.size()), static_cast<Index>(d));
  if (has_y) out.y.resize(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      out.X(static_cast<Index>(i), static_cast<Index>(k)) = rows[i][k];
    }
    if (has_y) out.y[static_cast<Index>(i)] = rows[i][d];
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path) {
  Parsed parsed = parse_file(path);
  if (!parsed.has_y) {
    throw DomainError("file lacks the target column 'y': " + path);
  }
  return Dataset::validated(std::move(parsed.X), std::move(parsed.y));
}

Eigen::MatrixXd load_csv_features(const std::string& path) {
  return parse_file(path).X;
}

std::string format_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);  // LF endings everywhere
  if (!out) throw DomainError("cannot write file: " + path);
  for (Index k = 0; k < data.d(); ++k) {
    out << "x" << (k + 1) << ",";
  }
  out << "y\n";
  for (Index i = 0; i < data.n(); ++i) {
    for (Index k = 0; k < data.d(); ++k) {
      out << format_double(data.X(i, k)) << ",";
    }
    out << format_double(data.y[i]) << "\n";
  }
}

}  // namespace rrp
