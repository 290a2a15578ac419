#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "samra/semantics.hpp"

namespace samra::semantics {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void fail(std::size_t row, std::size_t col, const std::string& what) {
  throw std::invalid_argument("similarity table row " + std::to_string(row) + ", column " +
                              std::to_string(col) + ": " + what);
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    fail(row, col, "'" + cell + "' is not a number");
  }
  if (used != cell.size() || !std::isfinite(v)) fail(row, col, "'" + cell + "' is not a number");
  return v;
}

}  // namespace

SimilaritySurrogate parse_similarity_table(const std::string& text) {
  SimilarityGrid grid;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t row_index = 0;  // 1-based data row counter for diagnostics

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split_csv(t);
    if (!header_seen) {
      if (cells.size() < 2) fail(0, 1, "header needs at least one SINR breakpoint");
      for (std::size_t c = 1; c < cells.size(); ++c) {
        const double v = parse_number(cells[c], 0, c);
        if (!grid.sinr_db.empty() && !(v > grid.sinr_db.back())) {
          fail(0, c, "SINR breakpoints must be strictly increasing");
        }
        grid.sinr_db.push_back(v);
      }
      header_seen = true;
      continue;
    }
    ++row_index;
    if (cells.size() != grid.sinr_db.size() + 1) {
      fail(row_index, cells.size(), "expected " + std::to_string(grid.sinr_db.size() + 1) +
                                        " cells, found " + std::to_string(cells.size()));
    }
    const double u = parse_number(cells[0], row_index, 0);
    if (!grid.u_values.empty() && !(u > grid.u_values.back())) {
      fail(row_index, 0, "u values must be strictly increasing");
    }
    grid.u_values.push_back(u);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double v = parse_number(cells[c], row_index, c);
      if (v < 0.0 || v > 1.0) fail(row_index, c, "similarity outside [0, 1]");
      grid.cells.push_back(v);
    }
  }
  if (!header_seen || grid.u_values.empty()) {
    throw std::invalid_argument("similarity table: need a header row and at least one data row");
  }

  const std::size_t cols = grid.sinr_db.size();
  for (std::size_t r = 0; r < grid.u_values.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (c > 0 && grid.cell(r, c) < grid.cell(r, c - 1)) {
        fail(r + 1, c + 1, "similarity decreases with SINR");
      }
      if (r > 0 && grid.cell(r, c) < grid.cell(r - 1, c)) {
        fail(r + 1, c + 1, "similarity decreases with u");
      }
    }
  }
  return SimilaritySurrogate(std::move(grid));
}

SimilaritySurrogate load_similarity_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("similarity table: cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_similarity_table(buffer.str());
}

}  // namespace samra::semantics
