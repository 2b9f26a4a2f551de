#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flexmeta/analysis.hpp"

namespace flexmeta::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back("");
  return cells;
}

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("ingest: " + what);
}

double parse_cell(const std::string& cell, const std::string& column,
                  std::size_t row) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &consumed);
  } catch (const std::exception&) {
    fail("non-numeric " + column + " in row " + std::to_string(row));
  }
  if (consumed != cell.size())
    fail("non-numeric " + column + " in row " + std::to_string(row));
  return value;
}

}  // namespace

std::vector<classic::StudyRecord> ingest_text(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail("empty file");
  const std::vector<std::string> header = split_csv_line(line);

  constexpr std::size_t kMissing = static_cast<std::size_t>(-1);
  std::size_t col_study = kMissing, col_y = kMissing, col_se = kMissing,
              col_var = kMissing;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "study") col_study = i;
    else if (header[i] == "y") col_y = i;
    else if (header[i] == "se") col_se = i;
    else if (header[i] == "var") col_var = i;
  }
  if (col_study == kMissing) fail("missing column: study");
  if (col_y == kMissing) fail("missing column: y");
  if (col_se != kMissing && col_var != kMissing)
    fail("columns se and var are mutually exclusive");
  if (col_se == kMissing && col_var == kMissing)
    fail("missing column: se (or var)");

  std::vector<classic::StudyRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(line);
    const std::size_t needed =
        std::max({col_study, col_y, col_se == kMissing ? col_var : col_se});
    if (cells.size() <= needed)
      fail("too few cells in row " + std::to_string(row));
    classic::StudyRecord rec;
    rec.id = cells[col_study];
    rec.y = parse_cell(cells[col_y], "y", row);
    if (!std::isfinite(rec.y))
      fail("non-finite y in row " + std::to_string(row));
    if (col_se != kMissing) {
      rec.se = parse_cell(cells[col_se], "se", row);
      if (!(rec.se > 0.0) || !std::isfinite(rec.se))
        fail("nonpositive se in row " + std::to_string(row));
    } else {
      const double var = parse_cell(cells[col_var], "var", row);
      if (!(var > 0.0) || !std::isfinite(var))
        fail("nonpositive var in row " + std::to_string(row));
      rec.se = std::sqrt(var);
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) fail("no data rows");
  return records;
}

std::vector<classic::StudyRecord> ingest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ingest_text(buf.str());
}

}  // namespace flexmeta::cli
