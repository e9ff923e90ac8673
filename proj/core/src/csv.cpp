#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hazmatch/dataset.hpp"

namespace hazmatch {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, const std::string& col, int row) {
  if (cell.empty()) {
    throw std::invalid_argument("missing value in column '" + col + "' at data row " +
                                std::to_string(row));
  }
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(cell.c_str(), &end);
  if (end != cell.c_str() + cell.size() || errno == ERANGE) {
    throw std::invalid_argument("non-numeric cell '" + cell + "' in column '" + col +
                                "' at data row " + std::to_string(row));
  }
  return v;
}

int parse_binary(const std::string& cell, const std::string& col, int row,
                 const std::string& what) {
  const double v = parse_number(cell, col, row);
  if (v == 0.0) return 0;
  if (v == 1.0) return 1;
  throw std::invalid_argument(what + " at data row " + std::to_string(row) +
                              " (column '" + col + "', value " + cell + ")");
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw std::invalid_argument("missing column '" + name + "' in CSV header");
  }
  return static_cast<int>(it - header.begin());
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CSV file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV file: " + path);
  const std::vector<std::string> header = split_line(line);

  const int iw = find_column(header, schema.col_w);
  const int it = find_column(header, schema.col_time);
  const int ie = find_column(header, schema.col_event);

  std::vector<int> icov;
  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
      if (j != iw && j != it && j != ie) cov_names.push_back(header[static_cast<std::size_t>(j)]);
    }
  }
  if (cov_names.empty()) throw std::invalid_argument("no covariate columns resolvable");
  for (const std::string& name : cov_names) icov.push_back(find_column(header, name));

  std::vector<Subject> subjects;
  int row = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("data row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(header.size()));
    }
    Subject s;
    s.id = row - 1;
    s.w = parse_binary(cells[static_cast<std::size_t>(iw)], schema.col_w, row,
                       "treatment not binary");
    s.u = parse_number(cells[static_cast<std::size_t>(it)], schema.col_time, row);
    if (!(s.u > 0)) {
      throw std::invalid_argument("follow-up time must be > 0 at data row " +
                                  std::to_string(row));
    }
    s.delta = parse_binary(cells[static_cast<std::size_t>(ie)], schema.col_event, row,
                           "event indicator not binary");
    s.x.reserve(icov.size());
    for (std::size_t k = 0; k < icov.size(); ++k) {
      s.x.push_back(parse_number(cells[static_cast<std::size_t>(icov[k])], cov_names[k], row));
    }
    subjects.push_back(std::move(s));
  }
  return Dataset(std::move(subjects));
}

void save_csv(const Dataset& ds, const std::string& path, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open file for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);

  std::vector<std::string> cov_names = schema.covariates;
  if (cov_names.empty()) {
    for (int j = 0; j < ds.dim(); ++j) cov_names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<int>(cov_names.size()) != ds.dim()) {
    throw std::invalid_argument("save_csv: covariate name count != dataset dimension");
  }

  for (const std::string& name : cov_names) out << name << ',';
  out << schema.col_w << ',' << schema.col_time << ',' << schema.col_event << '\n';
  for (int i = 0; i < ds.size(); ++i) {
    const Subject& s = ds[i];
    for (double v : s.x) out << v << ',';
    out << s.w << ',' << s.u << ',' << s.delta << '\n';
  }
}

}  // namespace hazmatch
