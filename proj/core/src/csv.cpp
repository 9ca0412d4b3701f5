//
// Copyright 2026 The VEIL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "veil/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace veil::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string cell = trim(raw);
  if (cell.empty()) {
    throw std::runtime_error("csv: missing value at row " + std::to_string(row) +
                             ", column " + std::to_string(col) + " (no imputation)");
  }
  double value = 0.0;
  const auto result = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (result.ec != std::errc() || result.ptr != cell.data() + cell.size()) {
    throw std::runtime_error("csv: unparseable cell '" + cell + "' at row " +
                             std::to_string(row) + ", column " + std::to_string(col));
  }
  return value;
}

}  // namespace

CsvDataset ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv: empty file " + path);
  const auto header = split_line(line);

  std::ptrdiff_t target_idx = -1, attribute_idx = -1;
  std::vector<std::size_t> feature_cols;
  CsvDataset ds;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (!schema.target_column.empty() && name == schema.target_column) {
      target_idx = static_cast<std::ptrdiff_t>(c);
    } else if (!schema.attribute_column.empty() && name == schema.attribute_column) {
      attribute_idx = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
      ds.feature_names.push_back(name);
    }
  }
  if (!schema.target_column.empty() && target_idx < 0) {
    throw std::runtime_error("csv: target column '" + schema.target_column +
                             "' not in header");
  }
  if (!schema.attribute_column.empty() && attribute_idx < 0) {
    throw std::runtime_error("csv: attribute column '" + schema.attribute_column +
                             "' not in header");
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::vector<std::size_t> attribute;
  std::size_t row_number = 1;
  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("csv: row " + std::to_string(row_number) + " has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(header.size()));
    }
    std::vector<double> row;
    row.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) row.push_back(parse_cell(cells[c], row_number, c));
    rows.push_back(std::move(row));
    if (target_idx >= 0) {
      targets.push_back(parse_cell(cells[static_cast<std::size_t>(target_idx)],
                                   row_number, static_cast<std::size_t>(target_idx)));
    }
    if (attribute_idx >= 0) {
      const double v = parse_cell(cells[static_cast<std::size_t>(attribute_idx)],
                                  row_number, static_cast<std::size_t>(attribute_idx));
      const double rounded = std::nearbyint(v);
      if (std::abs(v - rounded) > 1e-9 || rounded < 0) {
        throw std::runtime_error("csv: attribute at row " + std::to_string(row_number) +
                                 " must be a small non-negative integer");
      }
      attribute.push_back(static_cast<std::size_t>(rounded));
    }
  }
  if (rows.empty()) throw std::runtime_error("csv: no data rows in " + path);

  ds.x = Matrix(rows.size(), feature_cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto dst = ds.x.row(i);
    std::copy(rows[i].begin(), rows[i].end(), dst.begin());
  }
  ds.kinds = attacks::infer_feature_kinds(ds.x);
  if (target_idx >= 0) {
    ds.targets = Matrix(targets.size(), 1);
    for (std::size_t i = 0; i < targets.size(); ++i) ds.targets(i, 0) = targets[i];
    ds.has_targets = true;
  }
  if (attribute_idx >= 0) {
    ds.attribute = std::move(attribute);
    ds.has_attribute = true;
  }
  return ds;
}

void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& values) {
  if (columns.size() != values.cols()) {
    throw std::invalid_argument("write_csv: column name count mismatch");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("csv: cannot open " + path + " for writing");
  out.precision(17);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << columns[c] << (c + 1 == columns.size() ? '\n' : ',');
  }
  for (std::size_t i = 0; i < values.rows(); ++i) {
    auto row = values.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << (c + 1 == row.size() ? '\n' : ',');
    }
  }
}

}  // namespace veil::io
