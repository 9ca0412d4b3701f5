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

#ifndef VEIL_CSV_HPP_
#define VEIL_CSV_HPP_

#include <string>
#include <vector>

#include "veil/attacks.hpp"
#include "veil/matrix.hpp"

namespace veil::io {

struct CsvSchema {
  std::string target_column;     // empty = unlabeled data
  std::string attribute_column;  // optional sensitive attribute
};

struct CsvDataset {
  Matrix x;
  std::vector<std::string> feature_names;
  std::vector<attacks::FeatureKind> kinds;  // numeric/binary per feature column
  Matrix targets;                           // N x 1 when a target column is named
  bool has_targets = false;
  std::vector<std::size_t> attribute;       // when an attribute column is named
  bool has_attribute = false;
};

/// Strict numeric CSV reader: header row required, every cell must parse as a
/// decimal, missing values are an error (no imputation). Row order is the
/// file order. A column whose value set is within {0, 1} is binary.
CsvDataset ingest_csv(const std::string& path, const CsvSchema& schema);

/// Writer used by fixtures and exports; plain decimal formatting.
void write_csv(const std::string& path, const std::vector<std::string>& columns,
               const Matrix& values);

}  // namespace veil::io

#endif  // VEIL_CSV_HPP_
