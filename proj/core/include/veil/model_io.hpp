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

#ifndef VEIL_MODEL_IO_HPP_
#define VEIL_MODEL_IO_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "veil/matrix.hpp"
#include "veil/scrae.hpp"

namespace veil::io {

/// Model artifact container: magic "VEILMDL1", a u64 little-endian JSON
/// header length, the JSON header (kind, spec, training metadata, operator
/// list, tensor directory), then raw little-endian 64-bit parameter blobs in
/// header-declared order.
inline constexpr char kModelMagic[] = "VEILMDL1";

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct ModelFile {
  nlohmann::ordered_json header;
  std::vector<NamedTensor> tensors;

  const Matrix& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;
};

void write_model_file(const std::string& path, const nlohmann::ordered_json& header,
                      const std::vector<NamedTensor>& tensors);
ModelFile read_model_file(const std::string& path);

/// SCRAE artifact (kind = "scrae"): architecture, lambda record, seed,
/// operator whitelist, and every parameter tensor. `config_echo` is the
/// resolved run configuration embedded for reproducibility.
void save_model(const scrae::EncoderModel& model, const std::string& path,
                const std::string& config_echo = "{}");
scrae::EncoderModel load_model(const std::string& path);
/// `validate_spec = false` skips the architecture contract so structural
/// checks can examine artifacts that violate it (and report the violation).
scrae::EncoderModel model_from_file(const ModelFile& file, bool validate_spec = true);

}  // namespace veil::io

#endif  // VEIL_MODEL_IO_HPP_
