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

#ifndef VEIL_CONFIG_HPP_
#define VEIL_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "veil/attacks.hpp"
#include "veil/scrae.hpp"
#include "veil/service.hpp"

namespace veil::io {

/// Everything a run needs, parsed strictly: unknown keys are fatal and every
/// violation is reported at once. The resolved form is embedded in run
/// outputs so artifacts are reproducible from their own provenance.
struct RunConfig {
  std::uint64_t seed = 0;

  // data
  std::string target_column;
  std::string attribute_column;
  double valid_fraction = 0.2;

  // architecture + training
  scrae::EncoderSpec spec;
  scrae::TrainConfig train;

  // encode
  bool encode_with_targets = false;

  // optional downstream model fitted on the encoded training set
  std::string downstream_kind;  // "", "logistic", "linear"
  double downstream_l2 = 1e-3;
  std::size_t downstream_iterations = 300;
  double downstream_learning_rate = 0.05;

  // attacks
  attacks::ReconstructionConfig reconstruction;
  attacks::AttributeConfig attribute;
  attacks::MembershipConfig membership;

  // serve
  std::string serve_role;  // "source" | "inference"
  svc::SourceConfig source;
  svc::InferenceConfig inference;

  /// Canonical JSON of the resolved configuration.
  std::string resolved_json() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace veil::io

#endif  // VEIL_CONFIG_HPP_
