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

#ifndef VEIL_LATENT_FILE_HPP_
#define VEIL_LATENT_FILE_HPP_

#include <string>
#include <vector>

#include "veil/matrix.hpp"

namespace veil::io {

/// Latent batch file: magic "ICAL", u32 version (1), u32 n_rows, u32
/// latent_dim, u32 flags (bit 0: targets present), then n x E little-endian
/// 32-bit floats row-major, then optionally n little-endian 64-bit targets.
/// File size is exactly 20 + 4nE (+ 8n with targets).
inline constexpr char kLatentMagic[4] = {'I', 'C', 'A', 'L'};
inline constexpr std::uint32_t kLatentVersion = 1;

struct LatentBatch {
  Matrix latents;  // values exactly representable in binary32
  std::vector<double> targets;
  bool has_targets = false;
};

/// Latent values are quantized to 32-bit on write.
void write_latent_file(const std::string& path, const Matrix& latents,
                       const std::vector<double>* targets = nullptr);
LatentBatch read_latent_file(const std::string& path);

}  // namespace veil::io

#endif  // VEIL_LATENT_FILE_HPP_
