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

#include "veil/latent_file.hpp"

#include <fstream>
#include <stdexcept>

#include "veil/binary.hpp"

namespace veil::io {

void write_latent_file(const std::string& path, const Matrix& latents,
                       const std::vector<double>* targets) {
  if (targets && targets->size() != latents.rows()) {
    throw std::invalid_argument("latent file: target count != row count");
  }
  std::vector<std::uint8_t> buf;
  buf.reserve(20 + 4 * latents.size() + (targets ? 8 * targets->size() : 0));
  bin::put_bytes(buf, kLatentMagic, 4);
  bin::put_u32_le(buf, kLatentVersion);
  bin::put_u32_le(buf, static_cast<std::uint32_t>(latents.rows()));
  bin::put_u32_le(buf, static_cast<std::uint32_t>(latents.cols()));
  bin::put_u32_le(buf, targets ? 1u : 0u);
  for (double v : latents.data()) bin::put_f32_le(buf, static_cast<float>(v));
  if (targets) {
    for (double t : *targets) bin::put_f64_le(buf, t);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("latent file: cannot open " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("latent file: short write to " + path);
}

LatentBatch read_latent_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("latent file: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  bin::ByteReader reader(buf);
  if (reader.bytes(4) != std::string(kLatentMagic, 4)) {
    throw std::runtime_error("latent file: bad magic in " + path);
  }
  const std::uint32_t version = reader.u32_le();
  if (version != kLatentVersion) {
    throw std::runtime_error("latent file: unsupported version " +
                             std::to_string(version));
  }
  const std::uint32_t rows = reader.u32_le();
  const std::uint32_t cols = reader.u32_le();
  const std::uint32_t flags = reader.u32_le();
  const bool has_targets = (flags & 1u) != 0;
  const std::size_t expected =
      20 + 4ull * rows * cols + (has_targets ? 8ull * rows : 0);
  if (buf.size() != expected) {
    throw std::runtime_error("latent file: size " + std::to_string(buf.size()) +
                             " != expected " + std::to_string(expected));
  }
  LatentBatch batch;
  batch.latents = Matrix(rows, cols);
  for (double& v : batch.latents.data()) v = static_cast<double>(reader.f32_le());
  if (has_targets) {
    batch.targets.resize(rows);
    for (double& t : batch.targets) t = reader.f64_le();
    batch.has_targets = true;
  }
  return batch;
}

}  // namespace veil::io
