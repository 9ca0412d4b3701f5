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

// End-to-end drives of the veil binary.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "veil/csv.hpp"
#include "veil/latent_file.hpp"
#include "veil/model_io.hpp"
#include "veil/rng.hpp"

using namespace veil;

namespace {

const std::filesystem::path kWork = std::filesystem::temp_directory_path() / "veil_cli";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VEIL_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

// Regression fixture in the regime the toolkit targets: the task factor u
// carries a small share of each column's variance, nuisance factors carry the
// bulk, so a task-aligned latent does not support reconstruction.
void write_fixture_csv(const std::filesystem::path& path, std::size_t n,
                       std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = 8;
  std::vector<std::string> columns;
  for (std::size_t j = 0; j < d; ++j) columns.push_back("f" + std::to_string(j));
  columns.push_back("y");
  columns.push_back("flag");
  Matrix table(n, d + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal();  // task factor, low amplitude in x
    const double w1 = rng.normal(), w2 = rng.normal(), w3 = rng.normal();
    for (std::size_t j = 0; j < d; ++j) {
      const double nuisance = (j % 3 == 0 ? 1.1 : 0.9) * w1 +
                              (j % 3 == 1 ? 1.0 : -0.5) * w2 +
                              (j % 2 == 0 ? 0.8 : -0.8) * w3;
      table(i, j) = 0.12 * u * (j % 2 ? 1.0 : -1.0) + nuisance + 0.3 * rng.normal();
    }
    table(i, d) = std::sin(1.5 * u) + 0.02 * rng.normal();
    table(i, d + 1) = table(i, d) > 0 ? 1.0 : 0.0;
  }
  io::write_csv(path.string(), columns, table);
}

void write_config(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  out << R"({
  "seed": 11,
  "data": {"target_column": "y", "attribute_column": "flag", "valid_fraction": 0.2},
  "spec": {"layer_widths": [6, 3], "activation": "tanh", "head": "regressor", "head_dim": 1},
  "train": {"weights": {"lambda_recon": 0.0, "lambda_repr": 1.0, "lambda_pred": 1.0,
                        "lambda_reg": 0.1, "sigma": 1.0, "tau": 0.5, "delta": 1.0,
                        "k": 3, "sym_mode": "union"},
            "repr_loss": "laplacian_knn", "pred_loss": "huber",
            "batch_size": 32, "epochs": 12, "learning_rate": 0.005,
            "optimizer": "adaptive_moments"},
  "encode": {"with_targets": true},
  "attack": {"reconstruction": {"permutations": 20, "decoder_epochs": 40,
                                "decoder_patience": 8},
             "attribute": {"folds": 5, "iterations": 80,
                           "permutation": {"initial_permutations": 25, "escalate": false}}}
})";
}

struct Fixture {
  Fixture() {
    std::filesystem::create_directories(kWork);
    write_fixture_csv(kWork / "data.csv", 400, 1234);
    write_config(kWork / "config.json");
  }
};

}  // namespace

TEST_CASE("cli pipeline: train, encode, diagnose, attack") {
  Fixture fixture;
  const std::string cfg = " --config " + (kWork / "config.json").string();
  const std::string data = " --data " + (kWork / "data.csv").string();
  const std::string model_path = (kWork / "model.vm").string();

  SUBCASE("bad config fails with exit 1") {
    std::ofstream bad(kWork / "bad.json");
    bad << R"({"sede": 1})";
    bad.close();
    CHECK(run_cli("train --config " + (kWork / "bad.json").string() + data + " --out " +
                  model_path) == 1);
  }

  REQUIRE(run_cli("train" + cfg + data + " --out " + model_path) == 0);
  CHECK(std::filesystem::exists(model_path));
  CHECK(std::filesystem::exists(model_path + ".log.csv"));

  // Reproducibility: the same config and data give bit-identical artifacts.
  const std::string model2_path = (kWork / "model2.vm").string();
  REQUIRE(run_cli("train" + cfg + data + " --out " + model2_path) == 0);
  CHECK(file_bytes(model_path) == file_bytes(model2_path));

  // Encode: file size follows the ICAL format law.
  const std::string latents_path = (kWork / "latents.ical").string();
  REQUIRE(run_cli("encode" + cfg + data + " --model " + model_path + " --out " +
                  latents_path) == 0);
  const auto batch = io::read_latent_file(latents_path);
  CHECK(batch.latents.cols() == 3);
  CHECK(batch.has_targets);
  CHECK(std::filesystem::file_size(latents_path) ==
        20 + 4 * batch.latents.rows() * 3 + 8 * batch.latents.rows());

  // Diagnose emits machine-readable reports.
  REQUIRE(run_cli("diagnose" + cfg + data + " --model " + model_path + " --out " +
                  (kWork / "diag").string()) == 0);
  CHECK(std::filesystem::exists(kWork / "diag.json"));
  CHECK(std::filesystem::exists(kWork / "diag.csv"));

  // Structural gate passes on a freshly trained model.
  CHECK(run_cli("attack structural" + cfg + data + " --model " + model_path +
                " --out " + (kWork / "structural.json").string()) == 0);

  // Reconstruction on a properly trained model: no leak (exit 0).
  CHECK(run_cli("attack reconstruct" + cfg + data + " --latents " + latents_path +
                " --out " + (kWork / "recon.json").string()) == 0);

  // Identity "encoder" positive control: latents = raw features -> leak (2).
  {
    io::CsvSchema schema;
    schema.target_column = "y";
    schema.attribute_column = "flag";
    const auto csv = io::ingest_csv((kWork / "data.csv").string(), schema);
    io::write_latent_file((kWork / "identity.ical").string(), csv.x);
    CHECK(run_cli("attack reconstruct" + cfg + data + " --latents " +
                  (kWork / "identity.ical").string() + " --out " +
                  (kWork / "recon_id.json").string()) == 2);
  }

  // Attribute attack on a target-derived flag: leak, exit 2.
  CHECK(run_cli("attack attribute" + cfg + data + " --latents " + latents_path +
                " --out " + (kWork / "attribute.json").string()) == 2);

  std::filesystem::remove_all(kWork);
}
