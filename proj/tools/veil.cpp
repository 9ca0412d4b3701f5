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

// veil: operator surface for training, encoding, diagnostics, attack runs,
// and the trust-boundary services.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "veil/attacks.hpp"
#include "veil/config.hpp"
#include "veil/csv.hpp"
#include "veil/diagnostics.hpp"
#include "veil/downstream.hpp"
#include "veil/latent_file.hpp"
#include "veil/log.hpp"
#include "veil/model_io.hpp"
#include "veil/scrae.hpp"
#include "veil/service.hpp"

namespace {

using namespace veil;

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string model_path;
  std::string latents_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

io::RunConfig load_config(const CommonArgs& args) {
  io::RunConfig cfg;
  if (!args.config_path.empty()) cfg = io::load_run_config(args.config_path);
  if (args.seed_given) {
    cfg.seed = args.seed;
    cfg.train.seed = args.seed;
    cfg.reconstruction.seed = args.seed;
    cfg.attribute.seed = args.seed;
    cfg.membership.seed = args.seed;
    cfg.source.seed = args.seed;
  }
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Seeded split into train/validation rows.
std::pair<scrae::Dataset, scrae::Dataset> split_dataset(const io::CsvDataset& csv,
                                                        double valid_fraction,
                                                        std::uint64_t seed) {
  if (!csv.has_targets) {
    throw std::runtime_error("training data needs a target column (set data.target_column)");
  }
  const std::size_t n = csv.x.rows();
  Rng rng(seed ^ 0x5eedULL);
  const auto perm = rng.permutation(n);
  std::size_t n_valid = static_cast<std::size_t>(static_cast<double>(n) * valid_fraction);
  n_valid = std::min(std::max<std::size_t>(n_valid, 2), n > 4 ? n - 4 : n / 2);

  const auto gather = [&](std::size_t begin, std::size_t end) {
    scrae::Dataset ds;
    ds.x = Matrix(end - begin, csv.x.cols());
    ds.targets = Matrix(end - begin, csv.targets.cols());
    for (std::size_t i = begin; i < end; ++i) {
      auto xr = csv.x.row(perm[i]);
      std::copy(xr.begin(), xr.end(), ds.x.row(i - begin).begin());
      auto tr = csv.targets.row(perm[i]);
      std::copy(tr.begin(), tr.end(), ds.targets.row(i - begin).begin());
    }
    return ds;
  };
  return {gather(n_valid, n), gather(0, n_valid)};
}

int cmd_train(const CommonArgs& args) {
  io::RunConfig cfg = load_config(args);
  io::CsvSchema schema;
  schema.target_column = cfg.target_column;
  schema.attribute_column = cfg.attribute_column;  // never a model feature
  const io::CsvDataset csv = io::ingest_csv(args.data_path, schema);

  if (cfg.spec.input_dim == 0) cfg.spec.input_dim = csv.x.cols();
  if (cfg.spec.head_dim == 0) {
    if (cfg.spec.head == scrae::HeadKind::classifier) {
      double max_label = 0;
      for (std::size_t i = 0; i < csv.targets.rows(); ++i) {
        max_label = std::max(max_label, csv.targets(i, 0));
      }
      cfg.spec.head_dim = static_cast<std::size_t>(max_label) + 1;
    } else {
      cfg.spec.head_dim = csv.targets.cols();
    }
  }

  const auto [train_set, valid_set] = split_dataset(csv, cfg.valid_fraction, cfg.seed);
  log::info("training on " + std::to_string(train_set.x.rows()) + " rows, validating on " +
            std::to_string(valid_set.x.rows()));

  const auto result = scrae::train(train_set, valid_set, cfg.spec, cfg.train);
  io::save_model(result.model, args.out_path, cfg.resolved_json());
  write_text(args.out_path + ".log.csv", result.log.to_csv());
  std::cout << "model written to " << args.out_path << "\n"
            << "training log written to " << args.out_path << ".log.csv\n";

  if (!cfg.downstream_kind.empty()) {
    const Matrix z = scrae::encode_batch(result.model, train_set.x);
    downstream::DownstreamModel ds_model;
    ds_model.type = cfg.downstream_kind;
    if (cfg.downstream_kind == "logistic") {
      downstream::LogisticRegressionConfig lc;
      lc.iterations = cfg.downstream_iterations;
      lc.l2 = cfg.downstream_l2;
      lc.learning_rate = cfg.downstream_learning_rate;
      lc.seed = cfg.seed;
      const auto labels = scrae::class_labels(train_set.targets, cfg.spec.head_dim);
      ds_model.logistic =
          downstream::LogisticRegression::fit(z, labels, cfg.spec.head_dim, lc);
    } else {
      ds_model.linear =
          downstream::LinearRegression::fit(z, train_set.targets, cfg.downstream_l2);
    }
    const std::string ds_path = args.out_path + ".downstream.vm";
    downstream::save_downstream(ds_model, ds_path, cfg.resolved_json());
    std::cout << "downstream model written to " << ds_path << "\n";
  }

  const auto& last = result.log.epochs.back();
  std::cout << "final validation loss " << last.total << ", head metric "
            << last.head_metric << "\n";
  return 0;
}

int cmd_encode(const CommonArgs& args) {
  const io::RunConfig cfg = load_config(args);
  const scrae::EncoderModel model = io::load_model(args.model_path);
  // The target column is never a feature; with_targets only controls whether
  // target values ride along in the latent file.
  io::CsvSchema schema;
  schema.target_column = cfg.target_column;
  schema.attribute_column = cfg.attribute_column;
  const io::CsvDataset csv = io::ingest_csv(args.data_path, schema);
  const Matrix z = scrae::encode_batch(model, csv.x);
  if (cfg.encode_with_targets) {
    if (!csv.has_targets) {
      throw std::runtime_error("encode.with_targets set but no target column found");
    }
    std::vector<double> targets(csv.targets.rows());
    for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = csv.targets(i, 0);
    io::write_latent_file(args.out_path, z, &targets);
  } else {
    io::write_latent_file(args.out_path, z);
  }
  std::cout << "encoded " << z.rows() << " rows to " << z.cols()
            << "-dim latents: " << args.out_path << "\n";
  return 0;
}

int cmd_diagnose(const CommonArgs& args) {
  const io::RunConfig cfg = load_config(args);
  const scrae::EncoderModel model = io::load_model(args.model_path);
  io::CsvSchema schema;
  schema.target_column = cfg.target_column;
  schema.attribute_column = cfg.attribute_column;
  const io::CsvDataset csv = io::ingest_csv(args.data_path, schema);
  if (!csv.has_targets) {
    throw std::runtime_error("diagnose needs a target column (set data.target_column)");
  }
  const auto fwd = scrae::forward_multilevel(
      model, csv.x, {.with_decoder = false, .with_head = true, .with_projection = false});

  diag::DiagnosticsReport report;
  report.epoch = model.meta.epochs;
  report.spearman = diag::spearman_latent_target(fwd.psi, csv.targets, 100000, cfg.seed);
  report.knn = diag::knn_r2(fwd.psi, csv.targets, 5, 5, cfg.seed);
  if (model.spec.head == scrae::HeadKind::regressor) {
    report.downstream_r2 = diag::r_squared(csv.targets, fwd.y_hat);
    report.calibration = diag::calibration_bins(csv.targets, fwd.y_hat, 10);
  }
  write_text(args.out_path + ".json", report.to_json(cfg.resolved_json()));
  write_text(args.out_path + ".csv", report.to_csv());
  std::cout << "diagnostics written to " << args.out_path << ".json and .csv\n";
  return 0;
}

int cmd_attack(const std::string& which, const CommonArgs& args) {
  const io::RunConfig cfg = load_config(args);

  io::CsvSchema feature_schema;
  feature_schema.target_column = cfg.target_column;
  feature_schema.attribute_column = cfg.attribute_column;

  if (which == "structural") {
    const auto artifact = io::read_model_file(args.model_path);
    const io::CsvDataset csv = io::ingest_csv(args.data_path, feature_schema);
    const auto report = attacks::structural_check(artifact, csv.x);
    const std::string json = report.to_json(cfg.resolved_json());
    if (!args.out_path.empty()) write_text(args.out_path, json);
    std::cout << json << "\n";
    return report.all_ok() ? 0 : 2;
  }

  attacks::AttackReport report;
  if (which == "reconstruct") {
    const io::LatentBatch latents = io::read_latent_file(args.latents_path);
    const io::CsvDataset csv = io::ingest_csv(args.data_path, feature_schema);
    report = attacks::reconstruction_attack(latents.latents, csv.x, csv.kinds,
                                            cfg.reconstruction);
  } else if (which == "attribute") {
    const io::LatentBatch latents = io::read_latent_file(args.latents_path);
    io::CsvSchema schema;
    schema.attribute_column = cfg.attribute_column;
    if (schema.attribute_column.empty()) {
      throw std::runtime_error("attribute attack needs data.attribute_column");
    }
    const io::CsvDataset csv = io::ingest_csv(args.data_path, schema);
    if (!csv.has_attribute) {
      throw std::runtime_error("attribute column missing from data");
    }
    const auto result =
        attacks::attribute_inference(latents.latents, csv.attribute, cfg.attribute);
    // Full provenance: primary plus both baselines in one document.
    nlohmann::ordered_json bundle;
    bundle["primary"] = nlohmann::ordered_json::parse(result.primary.to_json("{}"));
    bundle["magnitude"] = nlohmann::ordered_json::parse(result.magnitude.to_json("{}"));
    bundle["centroid"] = nlohmann::ordered_json::parse(result.centroid.to_json("{}"));
    bundle["config"] = nlohmann::ordered_json::parse(cfg.resolved_json());
    const std::string json = bundle.dump(2);
    if (!args.out_path.empty()) write_text(args.out_path, json);
    std::cout << json << "\n";
    return result.primary.exit_code();
  } else if (which == "membership") {
    const scrae::EncoderModel model = io::load_model(args.model_path);
    const io::CsvDataset csv = io::ingest_csv(args.data_path, feature_schema);
    if (!csv.has_targets) {
      throw std::runtime_error("membership attack needs data.target_column");
    }
    scrae::Dataset ds;
    ds.x = csv.x;
    ds.targets = csv.targets;
    const auto result = attacks::membership_inference(ds, model, cfg.membership);
    report = result.report;
  } else {
    throw std::runtime_error("unknown attack: " + which);
  }

  const std::string json = report.to_json(cfg.resolved_json());
  if (!args.out_path.empty()) write_text(args.out_path, json);
  std::cout << json << "\n";
  return report.exit_code();
}

std::atomic<bool> g_shutdown{false};
void handle_signal(int) { g_shutdown = true; }

int cmd_serve(const CommonArgs& args) {
  const io::RunConfig cfg = load_config(args);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  if (cfg.serve_role == "inference") {
    auto model = downstream::load_downstream(args.model_path);
    svc::InferenceService service(std::move(model), cfg.inference);
    service.start();
    std::cout << "inference service on port " << service.port() << "\n";
    while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
    return 0;
  }
  if (cfg.serve_role == "source") {
    auto encoder = io::load_model(args.model_path);
    svc::SourceService service(std::move(encoder), cfg.source);
    service.start();
    std::cout << "source service on port " << service.port() << "\n";
    while (!g_shutdown) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    service.stop();
    return 0;
  }
  throw std::runtime_error("serve.role must be 'source' or 'inference'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"veil: privacy-preserving latent encoding toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* cmd, bool need_data, bool need_model,
                              bool need_out) {
    cmd->add_option("--config", args.config_path, "run configuration JSON");
    auto* data = cmd->add_option("--data", args.data_path, "CSV data path");
    if (need_data) data->required();
    auto* model = cmd->add_option("--model", args.model_path, "model artifact path");
    if (need_model) model->required();
    auto* out = cmd->add_option("--out", args.out_path, "output path");
    if (need_out) out->required();
    cmd->add_option("--seed", args.seed, "seed override")
        ->each([&](const std::string&) { args.seed_given = true; });
  };

  auto* train = app.add_subcommand("train", "train a SCRAE encoder");
  add_common(train, true, false, true);

  auto* encode = app.add_subcommand("encode", "export latents for a dataset");
  add_common(encode, true, true, true);

  auto* diagnose = app.add_subcommand("diagnose", "latent-quality diagnostics");
  add_common(diagnose, true, true, true);

  auto* attack = app.add_subcommand("attack", "run a privacy attack simulation");
  std::string attack_kind;
  attack->add_option("kind", attack_kind, "reconstruct | attribute | membership | structural")
      ->required()
      ->check(CLI::IsMember({"reconstruct", "attribute", "membership", "structural"}));
  add_common(attack, true, false, false);
  attack->add_option("--latents", args.latents_path, "latent batch file (ICAL)");

  auto* serve = app.add_subcommand("serve", "run a trust-boundary service");
  add_common(serve, false, true, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(train)) return cmd_train(args);
    if (app.got_subcommand(encode)) return cmd_encode(args);
    if (app.got_subcommand(diagnose)) return cmd_diagnose(args);
    if (app.got_subcommand(attack)) return cmd_attack(attack_kind, args);
    if (app.got_subcommand(serve)) return cmd_serve(args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
