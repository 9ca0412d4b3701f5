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

#include "veil/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace veil::io {

namespace {

using nlohmann::ordered_json;

/// Collects violations so a bad config reports everything at once.
struct ConfigErrors {
  std::vector<std::string> messages;

  void add(const std::string& m) { messages.push_back(m); }
  void raise_if_any() const {
    if (messages.empty()) return;
    std::string full = "invalid run config:";
    for (const auto& m : messages) full += "\n  - " + m;
    throw std::invalid_argument(full);
  }
};

void check_keys(const ordered_json& obj, const std::string& path,
                const std::set<std::string>& allowed, ConfigErrors& errors) {
  if (!obj.is_object()) {
    errors.add(path + " must be a JSON object");
    return;
  }
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      errors.add("unknown key '" + path + "." + key + "'");
    }
  }
}

template <typename T>
void read_field(const ordered_json& obj, const std::string& path, const char* key,
                T* out, ConfigErrors& errors) {
  if (!obj.contains(key)) return;
  try {
    *out = obj.at(key).get<T>();
  } catch (const std::exception&) {
    errors.add("bad value for '" + path + "." + key + "'");
  }
}

void read_enum(const ordered_json& obj, const std::string& path, const char* key,
               const std::function<void(const std::string&)>& apply,
               ConfigErrors& errors) {
  if (!obj.contains(key)) return;
  try {
    apply(obj.at(key).get<std::string>());
  } catch (const std::exception& e) {
    errors.add("bad value for '" + path + "." + key + "': " + e.what());
  }
}

void parse_weights(const ordered_json& j, losses::LossWeights* w, ConfigErrors& errors) {
  check_keys(j, "train.weights",
             {"lambda_recon", "lambda_repr", "lambda_pred", "lambda_reg", "sigma", "tau",
              "delta", "k", "sym_mode"},
             errors);
  read_field(j, "train.weights", "lambda_recon", &w->lambda_recon, errors);
  read_field(j, "train.weights", "lambda_repr", &w->lambda_repr, errors);
  read_field(j, "train.weights", "lambda_pred", &w->lambda_pred, errors);
  read_field(j, "train.weights", "lambda_reg", &w->lambda_reg, errors);
  read_field(j, "train.weights", "sigma", &w->sigma, errors);
  read_field(j, "train.weights", "tau", &w->tau, errors);
  read_field(j, "train.weights", "delta", &w->delta, errors);
  read_field(j, "train.weights", "k", &w->k, errors);
  read_enum(j, "train.weights", "sym_mode",
            [&](const std::string& v) { w->sym_mode = losses::sym_mode_from_name(v); },
            errors);
}

void parse_permutation(const ordered_json& j, const std::string& path,
                       attacks::PermutationTest* t, ConfigErrors& errors) {
  check_keys(j, path,
             {"initial_permutations", "max_permutations", "gray_zone_low",
              "gray_zone_high", "escalate"},
             errors);
  read_field(j, path, "initial_permutations", &t->initial_permutations, errors);
  read_field(j, path, "max_permutations", &t->max_permutations, errors);
  read_field(j, path, "gray_zone_low", &t->gray_zone_low, errors);
  read_field(j, path, "gray_zone_high", &t->gray_zone_high, errors);
  read_field(j, path, "escalate", &t->escalate, errors);
}

ordered_json weights_json(const losses::LossWeights& w) {
  return {{"lambda_recon", w.lambda_recon}, {"lambda_repr", w.lambda_repr},
          {"lambda_pred", w.lambda_pred},   {"lambda_reg", w.lambda_reg},
          {"sigma", w.sigma},               {"tau", w.tau},
          {"delta", w.delta},               {"k", w.k},
          {"sym_mode", losses::sym_mode_name(w.sym_mode)}};
}

ordered_json permutation_json(const attacks::PermutationTest& t) {
  return {{"initial_permutations", t.initial_permutations},
          {"max_permutations", t.max_permutations},
          {"gray_zone_low", t.gray_zone_low},
          {"gray_zone_high", t.gray_zone_high},
          {"escalate", t.escalate}};
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json root;
  try {
    root = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }

  ConfigErrors errors;
  RunConfig cfg;
  check_keys(root, "$",
             {"seed", "data", "spec", "train", "encode", "downstream", "attack",
              "serve"},
             errors);
  read_field(root, "$", "seed", &cfg.seed, errors);
  cfg.train.seed = cfg.seed;
  cfg.reconstruction.seed = cfg.seed;
  cfg.attribute.seed = cfg.seed;
  cfg.membership.seed = cfg.seed;

  if (root.contains("data")) {
    const auto& j = root["data"];
    check_keys(j, "data", {"target_column", "attribute_column", "valid_fraction"},
               errors);
    read_field(j, "data", "target_column", &cfg.target_column, errors);
    read_field(j, "data", "attribute_column", &cfg.attribute_column, errors);
    read_field(j, "data", "valid_fraction", &cfg.valid_fraction, errors);
    if (cfg.valid_fraction <= 0 || cfg.valid_fraction >= 1) {
      errors.add("data.valid_fraction must be in (0, 1)");
    }
  }

  if (root.contains("spec")) {
    const auto& j = root["spec"];
    check_keys(j, "spec",
               {"input_dim", "layer_widths", "activation", "head", "head_dim",
                "decoder_widths"},
               errors);
    read_field(j, "spec", "input_dim", &cfg.spec.input_dim, errors);
    read_field(j, "spec", "layer_widths", &cfg.spec.layer_widths, errors);
    read_enum(j, "spec", "activation",
              [&](const std::string& v) { cfg.spec.activation = nn::act_from_name(v); },
              errors);
    read_enum(j, "spec", "head",
              [&](const std::string& v) { cfg.spec.head = scrae::head_kind_from_name(v); },
              errors);
    read_field(j, "spec", "head_dim", &cfg.spec.head_dim, errors);
    read_field(j, "spec", "decoder_widths", &cfg.spec.decoder_widths, errors);
  }

  if (root.contains("train")) {
    const auto& j = root["train"];
    check_keys(j, "train",
               {"weights", "repr_loss", "pred_loss", "batch_size", "epochs",
                "learning_rate", "optimizer", "seed"},
               errors);
    if (j.contains("weights")) parse_weights(j["weights"], &cfg.train.weights, errors);
    read_enum(j, "train", "repr_loss",
              [&](const std::string& v) {
                cfg.train.repr_loss = scrae::repr_loss_from_name(v);
              },
              errors);
    read_enum(j, "train", "pred_loss",
              [&](const std::string& v) {
                cfg.train.pred_loss = scrae::pred_loss_from_name(v);
              },
              errors);
    read_field(j, "train", "batch_size", &cfg.train.batch_size, errors);
    read_field(j, "train", "epochs", &cfg.train.epochs, errors);
    read_field(j, "train", "learning_rate", &cfg.train.learning_rate, errors);
    read_enum(j, "train", "optimizer",
              [&](const std::string& v) { cfg.train.optimizer = nn::opt_from_name(v); },
              errors);
    read_field(j, "train", "seed", &cfg.train.seed, errors);
  }

  if (root.contains("encode")) {
    const auto& j = root["encode"];
    check_keys(j, "encode", {"with_targets"}, errors);
    read_field(j, "encode", "with_targets", &cfg.encode_with_targets, errors);
  }

  if (root.contains("downstream")) {
    const auto& j = root["downstream"];
    check_keys(j, "downstream", {"kind", "l2", "iterations", "learning_rate"}, errors);
    read_field(j, "downstream", "kind", &cfg.downstream_kind, errors);
    read_field(j, "downstream", "l2", &cfg.downstream_l2, errors);
    read_field(j, "downstream", "iterations", &cfg.downstream_iterations, errors);
    read_field(j, "downstream", "learning_rate", &cfg.downstream_learning_rate, errors);
    if (!cfg.downstream_kind.empty() && cfg.downstream_kind != "logistic" &&
        cfg.downstream_kind != "linear") {
      errors.add("downstream.kind must be 'logistic' or 'linear'");
    }
  }

  if (root.contains("attack")) {
    const auto& j = root["attack"];
    check_keys(j, "attack", {"reconstruction", "attribute", "membership"}, errors);
    if (j.contains("reconstruction")) {
      const auto& r = j["reconstruction"];
      check_keys(r, "attack.reconstruction",
                 {"train_fraction", "permutations", "escalate", "practical_threshold",
                  "decoder_widths", "decoder_epochs", "decoder_patience",
                  "decoder_learning_rate", "decoder_batch", "seed"},
                 errors);
      read_field(r, "attack.reconstruction", "train_fraction",
                 &cfg.reconstruction.train_fraction, errors);
      read_field(r, "attack.reconstruction", "permutations",
                 &cfg.reconstruction.permutations, errors);
      read_field(r, "attack.reconstruction", "escalate", &cfg.reconstruction.escalate,
                 errors);
      read_field(r, "attack.reconstruction", "practical_threshold",
                 &cfg.reconstruction.practical_threshold, errors);
      read_field(r, "attack.reconstruction", "decoder_widths",
                 &cfg.reconstruction.decoder_widths, errors);
      read_field(r, "attack.reconstruction", "decoder_epochs",
                 &cfg.reconstruction.decoder_epochs, errors);
      read_field(r, "attack.reconstruction", "decoder_patience",
                 &cfg.reconstruction.decoder_patience, errors);
      read_field(r, "attack.reconstruction", "decoder_learning_rate",
                 &cfg.reconstruction.decoder_learning_rate, errors);
      read_field(r, "attack.reconstruction", "decoder_batch",
                 &cfg.reconstruction.decoder_batch, errors);
      read_field(r, "attack.reconstruction", "seed", &cfg.reconstruction.seed, errors);
    }
    if (j.contains("attribute")) {
      const auto& a = j["attribute"];
      check_keys(a, "attack.attribute",
                 {"folds", "permutation", "practical_threshold", "iterations", "l2",
                  "seed"},
                 errors);
      read_field(a, "attack.attribute", "folds", &cfg.attribute.folds, errors);
      if (a.contains("permutation")) {
        parse_permutation(a["permutation"], "attack.attribute.permutation",
                          &cfg.attribute.permutation, errors);
      }
      read_field(a, "attack.attribute", "practical_threshold",
                 &cfg.attribute.practical_threshold, errors);
      read_field(a, "attack.attribute", "iterations",
                 &cfg.attribute.classifier.iterations, errors);
      read_field(a, "attack.attribute", "l2", &cfg.attribute.classifier.l2, errors);
      read_field(a, "attack.attribute", "seed", &cfg.attribute.seed, errors);
    }
    if (j.contains("membership")) {
      const auto& m = j["membership"];
      check_keys(m, "attack.membership",
                 {"quantile_bins", "label_informed", "practical_threshold",
                  "permutation", "downstream_l2", "downstream_iterations",
                  "downstream_member_limit", "seed"},
                 errors);
      read_field(m, "attack.membership", "quantile_bins", &cfg.membership.quantile_bins,
                 errors);
      read_field(m, "attack.membership", "label_informed",
                 &cfg.membership.label_informed, errors);
      read_field(m, "attack.membership", "practical_threshold",
                 &cfg.membership.practical_threshold, errors);
      if (m.contains("permutation")) {
        parse_permutation(m["permutation"], "attack.membership.permutation",
                          &cfg.membership.permutation, errors);
      }
      read_field(m, "attack.membership", "downstream_l2",
                 &cfg.membership.downstream_model.l2, errors);
      read_field(m, "attack.membership", "downstream_iterations",
                 &cfg.membership.downstream_model.iterations, errors);
      read_field(m, "attack.membership", "downstream_member_limit",
                 &cfg.membership.downstream_member_limit, errors);
      read_field(m, "attack.membership", "seed", &cfg.membership.seed, errors);
    }
  }

  if (root.contains("serve")) {
    const auto& j = root["serve"];
    check_keys(j, "serve",
               {"role", "host", "port", "inference_host", "inference_port",
                "audit_path", "latent_store_path"},
               errors);
    read_field(j, "serve", "role", &cfg.serve_role, errors);
    if (!cfg.serve_role.empty() && cfg.serve_role != "source" &&
        cfg.serve_role != "inference") {
      errors.add("serve.role must be 'source' or 'inference'");
    }
    read_field(j, "serve", "host", &cfg.source.host, errors);
    cfg.inference.host = cfg.source.host;
    std::uint16_t port = 0;
    read_field(j, "serve", "port", &port, errors);
    cfg.source.port = port;
    cfg.inference.port = port;
    read_field(j, "serve", "inference_host", &cfg.source.inference_host, errors);
    read_field(j, "serve", "inference_port", &cfg.source.inference_port, errors);
    read_field(j, "serve", "audit_path", &cfg.source.audit_path, errors);
    read_field(j, "serve", "latent_store_path", &cfg.source.latent_store_path, errors);
    cfg.source.seed = cfg.seed;
  }

  errors.raise_if_any();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string RunConfig::resolved_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["data"] = {{"target_column", target_column},
               {"attribute_column", attribute_column},
               {"valid_fraction", valid_fraction}};
  j["spec"] = {{"input_dim", spec.input_dim},
               {"layer_widths", spec.layer_widths},
               {"activation", nn::act_name(spec.activation)},
               {"head", scrae::head_kind_name(spec.head)},
               {"head_dim", spec.head_dim},
               {"decoder_widths", spec.decoder_widths}};
  j["train"] = {{"weights", weights_json(train.weights)},
                {"repr_loss", scrae::repr_loss_name(train.repr_loss)},
                {"pred_loss", scrae::pred_loss_name(train.pred_loss)},
                {"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"learning_rate", train.learning_rate},
                {"optimizer", nn::opt_name(train.optimizer)},
                {"seed", train.seed}};
  j["encode"] = {{"with_targets", encode_with_targets}};
  j["downstream"] = {{"kind", downstream_kind},
                     {"l2", downstream_l2},
                     {"iterations", downstream_iterations},
                     {"learning_rate", downstream_learning_rate}};
  j["attack"] = {
      {"reconstruction",
       {{"train_fraction", reconstruction.train_fraction},
        {"permutations", reconstruction.permutations},
        {"escalate", reconstruction.escalate},
        {"practical_threshold", reconstruction.practical_threshold},
        {"decoder_widths", reconstruction.decoder_widths},
        {"decoder_epochs", reconstruction.decoder_epochs},
        {"decoder_patience", reconstruction.decoder_patience},
        {"decoder_learning_rate", reconstruction.decoder_learning_rate},
        {"decoder_batch", reconstruction.decoder_batch},
        {"seed", reconstruction.seed}}},
      {"attribute",
       {{"folds", attribute.folds},
        {"permutation", permutation_json(attribute.permutation)},
        {"practical_threshold", attribute.practical_threshold},
        {"iterations", attribute.classifier.iterations},
        {"l2", attribute.classifier.l2},
        {"seed", attribute.seed}}},
      {"membership",
       {{"quantile_bins", membership.quantile_bins},
        {"label_informed", membership.label_informed},
        {"practical_threshold", membership.practical_threshold},
        {"permutation", permutation_json(membership.permutation)},
        {"downstream_l2", membership.downstream_model.l2},
        {"downstream_iterations", membership.downstream_model.iterations},
        {"downstream_member_limit", membership.downstream_member_limit},
        {"seed", membership.seed}}}};
  j["serve"] = {{"role", serve_role},
                {"host", source.host},
                {"port", source.port},
                {"inference_host", source.inference_host},
                {"inference_port", source.inference_port},
                {"audit_path", source.audit_path},
                {"latent_store_path", source.latent_store_path}};
  return j.dump(2);
}

}  // namespace veil::io
