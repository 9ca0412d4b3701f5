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

#include "veil/model_io.hpp"

#include <fstream>

#include "veil/binary.hpp"

namespace veil::io {

const Matrix& ModelFile::tensor(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return t.value;
  }
  throw std::runtime_error("model file: missing tensor " + name);
}

bool ModelFile::has_tensor(const std::string& name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return true;
  }
  return false;
}

void write_model_file(const std::string& path, const nlohmann::ordered_json& header,
                      const std::vector<NamedTensor>& tensors) {
  nlohmann::ordered_json full = header;
  nlohmann::ordered_json dir = nlohmann::ordered_json::array();
  for (const NamedTensor& t : tensors) {
    dir.push_back({{"name", t.name}, {"rows", t.value.rows()}, {"cols", t.value.cols()}});
  }
  full["tensors"] = dir;
  const std::string header_json = full.dump();

  std::vector<std::uint8_t> buf;
  bin::put_bytes(buf, kModelMagic, 8);
  bin::put_u64_le(buf, header_json.size());
  bin::put_bytes(buf, header_json.data(), header_json.size());
  for (const NamedTensor& t : tensors) {
    for (double v : t.value.data()) bin::put_f64_le(buf, v);
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("short write to model file: " + path);
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  bin::ByteReader reader(buf);
  if (reader.bytes(8) != std::string(kModelMagic, 8)) {
    throw std::runtime_error("not a model artifact (bad magic): " + path);
  }
  const std::uint64_t header_len = reader.u64_le();
  ModelFile file;
  file.header = nlohmann::ordered_json::parse(reader.bytes(header_len));

  for (const auto& entry : file.header.at("tensors")) {
    NamedTensor t;
    t.name = entry.at("name").get<std::string>();
    const auto rows = entry.at("rows").get<std::size_t>();
    const auto cols = entry.at("cols").get<std::size_t>();
    t.value = Matrix(rows, cols);
    for (double& v : t.value.data()) v = reader.f64_le();
    file.tensors.push_back(std::move(t));
  }
  if (reader.remaining() != 0) {
    throw std::runtime_error("model artifact has trailing bytes: " + path);
  }
  return file;
}

namespace {

nlohmann::ordered_json weights_to_json(const losses::LossWeights& w) {
  return {{"lambda_recon", w.lambda_recon},
          {"lambda_repr", w.lambda_repr},
          {"lambda_pred", w.lambda_pred},
          {"lambda_reg", w.lambda_reg},
          {"sigma", w.sigma},
          {"tau", w.tau},
          {"delta", w.delta},
          {"k", w.k},
          {"sym_mode", losses::sym_mode_name(w.sym_mode)}};
}

losses::LossWeights weights_from_json(const nlohmann::ordered_json& j) {
  losses::LossWeights w;
  w.lambda_recon = j.at("lambda_recon").get<double>();
  w.lambda_repr = j.at("lambda_repr").get<double>();
  w.lambda_pred = j.at("lambda_pred").get<double>();
  w.lambda_reg = j.at("lambda_reg").get<double>();
  w.sigma = j.at("sigma").get<double>();
  w.tau = j.at("tau").get<double>();
  w.delta = j.at("delta").get<double>();
  w.k = j.at("k").get<std::size_t>();
  w.sym_mode = losses::sym_mode_from_name(j.at("sym_mode").get<std::string>());
  return w;
}

}  // namespace

void save_model(const scrae::EncoderModel& model, const std::string& path,
                const std::string& config_echo) {
  nlohmann::ordered_json header;
  header["kind"] = "scrae";
  header["spec"] = {{"input_dim", model.spec.input_dim},
                    {"layer_widths", model.spec.layer_widths},
                    {"activation", nn::act_name(model.spec.activation)},
                    {"head", scrae::head_kind_name(model.spec.head)},
                    {"head_dim", model.spec.head_dim},
                    {"decoder_widths", model.spec.effective_decoder_widths()}};
  header["train_meta"] = {{"seed", model.meta.seed},
                          {"epochs", model.meta.epochs},
                          {"weights", weights_to_json(model.meta.weights)},
                          {"repr_loss", model.meta.repr_loss},
                          {"pred_loss", model.meta.pred_loss},
                          {"optimizer", model.meta.optimizer},
                          {"learning_rate", model.meta.learning_rate},
                          {"batch_size", model.meta.batch_size}};
  header["operators"] = model.operator_list();
  header["config"] = nlohmann::ordered_json::parse(config_echo);

  std::vector<NamedTensor> tensors;
  for (std::size_t l = 0; l < model.encoder.size(); ++l) {
    tensors.push_back({"encoder." + std::to_string(l) + ".w", model.encoder[l].w});
    tensors.push_back({"encoder." + std::to_string(l) + ".b", model.encoder[l].b});
  }
  for (std::size_t l = 0; l < model.decoder.size(); ++l) {
    tensors.push_back({"decoder." + std::to_string(l) + ".w", model.decoder[l].w});
    tensors.push_back({"decoder." + std::to_string(l) + ".b", model.decoder[l].b});
  }
  tensors.push_back({"head.w", model.head.w});
  tensors.push_back({"head.b", model.head.b});
  tensors.push_back({"projection.w", model.projection.w});
  tensors.push_back({"projection.b", model.projection.b});
  if (model.spec.head == scrae::HeadKind::classifier) {
    tensors.push_back({"centers", model.centers.centers});
  }
  write_model_file(path, header, tensors);
}

scrae::EncoderModel model_from_file(const ModelFile& file, bool validate_spec) {
  if (file.header.at("kind").get<std::string>() != "scrae") {
    throw std::runtime_error("model artifact is not a scrae encoder");
  }
  scrae::EncoderModel model;
  const auto& spec = file.header.at("spec");
  model.spec.input_dim = spec.at("input_dim").get<std::size_t>();
  model.spec.layer_widths = spec.at("layer_widths").get<std::vector<std::size_t>>();
  model.spec.activation = nn::act_from_name(spec.at("activation").get<std::string>());
  model.spec.head = scrae::head_kind_from_name(spec.at("head").get<std::string>());
  model.spec.head_dim = spec.at("head_dim").get<std::size_t>();
  model.spec.decoder_widths = spec.at("decoder_widths").get<std::vector<std::size_t>>();
  if (validate_spec) model.spec.validate();

  const auto& meta = file.header.at("train_meta");
  model.meta.seed = meta.at("seed").get<std::uint64_t>();
  model.meta.epochs = meta.at("epochs").get<std::size_t>();
  model.meta.weights = weights_from_json(meta.at("weights"));
  model.meta.repr_loss = meta.at("repr_loss").get<std::string>();
  model.meta.pred_loss = meta.at("pred_loss").get<std::string>();
  model.meta.optimizer = meta.at("optimizer").get<std::string>();
  model.meta.learning_rate = meta.at("learning_rate").get<double>();
  model.meta.batch_size = meta.at("batch_size").get<std::size_t>();

  auto load_dense = [&](const std::string& prefix, nn::Act act) {
    nn::Dense layer;
    layer.w = file.tensor(prefix + ".w");
    layer.b = file.tensor(prefix + ".b");
    layer.act = act;
    return layer;
  };
  for (std::size_t l = 0; l < model.spec.layer_widths.size(); ++l) {
    model.encoder.push_back(
        load_dense("encoder." + std::to_string(l), model.spec.activation));
  }
  const auto dec_widths = model.spec.effective_decoder_widths();
  for (std::size_t l = 0; l < dec_widths.size(); ++l) {
    const nn::Act act =
        (l + 1 == dec_widths.size()) ? nn::Act::identity : model.spec.activation;
    model.decoder.push_back(load_dense("decoder." + std::to_string(l), act));
  }
  model.head = load_dense("head", nn::Act::identity);
  model.projection = load_dense("projection", nn::Act::identity);
  if (model.spec.head == scrae::HeadKind::classifier && file.has_tensor("centers")) {
    model.centers.centers = file.tensor("centers");
    model.centers.counts.assign(model.spec.head_dim, 0);
  }
  return model;
}

scrae::EncoderModel load_model(const std::string& path) {
  return model_from_file(read_model_file(path));
}

}  // namespace veil::io
