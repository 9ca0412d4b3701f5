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

#include "veil/service.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sys/socket.h>
#include <sstream>
#include <stdexcept>

#include "veil/binary.hpp"
#include "veil/log.hpp"

namespace veil::svc {

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::uint64_t nondeterministic_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd() ^
         static_cast<std::uint64_t>(now_ms());
}

void send_error(Socket& socket, ErrorReason reason, const std::string& message) {
  try {
    write_frame(socket, static_cast<std::uint8_t>(MsgType::error),
                encode_error_payload(reason, message));
  } catch (const std::exception&) {
    // Peer already gone; nothing to report to.
  }
}

}  // namespace

std::string AuditRecord::to_json_line() const {
  std::ostringstream os;
  os << R"({"timestamp":)" << timestamp_ms << R"(,"request_id":")" << request_id
     << R"(","direction":")" << direction << R"(","latent_checksum":)" << latent_checksum
     << R"(,"outcome":")" << outcome << R"("})";
  return os.str();
}

AuditLog::AuditLog(std::string path) : path_(std::move(path)) {}

void AuditLog::append(const AuditRecord& record) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (record.direction == "encoded_out") {
    ++encoded_out_;
  } else {
    ++prediction_in_;
  }
  if (path_.empty()) return;
  std::ofstream out(path_, std::ios::app);
  out << record.to_json_line() << '\n';
}

std::size_t AuditLog::count(const std::string& direction) const {
  std::lock_guard<std::mutex> lock(mutex_);
  return direction == "encoded_out" ? encoded_out_ : prediction_in_;
}

// ---------------------------------------------------------------------------
// InferenceService

InferenceService::InferenceService(downstream::DownstreamModel model,
                                   InferenceConfig config)
    : model_(std::move(model)),
      config_(std::move(config)),
      latent_dim_(model_.input_dim()) {}

InferenceService::~InferenceService() { stop(); }

void InferenceService::start() {
  listener_ = Listener::bind_and_listen(config_.host, config_.port);
  port_ = listener_.port();
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  log::info("inference service listening on " + config_.host + ":" +
            std::to_string(port_));
}

void InferenceService::stop() {
  if (!running_.exchange(false)) return;
  listener_.close();
  {
    std::lock_guard<std::mutex> lock(fds_mutex_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard<std::mutex> lock(workers_mutex_);
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void InferenceService::accept_loop() {
  while (running_) {
    auto socket = listener_.accept_one();
    if (!socket) break;
    std::lock_guard<std::mutex> lock(workers_mutex_);
    workers_.emplace_back(
        [this, s = std::move(*socket)]() mutable { serve_connection(std::move(s)); });
  }
}

void InferenceService::serve_connection(Socket socket) {
  {
    std::lock_guard<std::mutex> lock(fds_mutex_);
    live_fds_.insert(socket.fd());
  }
  struct FdGuard {
    InferenceService* self;
    int fd;
    ~FdGuard() {
      std::lock_guard<std::mutex> lock(self->fds_mutex_);
      self->live_fds_.erase(fd);
    }
  } guard{this, socket.fd()};

  // Stateless per request; the connection survives recoverable errors.
  while (running_) {
    Frame frame;
    const ReadStatus status = read_frame(socket, &frame);
    if (status == ReadStatus::eof) return;
    if (status == ReadStatus::truncated) return;  // documented drop
    if (status == ReadStatus::bad_magic) {
      send_error(socket, ErrorReason::bad_magic, "bad frame magic");
      return;  // framing lost, connection unusable
    }
    if (status == ReadStatus::bad_version) {
      send_error(socket, ErrorReason::bad_version, "unsupported protocol version");
      return;
    }
    if (status == ReadStatus::oversize) {
      send_error(socket, ErrorReason::length_mismatch, "payload too large");
      return;
    }

    switch (static_cast<MsgType>(frame.msg_type)) {
      case MsgType::health: {
        write_frame(socket, static_cast<std::uint8_t>(MsgType::health), {});
        break;
      }
      case MsgType::predict_req: {
        const auto request = decode_predict_request(frame.payload, latent_dim_);
        if (!request) {
          send_error(socket, ErrorReason::length_mismatch,
                     "predict payload must be 16 + 4*" + std::to_string(latent_dim_) +
                         " bytes, got " + std::to_string(frame.payload.size()));
          break;  // connection preserved
        }
        try {
          Matrix z(1, latent_dim_);
          for (std::size_t j = 0; j < latent_dim_; ++j) {
            z(0, j) = static_cast<double>(request->latent[j]);
          }
          const Matrix pred = model_.predict(z);
          PredictResponse resp;
          resp.request_id = request->request_id;
          resp.prediction.assign(pred.row(0).begin(), pred.row(0).end());
          write_frame(socket, static_cast<std::uint8_t>(MsgType::predict_resp),
                      encode_predict_response(resp));
        } catch (const std::exception& e) {
          send_error(socket, ErrorReason::internal, e.what());
        }
        break;
      }
      case MsgType::error: {
        log::warn("inference service received an ERROR frame; dropping");
        break;  // documented drop
      }
      default: {
        send_error(socket, ErrorReason::unknown_msg_type,
                   "unknown message type " + std::to_string(frame.msg_type));
        break;  // connection stays open
      }
    }
  }
}

// ---------------------------------------------------------------------------
// SourceService

SourceService::SourceService(scrae::EncoderModel encoder, SourceConfig config)
    : encoder_(std::move(encoder)),
      config_(std::move(config)),
      audit_(config_.audit_path),
      id_rng_(config_.seed != 0 ? config_.seed : nondeterministic_seed()) {}

SourceService::~SourceService() { stop(); }

void SourceService::start() {
  listener_ = Listener::bind_and_listen(config_.host, config_.port);
  port_ = listener_.port();
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  log::info("source service listening on " + config_.host + ":" + std::to_string(port_));
}

void SourceService::stop() {
  if (!running_.exchange(false)) return;
  listener_.close();
  {
    std::lock_guard<std::mutex> lock(fds_mutex_);
    for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard<std::mutex> lock(workers_mutex_);
  for (auto& w : workers_) {
    if (w.joinable()) w.join();
  }
  workers_.clear();
}

void SourceService::accept_loop() {
  while (running_) {
    auto socket = listener_.accept_one();
    if (!socket) break;
    std::lock_guard<std::mutex> lock(workers_mutex_);
    workers_.emplace_back(
        [this, s = std::move(*socket)]() mutable { serve_connection(std::move(s)); });
  }
}

void SourceService::serve_connection(Socket socket) {
  {
    std::lock_guard<std::mutex> lock(fds_mutex_);
    live_fds_.insert(socket.fd());
  }
  struct FdGuard {
    SourceService* self;
    int fd;
    ~FdGuard() {
      std::lock_guard<std::mutex> lock(self->fds_mutex_);
      self->live_fds_.erase(fd);
    }
  } guard{this, socket.fd()};

  while (running_) {
    Frame frame;
    const ReadStatus status = read_frame(socket, &frame);
    if (status == ReadStatus::eof || status == ReadStatus::truncated) return;
    if (status != ReadStatus::ok) {
      send_error(socket, ErrorReason::bad_magic, "malformed frame");
      return;
    }
    if (static_cast<MsgType>(frame.msg_type) != MsgType::raw_req) {
      send_error(socket, ErrorReason::unknown_msg_type,
                 "local interface accepts RAW_REQ only");
      continue;
    }
    const auto features = decode_raw_request(frame.payload);
    if (!features) {
      send_error(socket, ErrorReason::malformed_payload, "bad RAW_REQ payload");
      continue;
    }
    try {
      const std::vector<double> prediction = predict(*features);
      write_frame(socket, static_cast<std::uint8_t>(MsgType::raw_resp),
                  encode_raw_response(prediction));
    } catch (const std::exception& e) {
      send_error(socket, ErrorReason::internal, e.what());
    }
  }
}

std::vector<double> SourceService::predict(const std::vector<double>& features) {
  if (features.size() != encoder_.spec.input_dim) {
    throw std::invalid_argument("predict: expected " +
                                std::to_string(encoder_.spec.input_dim) + " features");
  }
  // Encode locally; only the quantized bottleneck leaves this process.
  Matrix x(1, features.size());
  for (std::size_t j = 0; j < features.size(); ++j) x(0, j) = features[j];
  const Matrix z = scrae::encode_batch(encoder_, x);

  PredictRequest request;
  request.latent.resize(z.cols());
  for (std::size_t j = 0; j < z.cols(); ++j) {
    request.latent[j] = static_cast<float>(z(0, j));
  }

  std::vector<std::uint8_t> latent_bytes;
  for (float v : request.latent) bin::put_f32_le(latent_bytes, v);
  const std::uint64_t checksum = fnv1a64(latent_bytes);

  std::string id_hex;
  std::shared_ptr<Pending> pending = std::make_shared<Pending>();
  pending->latent_checksum = checksum;
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    id_rng_.fill_bytes(request.request_id.data(), request.request_id.size());
    id_hex = request_id_hex(request.request_id);
    pending_[id_hex] = pending;
  }

  if (!config_.latent_store_path.empty()) {
    std::lock_guard<std::mutex> lock(store_mutex_);
    std::ofstream store(config_.latent_store_path, std::ios::app | std::ios::binary);
    store.write(reinterpret_cast<const char*>(latent_bytes.data()),
                static_cast<std::streamsize>(latent_bytes.size()));
  }

  audit_.append({now_ms(), id_hex, "encoded_out", checksum, "ok"});

  Frame response;
  try {
    Socket boundary = Socket::connect_to(config_.inference_host, config_.inference_port);
    boundary.set_recv_timeout_ms(30000);
    write_frame(boundary, static_cast<std::uint8_t>(MsgType::predict_req),
                encode_predict_request(request));
    const ReadStatus status = read_frame(boundary, &response);
    if (status != ReadStatus::ok) {
      throw std::runtime_error("boundary read failed");
    }
  } catch (const std::exception& e) {
    std::lock_guard<std::mutex> lock(state_mutex_);
    pending_.erase(id_hex);
    audit_.append({now_ms(), id_hex, "prediction_in", checksum, "error"});
    throw std::runtime_error(std::string("inference endpoint unreachable: ") + e.what());
  }

  const auto result = handle_boundary_response(response);
  if (!result) {
    throw std::runtime_error("no prediction delivered for request " + id_hex);
  }
  return *result;
}

std::optional<std::vector<double>> SourceService::handle_boundary_response(
    const Frame& frame) {
  if (static_cast<MsgType>(frame.msg_type) == MsgType::error) {
    log::warn("source service: inference returned an ERROR frame");
    audit_.append({now_ms(), "", "prediction_in", 0, "error"});
    return std::nullopt;
  }
  if (static_cast<MsgType>(frame.msg_type) != MsgType::predict_resp) {
    log::warn("source service: unexpected boundary frame type " +
              std::to_string(frame.msg_type));
    audit_.append({now_ms(), "", "prediction_in", 0, "error"});
    return std::nullopt;
  }
  const auto response = decode_predict_response(frame.payload);
  if (!response) {
    audit_.append({now_ms(), "", "prediction_in", 0, "error"});
    return std::nullopt;
  }
  const std::string id_hex = request_id_hex(response->request_id);

  std::shared_ptr<Pending> pending;
  {
    std::lock_guard<std::mutex> lock(state_mutex_);
    const auto it = pending_.find(id_hex);
    if (it == pending_.end()) {
      if (delivered_.count(id_hex)) {
        // Replay: already joined once; never delivered twice.
        log::warn("source service: replayed response for request " + id_hex);
        audit_.append({now_ms(), id_hex, "prediction_in", 0, "error"});
        return std::nullopt;
      }
      log::warn("source service: response for unknown request " + id_hex + "; dropped");
      audit_.append({now_ms(), id_hex, "prediction_in", 0, "error"});
      return std::nullopt;
    }
    pending = it->second;
    pending_.erase(it);
    delivered_.insert(id_hex);
  }
  // Prediction joined to the caller inside this process only.
  pending->result = response->prediction;
  audit_.append({now_ms(), id_hex, "prediction_in", pending->latent_checksum, "ok"});
  return pending->result;
}

}  // namespace veil::svc
