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

#ifndef VEIL_SERVICE_HPP_
#define VEIL_SERVICE_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "veil/downstream.hpp"
#include "veil/scrae.hpp"
#include "veil/wire.hpp"

namespace veil::svc {

/// One audit line: no raw feature values, ever.
struct AuditRecord {
  std::int64_t timestamp_ms = 0;
  std::string request_id;  // hex
  std::string direction;   // "encoded_out" | "prediction_in"
  std::uint64_t latent_checksum = 0;
  std::string outcome;     // "ok" | "error"

  std::string to_json_line() const;
};

/// Append-only newline-delimited JSON audit log; appends are serialized.
class AuditLog {
 public:
  explicit AuditLog(std::string path);
  void append(const AuditRecord& record);
  std::size_t count(const std::string& direction) const;
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  mutable std::mutex mutex_;
  std::size_t encoded_out_ = 0;
  std::size_t prediction_in_ = 0;
};

// ---------------------------------------------------------------------------
// Inference service (untrusted side): consumes E-dim latents, returns
// predictions, stateless per request.

struct InferenceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = ephemeral
};

class InferenceService {
 public:
  InferenceService(downstream::DownstreamModel model, InferenceConfig config);
  ~InferenceService();

  void start();
  void stop();
  std::uint16_t port() const { return port_; }
  std::size_t latent_dim() const { return latent_dim_; }

 private:
  void accept_loop();
  void serve_connection(Socket socket);

  downstream::DownstreamModel model_;
  InferenceConfig config_;
  std::size_t latent_dim_;
  Listener listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::mutex fds_mutex_;
  std::set<int> live_fds_;
};

// ---------------------------------------------------------------------------
// Source service (trusted side): encodes raw features, forwards only latents
// plus opaque request ids, joins predictions back to local callers.

struct SourceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;  // local trusted-side listener; 0 = ephemeral
  std::string inference_host = "127.0.0.1";
  std::uint16_t inference_port = 0;
  std::string audit_path;
  std::string latent_store_path;  // optional append-only store
  std::uint64_t seed = 0;         // 0 = nondeterministic ids
};

class SourceService {
 public:
  SourceService(scrae::EncoderModel encoder, SourceConfig config);
  ~SourceService();

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

  /// Local (trusted-side) entry point: encode, forward, await, join. Used by
  /// in-process callers and by the local listener. Throws on transport
  /// failure or boundary errors.
  std::vector<double> predict(const std::vector<double>& features);

  /// Response-path handler, exposed so replay/unknown-id behavior is
  /// directly testable: returns the prediction when `frame` resolves a
  /// pending request; drops replays and unknown ids with an audit entry.
  std::optional<std::vector<double>> handle_boundary_response(const Frame& frame);

  AuditLog& audit() { return audit_; }

 private:
  void accept_loop();
  void serve_connection(Socket socket);

  struct Pending {
    std::uint64_t latent_checksum = 0;
    std::optional<std::vector<double>> result;
  };

  scrae::EncoderModel encoder_;
  SourceConfig config_;
  AuditLog audit_;
  Listener listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex workers_mutex_;
  std::vector<std::thread> workers_;
  std::mutex fds_mutex_;
  std::set<int> live_fds_;

  std::mutex state_mutex_;
  Rng id_rng_;
  // request_id -> pending slot; ids and callers never cross the wire.
  std::map<std::string, std::shared_ptr<Pending>> pending_;
  std::set<std::string> delivered_;

  std::mutex store_mutex_;
};

}  // namespace veil::svc

#endif  // VEIL_SERVICE_HPP_
