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

#ifndef VEIL_WIRE_HPP_
#define VEIL_WIRE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace veil::svc {

/// Trust-boundary frame: magic "VEIL", version 0x01, message type, 8-byte
/// little-endian payload length, payload. Bit-exact on the wire.
inline constexpr char kFrameMagic[4] = {'V', 'E', 'I', 'L'};
inline constexpr std::uint8_t kProtocolVersion = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 4 + 1 + 1 + 8;
inline constexpr std::size_t kMaxPayload = 64ull << 20;

enum class MsgType : std::uint8_t {
  predict_req = 0x01,
  predict_resp = 0x02,
  error = 0x03,
  health = 0x04,
  // Trusted-side local interface only; never crosses the boundary.
  raw_req = 0x11,
  raw_resp = 0x12,
};

enum class ErrorReason : std::uint8_t {
  bad_magic = 0x01,
  bad_version = 0x02,
  unknown_msg_type = 0x03,
  length_mismatch = 0x04,
  internal = 0x05,
  malformed_payload = 0x06,
};

struct Frame {
  std::uint8_t msg_type = 0;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_frame(std::uint8_t msg_type,
                                       std::span<const std::uint8_t> payload);

/// Result of pulling one frame off a stream.
enum class ReadStatus { ok, eof, bad_magic, bad_version, oversize, truncated };

using RequestId = std::array<std::uint8_t, 16>;

std::string request_id_hex(const RequestId& id);

/// PREDICT_REQ payload: 16 opaque random bytes then E little-endian 32-bit
/// floats. Nothing else may cross the boundary.
struct PredictRequest {
  RequestId request_id{};
  std::vector<float> latent;
};
std::vector<std::uint8_t> encode_predict_request(const PredictRequest& req);
/// Fails (nullopt) unless the payload length is exactly 16 + 4E.
std::optional<PredictRequest> decode_predict_request(
    std::span<const std::uint8_t> payload, std::size_t latent_dim);

/// PREDICT_RESP payload: the request id, a u32 count, then that many
/// little-endian 64-bit prediction values.
struct PredictResponse {
  RequestId request_id{};
  std::vector<double> prediction;
};
std::vector<std::uint8_t> encode_predict_response(const PredictResponse& resp);
std::optional<PredictResponse> decode_predict_response(
    std::span<const std::uint8_t> payload);

/// ERROR payload: one reason byte plus a UTF-8 message.
std::vector<std::uint8_t> encode_error_payload(ErrorReason reason,
                                               const std::string& message);

/// RAW_REQ payload (local interface): u32 feature count then f64 values.
std::vector<std::uint8_t> encode_raw_request(std::span<const double> features);
std::optional<std::vector<double>> decode_raw_request(
    std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_raw_response(std::span<const double> prediction);
std::optional<std::vector<double>> decode_raw_response(
    std::span<const std::uint8_t> payload);

/// Minimal RAII TCP socket (blocking).
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket();

  static Socket connect_to(const std::string& host, std::uint16_t port);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }
  /// 0 disables the timeout; a timed-out recv throws.
  void set_recv_timeout_ms(int ms);
  void send_all(std::span<const std::uint8_t> data);
  /// False on clean EOF before any byte; throws on mid-read truncation.
  bool recv_exact(std::uint8_t* out, std::size_t n);
  void shutdown_both();
  void close();

 private:
  int fd_ = -1;
};

/// Reads one frame. `bad_magic`/`bad_version`/`oversize` leave the stream
/// unusable; callers should send an ERROR frame and close.
ReadStatus read_frame(Socket& socket, Frame* frame);
void write_frame(Socket& socket, std::uint8_t msg_type,
                 std::span<const std::uint8_t> payload);

class Listener {
 public:
  Listener() = default;
  Listener(Listener&& other) noexcept;
  Listener& operator=(Listener&& other) noexcept;
  Listener(const Listener&) = delete;
  ~Listener();

  /// Port 0 binds an ephemeral port; the bound port is then readable.
  static Listener bind_and_listen(const std::string& host, std::uint16_t port);

  std::uint16_t port() const { return port_; }
  /// Empty on close/shutdown.
  std::optional<Socket> accept_one();
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// FNV-1a 64-bit checksum; audit-log fingerprint of latent payload bytes.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);

}  // namespace veil::svc

#endif  // VEIL_WIRE_HPP_
