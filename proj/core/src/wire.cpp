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

#include "veil/wire.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "veil/binary.hpp"

namespace veil::svc {

std::vector<std::uint8_t> encode_frame(std::uint8_t msg_type,
                                       std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderSize + payload.size());
  bin::put_bytes(out, kFrameMagic, 4);
  bin::put_u8(out, kProtocolVersion);
  bin::put_u8(out, msg_type);
  bin::put_u64_le(out, payload.size());
  bin::put_bytes(out, payload.data(), payload.size());
  return out;
}

std::string request_id_hex(const RequestId& id) {
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve(32);
  for (std::uint8_t b : id) {
    hex.push_back(digits[b >> 4]);
    hex.push_back(digits[b & 0xf]);
  }
  return hex;
}

std::vector<std::uint8_t> encode_predict_request(const PredictRequest& req) {
  std::vector<std::uint8_t> payload;
  payload.reserve(16 + 4 * req.latent.size());
  bin::put_bytes(payload, req.request_id.data(), 16);
  for (float v : req.latent) bin::put_f32_le(payload, v);
  return payload;
}

std::optional<PredictRequest> decode_predict_request(
    std::span<const std::uint8_t> payload, std::size_t latent_dim) {
  if (payload.size() != 16 + 4 * latent_dim) return std::nullopt;
  PredictRequest req;
  std::memcpy(req.request_id.data(), payload.data(), 16);
  bin::ByteReader reader(payload.data() + 16, payload.size() - 16);
  req.latent.resize(latent_dim);
  for (float& v : req.latent) v = reader.f32_le();
  return req;
}

std::vector<std::uint8_t> encode_predict_response(const PredictResponse& resp) {
  std::vector<std::uint8_t> payload;
  payload.reserve(16 + 4 + 8 * resp.prediction.size());
  bin::put_bytes(payload, resp.request_id.data(), 16);
  bin::put_u32_le(payload, static_cast<std::uint32_t>(resp.prediction.size()));
  for (double v : resp.prediction) bin::put_f64_le(payload, v);
  return payload;
}

std::optional<PredictResponse> decode_predict_response(
    std::span<const std::uint8_t> payload) {
  if (payload.size() < 20) return std::nullopt;
  PredictResponse resp;
  std::memcpy(resp.request_id.data(), payload.data(), 16);
  bin::ByteReader reader(payload.data() + 16, payload.size() - 16);
  const std::uint32_t count = reader.u32_le();
  if (payload.size() != 20 + 8ull * count) return std::nullopt;
  resp.prediction.resize(count);
  for (double& v : resp.prediction) v = reader.f64_le();
  return resp;
}

std::vector<std::uint8_t> encode_error_payload(ErrorReason reason,
                                               const std::string& message) {
  std::vector<std::uint8_t> payload;
  bin::put_u8(payload, static_cast<std::uint8_t>(reason));
  bin::put_bytes(payload, message.data(), message.size());
  return payload;
}

std::vector<std::uint8_t> encode_raw_request(std::span<const double> features) {
  std::vector<std::uint8_t> payload;
  bin::put_u32_le(payload, static_cast<std::uint32_t>(features.size()));
  for (double v : features) bin::put_f64_le(payload, v);
  return payload;
}

std::optional<std::vector<double>> decode_raw_request(
    std::span<const std::uint8_t> payload) {
  if (payload.size() < 4) return std::nullopt;
  bin::ByteReader reader(payload.data(), payload.size());
  const std::uint32_t count = reader.u32_le();
  if (payload.size() != 4 + 8ull * count) return std::nullopt;
  std::vector<double> values(count);
  for (double& v : values) v = reader.f64_le();
  return values;
}

std::vector<std::uint8_t> encode_raw_response(std::span<const double> prediction) {
  return encode_raw_request(prediction);
}

std::optional<std::vector<double>> decode_raw_response(
    std::span<const std::uint8_t> payload) {
  return decode_raw_request(payload);
}

// ---------------------------------------------------------------------------
// Sockets

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

Socket::~Socket() { close(); }

Socket Socket::connect_to(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw std::runtime_error("socket() failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::runtime_error("invalid host address: " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw std::runtime_error("connect to " + host + ":" + std::to_string(port) +
                             " failed: " + std::strerror(errno));
  }
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

void Socket::set_recv_timeout_ms(int ms) {
  timeval tv{};
  tv.tv_sec = ms / 1000;
  tv.tv_usec = (ms % 1000) * 1000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void Socket::send_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && errno == EINTR) continue;
      throw std::runtime_error("send failed: " + std::string(std::strerror(errno)));
    }
    sent += static_cast<std::size_t>(n);
  }
}

bool Socket::recv_exact(std::uint8_t* out, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd_, out + got, n - got, 0);
    if (r == 0) {
      if (got == 0) return false;  // clean EOF on a frame boundary
      throw std::runtime_error("connection truncated mid-frame");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error("recv failed: " + std::string(std::strerror(errno)));
    }
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

ReadStatus read_frame(Socket& socket, Frame* frame) {
  std::uint8_t header[kFrameHeaderSize];
  try {
    if (!socket.recv_exact(header, sizeof(header))) return ReadStatus::eof;
  } catch (const std::runtime_error&) {
    return ReadStatus::truncated;
  }
  if (std::memcmp(header, kFrameMagic, 4) != 0) return ReadStatus::bad_magic;
  if (header[4] != kProtocolVersion) return ReadStatus::bad_version;
  frame->msg_type = header[5];
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(header[6 + i]) << (8 * i);
  if (len > kMaxPayload) return ReadStatus::oversize;
  frame->payload.resize(len);
  if (len > 0) {
    try {
      if (!socket.recv_exact(frame->payload.data(), len)) return ReadStatus::truncated;
    } catch (const std::runtime_error&) {
      return ReadStatus::truncated;
    }
  }
  return ReadStatus::ok;
}

void write_frame(Socket& socket, std::uint8_t msg_type,
                 std::span<const std::uint8_t> payload) {
  socket.send_all(encode_frame(msg_type, payload));
}

Listener::Listener(Listener&& other) noexcept : fd_(other.fd_), port_(other.port_) {
  other.fd_ = -1;
}

Listener& Listener::operator=(Listener&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
  }
  return *this;
}

Listener::~Listener() { close(); }

Listener Listener::bind_and_listen(const std::string& host, std::uint16_t port) {
  Listener listener;
  listener.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listener.fd_ < 0) throw std::runtime_error("socket() failed");
  const int one = 1;
  ::setsockopt(listener.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw std::runtime_error("invalid host address: " + host);
  }
  if (::bind(listener.fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw std::runtime_error("bind " + host + ":" + std::to_string(port) +
                             " failed: " + std::strerror(errno));
  }
  if (::listen(listener.fd_, 64) != 0) {
    throw std::runtime_error("listen failed");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(listener.fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  listener.port_ = ntohs(bound.sin_port);
  return listener;
}

std::optional<Socket> Listener::accept_one() {
  if (fd_ < 0) return std::nullopt;
  const int client = ::accept(fd_, nullptr, nullptr);
  if (client < 0) return std::nullopt;
  return Socket(client);
}

void Listener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace veil::svc
