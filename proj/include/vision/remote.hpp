#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vision/denoiser.hpp"
#include "vision/tensor.hpp"

namespace vision {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The server answered with an ERROR message; what() carries its text.
class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// VXDN/1 framing: [u32 LE payload_length][u8 type][payload].
namespace vxdn {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::uint32_t kMaxPayload = 1u << 30;

enum class MessageType : std::uint8_t {
  kHello = 1,
  kEpsReq = 2,
  kEpsResp = 3,
  kEncReq = 4,
  kEncResp = 5,
  kDecReq = 6,
  kDecResp = 7,
  kError = 8,
};

struct Message {
  MessageType type = MessageType::kError;
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> encode_message(const Message& m);

// Tensor payload: u32 t, u32 c, u32 h, u32 w, then c·h·w f32 LE.
std::vector<std::uint8_t> encode_tensor(std::uint32_t t, const Frame& f);
struct TensorPayload {
  std::uint32_t t = 0;
  Frame frame;
};
TensorPayload decode_tensor(std::span<const std::uint8_t> payload);

Message hello();
Message error(const std::string& text);

// Blocking socket I/O. Throw TransportError on EOF, timeout or socket failure,
// ProtocolError on malformed framing.
void write_message(int fd, const Message& m);
Message read_message(int fd);

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& address);

// One TCP connection that has completed the HELLO exchange.
class Connection {
 public:
  Connection(const Endpoint& ep, std::chrono::milliseconds timeout);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  // Sends a request and waits for its response. Returns the response message,
  // which may be an ERROR.
  Message round_trip(const Message& request);

 private:
  int fd_ = -1;
};

}  // namespace vxdn

// Pool of VXDN/1 connections. Each connection carries one request at a time;
// concurrent callers use separate connections, up to `pool_size`.
class RemoteClient {
 public:
  RemoteClient(std::string address, std::chrono::milliseconds timeout, std::size_t pool_size = 1);
  ~RemoteClient();

  // Sends `req` with tensor payload and returns the tensor from a response of
  // type `resp`. When `expect_same_shape`, the response dims must match.
  Frame call(vxdn::MessageType req, vxdn::MessageType resp, std::uint32_t t, const Frame& f,
             bool expect_same_shape);

  const std::string& address() const { return address_; }

 private:
  std::unique_ptr<vxdn::Connection> acquire();
  void release(std::unique_ptr<vxdn::Connection> c);

  std::string address_;
  vxdn::Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
  std::size_t pool_size_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::vector<std::unique_ptr<vxdn::Connection>> idle_;
  std::size_t open_ = 0;
};

std::shared_ptr<const Denoiser> remote_denoiser(std::shared_ptr<RemoteClient> client);
std::shared_ptr<const LatentCodec> remote_codec(std::shared_ptr<RemoteClient> client,
                                                std::uint32_t spatial_factor,
                                                std::uint32_t channel_multiplier);

}  // namespace vision
