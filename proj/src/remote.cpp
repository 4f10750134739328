#include "vision/remote.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

namespace vision {
namespace vxdn {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

bool valid_type(std::uint8_t t) { return t >= 1 && t <= 8; }

void send_all(int fd, const std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("send timed out");
      throw TransportError(std::string("send failed: ") + std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

void recv_all(int fd, std::uint8_t* data, std::size_t len) {
  while (len > 0) {
    const ssize_t n = ::recv(fd, data, len, 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("receive timed out");
      throw TransportError(std::string("receive failed: ") + std::strerror(errno));
    }
    data += n;
    len -= static_cast<std::size_t>(n);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
  std::vector<std::uint8_t> out;
  out.reserve(5 + m.payload.size());
  put_u32(out, static_cast<std::uint32_t>(m.payload.size()));
  out.push_back(static_cast<std::uint8_t>(m.type));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  return out;
}

std::vector<std::uint8_t> encode_tensor(std::uint32_t t, const Frame& f) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + 4 * f.size());
  put_u32(out, t);
  put_u32(out, f.c);
  put_u32(out, f.h);
  put_u32(out, f.w);
  for (float v : f.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

TensorPayload decode_tensor(std::span<const std::uint8_t> p) {
  if (p.size() < 16) throw ProtocolError("tensor payload shorter than its 16-byte header");
  TensorPayload out;
  out.t = get_u32(&p[0]);
  const std::uint32_t c = get_u32(&p[4]), h = get_u32(&p[8]), w = get_u32(&p[12]);
  const std::uint64_t count = static_cast<std::uint64_t>(c) * h * w;
  if (p.size() != 16 + 4 * count) {
    throw ProtocolError("tensor payload length " + std::to_string(p.size()) + " does not match dims " +
                        std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w));
  }
  out.frame = Frame(c, h, w);
  for (std::size_t i = 0; i < count; ++i) {
    out.frame.data[i] = std::bit_cast<float>(get_u32(&p[16 + 4 * i]));
  }
  return out;
}

Message hello() { return Message{MessageType::kHello, {kProtocolVersion}}; }

Message error(const std::string& text) {
  return Message{MessageType::kError, std::vector<std::uint8_t>(text.begin(), text.end())};
}

void write_message(int fd, const Message& m) {
  const auto bytes = encode_message(m);
  send_all(fd, bytes.data(), bytes.size());
}

Message read_message(int fd) {
  std::uint8_t header[5];
  recv_all(fd, header, sizeof(header));
  const std::uint32_t len = get_u32(header);
  if (len > kMaxPayload) throw ProtocolError("payload length " + std::to_string(len) + " too large");
  if (!valid_type(header[4])) {
    throw ProtocolError("unknown message type " + std::to_string(header[4]));
  }
  Message m;
  m.type = static_cast<MessageType>(header[4]);
  m.payload.resize(len);
  if (len > 0) recv_all(fd, m.payload.data(), len);
  return m;
}

Endpoint parse_endpoint(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ParameterError("endpoint must look like host:port, got '" + address + "'");
  }
  Endpoint ep;
  ep.host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);
  try {
    const unsigned long v = std::stoul(port);
    if (v == 0 || v > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(v);
  } catch (const std::logic_error&) {
    throw ParameterError("bad port in endpoint '" + address + "'");
  }
  return ep;
}

Connection::Connection(const Endpoint& ep, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  if (int rc = ::getaddrinfo(ep.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr && fd_ < 0; ai = ai->ai_next) {
    int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc < 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
      if (rc == 1) {
        int err = 0;
        socklen_t len = sizeof(err);
        ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
        rc = err == 0 ? 0 : -1;
        if (err != 0) last_error = std::strerror(err);
      } else {
        last_error = rc == 0 ? "connect timed out" : std::strerror(errno);
        rc = -1;
      }
    } else if (rc < 0) {
      last_error = std::strerror(errno);
    }
    if (rc == 0) {
      ::fcntl(fd, F_SETFL, flags);
      fd_ = fd;
    } else {
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) {
    throw TransportError("cannot connect to " + ep.host + ":" + port + ": " + last_error);
  }

  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

  try {
    const Message reply = round_trip(hello());
    if (reply.type == MessageType::kError) {
      throw RemoteError(std::string(reply.payload.begin(), reply.payload.end()));
    }
    if (reply.type != MessageType::kHello || reply.payload.size() != 1 ||
        reply.payload[0] != kProtocolVersion) {
      throw ProtocolError("server did not answer HELLO with protocol version 1");
    }
  } catch (...) {
    ::close(fd_);
    fd_ = -1;
    throw;
  }
}

Connection::~Connection() {
  if (fd_ >= 0) ::close(fd_);
}

Message Connection::round_trip(const Message& request) {
  write_message(fd_, request);
  return read_message(fd_);
}

}  // namespace vxdn

RemoteClient::RemoteClient(std::string address, std::chrono::milliseconds timeout,
                           std::size_t pool_size)
    : address_(std::move(address)),
      endpoint_(vxdn::parse_endpoint(address_)),
      timeout_(timeout),
      pool_size_(pool_size == 0 ? 1 : pool_size) {}

RemoteClient::~RemoteClient() = default;

std::unique_ptr<vxdn::Connection> RemoteClient::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return !idle_.empty() || open_ < pool_size_; });
  if (!idle_.empty()) {
    auto c = std::move(idle_.back());
    idle_.pop_back();
    return c;
  }
  ++open_;
  lock.unlock();
  try {
    return std::make_unique<vxdn::Connection>(endpoint_, timeout_);
  } catch (...) {
    lock.lock();
    --open_;
    cv_.notify_one();
    throw;
  }
}

void RemoteClient::release(std::unique_ptr<vxdn::Connection> c) {
  std::lock_guard lock(mu_);
  if (c) {
    idle_.push_back(std::move(c));
  } else {
    --open_;
  }
  cv_.notify_one();
}

Frame RemoteClient::call(vxdn::MessageType req, vxdn::MessageType resp, std::uint32_t t,
                         const Frame& f, bool expect_same_shape) {
  auto conn = acquire();
  vxdn::Message reply;
  try {
    reply = conn->round_trip(vxdn::Message{req, vxdn::encode_tensor(t, f)});
  } catch (...) {
    // A connection that failed mid-request is out of sync; drop it.
    release(nullptr);
    throw;
  }
  if (reply.type == vxdn::MessageType::kError) {
    // Servers close the connection after an ERROR, so it is not reusable.
    release(nullptr);
    throw RemoteError(std::string(reply.payload.begin(), reply.payload.end()));
  }
  release(std::move(conn));

  if (reply.type != resp) {
    throw ProtocolError("expected response type " + std::to_string(static_cast<int>(resp)) +
                        ", got " + std::to_string(static_cast<int>(reply.type)));
  }
  auto decoded = vxdn::decode_tensor(reply.payload);
  if (expect_same_shape && !decoded.frame.same_shape(f)) {
    throw ProtocolError("response tensor shape does not match the request");
  }
  return std::move(decoded.frame);
}

namespace {

class RemoteDenoiser final : public Denoiser {
 public:
  explicit RemoteDenoiser(std::shared_ptr<RemoteClient> c) : client_(std::move(c)) {}
  Frame eps(const Frame& z, std::uint32_t t) const override {
    return client_->call(vxdn::MessageType::kEpsReq, vxdn::MessageType::kEpsResp, t, z, true);
  }
  std::string name() const override { return "remote:" + client_->address(); }

 private:
  std::shared_ptr<RemoteClient> client_;
};

class RemoteCodec final : public LatentCodec {
 public:
  RemoteCodec(std::shared_ptr<RemoteClient> c, std::uint32_t factor, std::uint32_t mult)
      : client_(std::move(c)), factor_(factor), mult_(mult) {}
  Frame encode(const Frame& px) const override {
    return client_->call(vxdn::MessageType::kEncReq, vxdn::MessageType::kEncResp, 0, px, false);
  }
  Frame decode(const Frame& lat) const override {
    return client_->call(vxdn::MessageType::kDecReq, vxdn::MessageType::kDecResp, 0, lat, false);
  }
  std::uint32_t spatial_factor() const override { return factor_; }
  std::uint32_t latent_channels(std::uint32_t c) const override { return c * mult_; }
  std::string name() const override { return "remote:" + client_->address(); }

 private:
  std::shared_ptr<RemoteClient> client_;
  std::uint32_t factor_;
  std::uint32_t mult_;
};

}  // namespace

std::shared_ptr<const Denoiser> remote_denoiser(std::shared_ptr<RemoteClient> client) {
  return std::make_shared<RemoteDenoiser>(std::move(client));
}

std::shared_ptr<const LatentCodec> remote_codec(std::shared_ptr<RemoteClient> client,
                                                std::uint32_t spatial_factor,
                                                std::uint32_t channel_multiplier) {
  return std::make_shared<RemoteCodec>(std::move(client), spatial_factor, channel_multiplier);
}

}  // namespace vision
