#include "s3rec/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <exception>
#include <thread>

namespace s3rec {

namespace {

// One direction of the in-process pipe. Segments keep writes cheap; reads
// drain across segment boundaries so the semantics match a TCP stream.
class ByteQueue {
 public:
  void write(std::span<const uint8_t> data) {
    {
      std::lock_guard lk(mu_);
      if (closed_) throw TransportError("write on closed channel");
      segments_.emplace_back(data.begin(), data.end());
    }
    cv_.notify_one();
  }

  size_t read_upto(uint8_t* out, size_t max) {
    std::unique_lock lk(mu_);
    cv_.wait(lk, [&] { return !segments_.empty() || closed_; });
    if (segments_.empty()) return 0;  // closed and drained
    size_t got = 0;
    while (got < max && !segments_.empty()) {
      auto& seg = segments_.front();
      size_t take = std::min(max - got, seg.size() - head_);
      std::memcpy(out + got, seg.data() + head_, take);
      got += take;
      head_ += take;
      if (head_ == seg.size()) {
        segments_.pop_front();
        head_ = 0;
      }
    }
    return got;
  }

  void close() {
    {
      std::lock_guard lk(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::vector<uint8_t>> segments_;
  size_t head_ = 0;
  bool closed_ = false;
};

class InProcChannel : public Channel {
 public:
  InProcChannel(std::shared_ptr<ByteQueue> tx, std::shared_ptr<ByteQueue> rx,
                unsigned latency_us)
      : tx_(std::move(tx)), rx_(std::move(rx)), latency_us_(latency_us) {}

  ~InProcChannel() override { close(); }

  void write(std::span<const uint8_t> data) override {
    if (latency_us_ > 0) std::this_thread::sleep_for(std::chrono::microseconds(latency_us_));
    tx_->write(data);
  }

  size_t read_upto(uint8_t* out, size_t max) override { return rx_->read_upto(out, max); }

  void close() override {
    tx_->close();
    rx_->close();
  }

 private:
  std::shared_ptr<ByteQueue> tx_;
  std::shared_ptr<ByteQueue> rx_;
  unsigned latency_us_;
};

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  ~TcpChannel() override { close(); }

  void write(std::span<const uint8_t> data) override {
    size_t sent = 0;
    while (sent < data.size()) {
      ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<size_t>(n);
    }
  }

  size_t read_upto(uint8_t* out, size_t max) override {
    while (true) {
      ssize_t n = ::recv(fd_, out, max, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("recv failed: ") + std::strerror(errno));
      }
      return static_cast<size_t>(n);
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

sockaddr_in resolve(const std::string& host, uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    hostent* he = ::gethostbyname(host.c_str());
    if (he == nullptr || he->h_addrtype != AF_INET) {
      throw TransportError("cannot resolve host " + host);
    }
    std::memcpy(&addr.sin_addr, he->h_addr_list[0], sizeof(addr.sin_addr));
  }
  return addr;
}

}  // namespace

std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair(
    unsigned latency_us) {
  auto a_to_b = std::make_shared<ByteQueue>();
  auto b_to_a = std::make_shared<ByteQueue>();
  return {std::make_unique<InProcChannel>(a_to_b, b_to_a, latency_us),
          std::make_unique<InProcChannel>(b_to_a, a_to_b, latency_us)};
}

std::unique_ptr<Channel> listen_tcp(const std::string& host, uint16_t port, int timeout_ms) {
  int lfd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (lfd < 0) throw TransportError("socket() failed");
  int one = 1;
  ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(lfd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(lfd);
    throw TransportError(std::string("bind failed: ") + std::strerror(errno));
  }
  if (::listen(lfd, 1) != 0) {
    ::close(lfd);
    throw TransportError("listen failed");
  }
  pollfd pfd{lfd, POLLIN, 0};
  int ready = ::poll(&pfd, 1, timeout_ms);
  if (ready <= 0) {
    ::close(lfd);
    throw TransportError("no peer connected within " + std::to_string(timeout_ms) + " ms");
  }
  int fd = ::accept(lfd, nullptr, nullptr);
  ::close(lfd);
  if (fd < 0) throw TransportError("accept failed");
  return std::make_unique<TcpChannel>(fd);
}

std::unique_ptr<Channel> connect_tcp(const std::string& host, uint16_t port, int timeout_ms) {
  sockaddr_in addr = resolve(host, port);
  auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw TransportError("socket() failed");
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0) {
      return std::make_unique<TcpChannel>(fd);
    }
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      throw TransportError("connect to " + host + ":" + std::to_string(port) +
                           " failed: " + std::strerror(errno));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

void PartySession::send(Phase phase, MsgType type, std::span<const uint8_t> payload) {
  if (payload.size() > 0xffffffffu) throw UsageError("frame payload exceeds 4 GiB");
  uint8_t header[kFrameHeaderBytes];
  uint32_t len = static_cast<uint32_t>(payload.size());
  for (int i = 0; i < 4; i++) header[i] = static_cast<uint8_t>(len >> (8 * i));
  header[4] = static_cast<uint8_t>(type);
  channel_->write(std::span<const uint8_t>(header, kFrameHeaderBytes));
  if (!payload.empty()) channel_->write(payload);

  auto p = static_cast<size_t>(phase);
  stats_.bytes_sent[p] += kFrameHeaderBytes + payload.size();
  stats_.payload_sent[p] += payload.size();
  stats_.frames_sent[static_cast<size_t>(type)]++;
  stats_.sent_frames.push_back({phase, type, len});
}

std::pair<MsgType, std::vector<uint8_t>> PartySession::recv() {
  uint8_t header[kFrameHeaderBytes];
  size_t got = 0;
  while (got < kFrameHeaderBytes) {
    size_t n = channel_->read_upto(header + got, kFrameHeaderBytes - got);
    if (n == 0) {
      if (got == 0) throw TransportError("peer closed the channel");
      throw ProtocolError("truncated frame header");
    }
    got += n;
  }
  uint32_t len = 0;
  for (int i = 0; i < 4; i++) len |= static_cast<uint32_t>(header[i]) << (8 * i);
  uint8_t type_raw = header[4];
  if (type_raw < 1 || type_raw > kNumMsgTypes) {
    throw ProtocolError("unknown msg_type " + std::to_string(type_raw));
  }
  std::vector<uint8_t> payload(len);
  got = 0;
  while (got < len) {
    size_t n = channel_->read_upto(payload.data() + got, len - got);
    if (n == 0) throw ProtocolError("truncated frame payload");
    got += n;
  }
  stats_.bytes_received += kFrameHeaderBytes + len;
  stats_.frames_received[type_raw]++;
  return {static_cast<MsgType>(type_raw), std::move(payload)};
}

std::vector<uint8_t> PartySession::recv_expect(MsgType expected) {
  auto [type, payload] = recv();
  if (type != expected) {
    throw ProtocolError("expected msg_type " + std::to_string(static_cast<int>(expected)) +
                        ", got " + std::to_string(static_cast<int>(type)));
  }
  return payload;
}

std::pair<std::unique_ptr<PartySession>, std::unique_ptr<PartySession>> make_inproc_sessions(
    uint64_t seed0, uint64_t seed1, unsigned latency_us) {
  auto [c0, c1] = make_inproc_pair(latency_us);
  return {std::make_unique<PartySession>(0, std::move(c0), seed0),
          std::make_unique<PartySession>(1, std::move(c1), seed1)};
}

void run_two_parties(const std::function<void()>& party0, const std::function<void()>& party1) {
  std::exception_ptr err0, err1;
  std::thread t1([&] {
    try {
      party1();
    } catch (...) {
      err1 = std::current_exception();
    }
  });
  try {
    party0();
  } catch (...) {
    err0 = std::current_exception();
  }
  t1.join();
  if (err0) std::rethrow_exception(err0);
  if (err1) std::rethrow_exception(err1);
}

void run_protocol(PartySession& s0, PartySession& s1, const std::function<void()>& party0,
                  const std::function<void()>& party1) {
  std::exception_ptr err0, err1;
  std::thread t1([&] {
    try {
      party1();
    } catch (...) {
      err1 = std::current_exception();
      s1.close();
    }
  });
  try {
    party0();
  } catch (...) {
    err0 = std::current_exception();
    s0.close();
  }
  t1.join();
  if (err0) std::rethrow_exception(err0);
  if (err1) std::rethrow_exception(err1);
}

}  // namespace s3rec
