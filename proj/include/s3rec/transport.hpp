#pragma once

#include <array>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "s3rec/errors.hpp"
#include "s3rec/ring.hpp"

namespace s3rec {

// Accounting phases. Offline mirrors the dealer/provisioning traffic; the
// online side is subdivided so per-protocol byte formulas can be asserted
// phase by phase.
enum class Phase : uint8_t { Offline = 0, Input = 1, Compute = 2, Output = 3 };
inline constexpr int kNumPhases = 4;
inline constexpr const char* kPhaseNames[kNumPhases] = {"offline", "input", "compute", "output"};

enum class MsgType : uint8_t {
  ShareBatch = 1,
  OpenBatch = 2,
  AheCiphertextBatch = 3,
  PirQuery = 4,
  PirResponse = 5,
  Control = 6,
};
inline constexpr int kNumMsgTypes = 6;

inline constexpr size_t kFrameHeaderBytes = 5;  // 4-byte LE length + 1-byte type

struct FrameLogEntry {
  Phase phase;
  MsgType type;
  uint32_t payload_len;
  friend bool operator==(const FrameLogEntry&, const FrameLogEntry&) = default;
};

// Per-session traffic counters. bytes_sent includes the 5-byte frame header;
// payload_sent does not. Protocol byte formulas (16*k*m^2 and friends) are
// stated over payload bytes.
struct ChannelStats {
  std::array<uint64_t, kNumPhases> bytes_sent{};
  std::array<uint64_t, kNumPhases> payload_sent{};
  std::array<uint64_t, kNumMsgTypes + 1> frames_sent{};  // indexed by msg_type value
  uint64_t bytes_received = 0;
  std::array<uint64_t, kNumMsgTypes + 1> frames_received{};
  std::vector<FrameLogEntry> sent_frames;

  uint64_t total_bytes_sent() const {
    uint64_t s = 0;
    for (auto b : bytes_sent) s += b;
    return s;
  }
  uint64_t total_payload_sent() const {
    uint64_t s = 0;
    for (auto b : payload_sent) s += b;
    return s;
  }
  uint64_t sent(Phase p) const { return bytes_sent[static_cast<size_t>(p)]; }
  uint64_t payload(Phase p) const { return payload_sent[static_cast<size_t>(p)]; }
};

// Byte-stream endpoint. write() must deliver all bytes; read_upto() blocks
// until at least one byte is available and returns 0 only at end of stream.
class Channel {
 public:
  virtual ~Channel() = default;
  virtual void write(std::span<const uint8_t> data) = 0;
  virtual size_t read_upto(uint8_t* out, size_t max) = 0;
  virtual void close() = 0;
};

// In-process duplex pipe: two byte queues shared by the two endpoints.
// An optional artificial latency (applied per write) approximates a LAN.
std::pair<std::unique_ptr<Channel>, std::unique_ptr<Channel>> make_inproc_pair(
    unsigned latency_us = 0);

// TCP backend. listen_tcp waits for one peer (failing after timeout_ms);
// connect_tcp retries briefly so the two processes need not start in
// lockstep.
std::unique_ptr<Channel> listen_tcp(const std::string& host, uint16_t port,
                                    int timeout_ms = 30000);
std::unique_ptr<Channel> connect_tcp(const std::string& host, uint16_t port,
                                     int timeout_ms = 10000);

// One party's live view of a two-party protocol run.
class PartySession {
 public:
  PartySession(int party_id, std::unique_ptr<Channel> channel, uint64_t rng_seed)
      : party_id_(party_id), channel_(std::move(channel)), rng_(rng_seed) {
    if (party_id != 0 && party_id != 1) throw UsageError("party_id must be 0 or 1");
  }

  int party_id() const { return party_id_; }
  int peer_id() const { return 1 - party_id_; }
  ChannelStats& stats() { return stats_; }
  const ChannelStats& stats() const { return stats_; }

  void send(Phase phase, MsgType type, std::span<const uint8_t> payload);
  std::pair<MsgType, std::vector<uint8_t>> recv();
  // recv that insists on a particular frame type.
  std::vector<uint8_t> recv_expect(MsgType expected);

  // Uniform ring element from the session RNG.
  RingElement random_ring() { return RingElement{rng_()}; }
  std::mt19937_64& rng() { return rng_; }

  void close() { channel_->close(); }

 private:
  int party_id_;
  std::unique_ptr<Channel> channel_;
  ChannelStats stats_;
  std::mt19937_64 rng_;
};

// Convenience: a connected pair of in-process sessions for tests and
// single-process runs.
std::pair<std::unique_ptr<PartySession>, std::unique_ptr<PartySession>> make_inproc_sessions(
    uint64_t seed0 = 1, uint64_t seed1 = 2, unsigned latency_us = 0);

// Runs the two party closures on separate threads and rethrows the first
// failure after both have finished.
void run_two_parties(const std::function<void()>& party0, const std::function<void()>& party1);

// Same, but closes a party's channel when its closure throws so the peer's
// blocking recv fails fast instead of deadlocking.
void run_protocol(PartySession& s0, PartySession& s1, const std::function<void()>& party0,
                  const std::function<void()>& party1);

// Little-endian payload building helpers shared by the protocol modules.
inline void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}
inline void put_ring(std::vector<uint8_t>& out, RingElement e) { put_u64(out, e.v); }

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; i++) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; i++) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  RingElement ring() { return RingElement{u64()}; }
  std::span<const uint8_t> bytes(size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(size_t n) const {
    if (pos_ + n > data_.size()) throw ProtocolError("payload shorter than expected");
  }
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

}  // namespace s3rec
