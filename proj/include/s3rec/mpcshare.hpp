#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "s3rec/ring.hpp"
#include "s3rec/transport.hpp"

namespace s3rec {

// One party's additive share of a ring value. The scale tag tracks the
// fixed-point exponent (0 for plain integers, f after encoding, 2f after a
// product) so mismatched operands are caught at the API boundary.
struct Share {
  int owner = 0;
  RingElement value;
  uint32_t scale = 0;
};

inline Share share_add(const Share& x, const Share& y) {
  if (x.scale != y.scale) throw UsageError("share add: scale mismatch");
  if (x.owner != y.owner) throw UsageError("share add: owner mismatch");
  return Share{x.owner, x.value + y.value, x.scale};
}

inline Share share_sub(const Share& x, const Share& y) {
  if (x.scale != y.scale) throw UsageError("share sub: scale mismatch");
  if (x.owner != y.owner) throw UsageError("share sub: owner mismatch");
  return Share{x.owner, x.value - y.value, x.scale};
}

// Multiplying a share by a public constant is local.
inline Share share_scale(const Share& x, RingElement c) {
  return Share{x.owner, x.value * c, x.scale};
}

struct BeaverTriple {
  RingElement a, b, c;
};

// Consume-once store of multiplication triples. Reuse of correlated
// randomness is a protocol-breaking bug, so the store only hands a triple
// out once and throws when drained.
class TripleStore {
 public:
  TripleStore() = default;
  explicit TripleStore(std::vector<BeaverTriple> triples) : triples_(std::move(triples)) {}

  BeaverTriple take() {
    if (next_ >= triples_.size()) throw UsageError("triple store exhausted");
    return triples_[next_++];
  }
  size_t remaining() const { return triples_.size() - next_; }
  size_t consumed() const { return next_; }
  size_t size() const { return triples_.size(); }
  const std::vector<BeaverTriple>& raw() const { return triples_; }

 private:
  std::vector<BeaverTriple> triples_;
  size_t next_ = 0;
};

// Trusted-dealer generation: both parties' stores co-generated from one seed.
// Benchmark/in-process mode keeps them local; distribute_triples below makes
// the offline bytes measurable on a channel.
std::pair<TripleStore, TripleStore> dealer_generate(size_t count, uint64_t seed);

// Sends a store's triples to the peer (24 bytes each, offline phase).
void send_triples(PartySession& session, const TripleStore& store);
TripleStore recv_triples(PartySession& session);

// Triple store file format: "S3TR" magic, count as 8-byte LE, then
// count x 24 bytes of (a, b, c), one file per party.
void write_triple_file(const std::string& path, const TripleStore& store);
TripleStore read_triple_file(const std::string& path);

// Shr: the caller keeps x - r and sends uniform r to the peer (input phase).
Share shr(PartySession& session, RingElement x, uint32_t scale = 0);
Share shr_recv(PartySession& session, uint32_t scale = 0);
std::vector<Share> shr_batch(PartySession& session, std::span<const RingElement> xs,
                             uint32_t scale = 0, Phase phase = Phase::Input);
std::vector<Share> shr_recv_batch(PartySession& session, size_t count, uint32_t scale = 0);

// Rec: the non-target party sends its share (output phase); the target
// returns the reconstructed value, the other party gets nothing.
std::optional<RingElement> rec(PartySession& session, const Share& s, int to);
std::optional<std::vector<RingElement>> rec_batch(PartySession& session,
                                                  std::span<const Share> shares, int to);

// Beaver multiplication. Each party opens (x - a, y - b); one OPEN_BATCH of
// two ring elements per party per multiplication, compute phase. The result
// carries scale = x.scale + y.scale; the caller truncates when needed.
Share mul(PartySession& session, const Share& x, const Share& y, TripleStore& triples);

// Batched variant: all openings coalesced into one OPEN_BATCH frame per
// party (payload 16 * n bytes, identical to unbatched accounting).
std::vector<Share> mul_batch(PartySession& session, std::span<const Share> xs,
                             std::span<const Share> ys, TripleStore& triples);

}  // namespace s3rec
