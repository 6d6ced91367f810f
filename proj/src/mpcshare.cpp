#include "s3rec/mpcshare.hpp"

#include <cstdio>
#include <cstring>
#include <random>

namespace s3rec {

std::pair<TripleStore, TripleStore> dealer_generate(size_t count, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<BeaverTriple> t0(count), t1(count);
  for (size_t i = 0; i < count; i++) {
    RingElement a{rng()}, b{rng()};
    RingElement c = a * b;
    RingElement a0{rng()}, b0{rng()}, c0{rng()};
    t0[i] = {a0, b0, c0};
    t1[i] = {a - a0, b - b0, c - c0};
  }
  return {TripleStore(std::move(t0)), TripleStore(std::move(t1))};
}

void send_triples(PartySession& session, const TripleStore& store) {
  std::vector<uint8_t> payload;
  payload.reserve(store.size() * 24);
  for (const auto& t : store.raw()) {
    put_ring(payload, t.a);
    put_ring(payload, t.b);
    put_ring(payload, t.c);
  }
  session.send(Phase::Offline, MsgType::ShareBatch, payload);
}

TripleStore recv_triples(PartySession& session) {
  auto payload = session.recv_expect(MsgType::ShareBatch);
  if (payload.size() % 24 != 0) throw ProtocolError("triple batch not a multiple of 24 bytes");
  ByteReader r(payload);
  std::vector<BeaverTriple> triples(payload.size() / 24);
  for (auto& t : triples) {
    t.a = r.ring();
    t.b = r.ring();
    t.c = r.ring();
  }
  return TripleStore(std::move(triples));
}

void write_triple_file(const std::string& path, const TripleStore& store) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw UsageError("cannot open " + path + " for writing");
  std::vector<uint8_t> buf;
  buf.insert(buf.end(), {'S', '3', 'T', 'R'});
  put_u64(buf, store.size());
  for (const auto& t : store.raw()) {
    put_ring(buf, t.a);
    put_ring(buf, t.b);
    put_ring(buf, t.c);
  }
  size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (written != buf.size()) throw UsageError("short write to " + path);
}

TripleStore read_triple_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw UsageError("cannot open " + path);
  std::vector<uint8_t> buf;
  uint8_t chunk[4096];
  size_t n;
  while ((n = std::fread(chunk, 1, sizeof(chunk), f)) > 0) buf.insert(buf.end(), chunk, chunk + n);
  std::fclose(f);
  if (buf.size() < 12 || std::memcmp(buf.data(), "S3TR", 4) != 0) {
    throw ParseError(path + ": not a triple store file");
  }
  ByteReader r(std::span<const uint8_t>(buf).subspan(4));
  uint64_t count = r.u64();
  if (r.remaining() != count * 24) throw ParseError(path + ": triple count disagrees with size");
  std::vector<BeaverTriple> triples(count);
  for (auto& t : triples) {
    t.a = r.ring();
    t.b = r.ring();
    t.c = r.ring();
  }
  return TripleStore(std::move(triples));
}

Share shr(PartySession& session, RingElement x, uint32_t scale) {
  return shr_batch(session, std::span<const RingElement>(&x, 1), scale)[0];
}

Share shr_recv(PartySession& session, uint32_t scale) {
  return shr_recv_batch(session, 1, scale)[0];
}

std::vector<Share> shr_batch(PartySession& session, std::span<const RingElement> xs,
                             uint32_t scale, Phase phase) {
  std::vector<uint8_t> payload;
  payload.reserve(xs.size() * 8);
  std::vector<Share> mine(xs.size());
  for (size_t i = 0; i < xs.size(); i++) {
    RingElement r = session.random_ring();
    mine[i] = Share{session.party_id(), xs[i] - r, scale};
    put_ring(payload, r);
  }
  session.send(phase, MsgType::ShareBatch, payload);
  return mine;
}

std::vector<Share> shr_recv_batch(PartySession& session, size_t count, uint32_t scale) {
  auto payload = session.recv_expect(MsgType::ShareBatch);
  if (payload.size() != count * 8) {
    throw ProtocolError("share batch size mismatch: expected " + std::to_string(count * 8) +
                        " bytes, got " + std::to_string(payload.size()));
  }
  ByteReader r(payload);
  std::vector<Share> mine(count);
  for (auto& s : mine) s = Share{session.party_id(), r.ring(), scale};
  return mine;
}

std::optional<RingElement> rec(PartySession& session, const Share& s, int to) {
  auto v = rec_batch(session, std::span<const Share>(&s, 1), to);
  if (!v) return std::nullopt;
  return (*v)[0];
}

std::optional<std::vector<RingElement>> rec_batch(PartySession& session,
                                                  std::span<const Share> shares, int to) {
  if (session.party_id() != to) {
    std::vector<uint8_t> payload;
    payload.reserve(shares.size() * 8);
    for (const auto& s : shares) put_ring(payload, s.value);
    session.send(Phase::Output, MsgType::OpenBatch, payload);
    return std::nullopt;
  }
  auto payload = session.recv_expect(MsgType::OpenBatch);
  if (payload.size() != shares.size() * 8) throw ProtocolError("rec batch size mismatch");
  ByteReader r(payload);
  std::vector<RingElement> out(shares.size());
  for (size_t i = 0; i < shares.size(); i++) out[i] = shares[i].value + r.ring();
  return out;
}

Share mul(PartySession& session, const Share& x, const Share& y, TripleStore& triples) {
  return mul_batch(session, std::span<const Share>(&x, 1), std::span<const Share>(&y, 1),
                   triples)[0];
}

std::vector<Share> mul_batch(PartySession& session, std::span<const Share> xs,
                             std::span<const Share> ys, TripleStore& triples) {
  if (xs.size() != ys.size()) throw UsageError("mul batch: operand count mismatch");
  size_t n = xs.size();
  if (n == 0) return {};
  uint32_t out_scale = xs[0].scale + ys[0].scale;
  std::vector<BeaverTriple> used(n);
  std::vector<uint8_t> payload;
  payload.reserve(n * 16);
  for (size_t i = 0; i < n; i++) {
    if (xs[i].scale != xs[0].scale || ys[i].scale != ys[0].scale) {
      throw UsageError("mul batch: inconsistent scales");
    }
    used[i] = triples.take();
    put_ring(payload, xs[i].value - used[i].a);  // share of d = x - a
    put_ring(payload, ys[i].value - used[i].b);  // share of e = y - b
  }
  // Party 0 sends first; party 1 receives, then replies.
  std::vector<uint8_t> peer;
  if (session.party_id() == 0) {
    session.send(Phase::Compute, MsgType::OpenBatch, payload);
    peer = session.recv_expect(MsgType::OpenBatch);
  } else {
    peer = session.recv_expect(MsgType::OpenBatch);
    session.send(Phase::Compute, MsgType::OpenBatch, payload);
  }
  if (peer.size() != n * 16) throw ProtocolError("open batch size mismatch");
  ByteReader mine(payload), theirs(peer);
  std::vector<Share> out(n);
  for (size_t i = 0; i < n; i++) {
    RingElement d = mine.ring() + theirs.ring();
    RingElement e = mine.ring() + theirs.ring();
    // z_b = c_b + d*b_b + e*a_b (+ d*e at party 0)
    RingElement z = used[i].c + d * used[i].b + e * used[i].a;
    if (session.party_id() == 0) z += d * e;
    out[i] = Share{session.party_id(), z, out_scale};
  }
  return out;
}

}  // namespace s3rec
