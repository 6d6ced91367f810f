#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "s3rec/ahe.hpp"
#include "s3rec/errors.hpp"

namespace s3rec {

// Single-server PIR behind the Query/Response/Extract interface. Two
// interchangeable backends:
//   plain      — the query is the index in the clear. Insecure by
//                construction; a functional baseline and the communication
//                lower bound.
//   ahe-linear — the query is a vector of `count` ciphertexts encrypting
//                the indicator of the wanted index under the client's own
//                key; the server answers with homomorphic dot products per
//                entry chunk and learns nothing beyond `count`.
// The backend tag is the first byte of every query/response payload.
enum class PirBackend : uint8_t { Plain = 1, AheLinear = 2 };

struct PirDatabase {
  size_t entry_size = 0;
  std::vector<std::vector<uint8_t>> entries;

  static PirDatabase from_blobs(std::vector<std::vector<uint8_t>> blobs) {
    if (blobs.empty()) throw UsageError("PIR database needs at least one entry");
    PirDatabase db;
    db.entry_size = blobs[0].size();
    for (const auto& b : blobs) {
      if (b.size() != db.entry_size) throw UsageError("PIR entries must share one size");
    }
    db.entries = std::move(blobs);
    return db;
  }

  size_t count() const { return entries.size(); }
};

// Per-entry chunking for the ahe-linear backend: each chunk must fit the
// plaintext space, so one byte of headroom below the key width.
inline size_t pir_chunk_size(int key_bits) { return static_cast<size_t>(key_bits) / 8 - 1; }

class PirClient {
 public:
  // Plain backend.
  PirClient(size_t count, size_t entry_size, int recursion_d = 1);
  // ahe-linear backend; the key pair is the client's own (long-lived across
  // queries) and must be distinct from any key the blobs are encrypted
  // under.
  PirClient(const AheKeyPair* key, size_t count, size_t entry_size, int recursion_d = 1);

  PirBackend backend() const { return backend_; }

  // Serialized query for index i (sets the outstanding-query state).
  std::vector<uint8_t> make_query(size_t index, RandomStream& rng);
  // Recovers DB_i from a response to the outstanding query.
  std::vector<uint8_t> extract(std::span<const uint8_t> response);

 private:
  PirBackend backend_;
  const AheKeyPair* key_ = nullptr;
  size_t count_;
  size_t entry_size_;
  bool pending_ = false;
};

// Stateless server side.
std::vector<uint8_t> pir_respond(const PirDatabase& db, std::span<const uint8_t> query);

}  // namespace s3rec
