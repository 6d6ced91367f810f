#include "s3rec/pir.hpp"

#include <cstring>

namespace s3rec {

namespace {

void check_recursion(int d) {
  if (d != 1) {
    throw ConfigError("PIR recursion level d=" + std::to_string(d) +
                      " unsupported (only d=1 is implemented)");
  }
}

void put_u32_raw(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64_raw(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; i++) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

mpz_class chunk_value(std::span<const uint8_t> entry, size_t chunk, size_t chunk_size) {
  size_t begin = chunk * chunk_size;
  size_t len = std::min(chunk_size, entry.size() - begin);
  mpz_class v;
  mpz_import(v.get_mpz_t(), len, 1, 1, 0, 0, entry.data() + begin);
  return v;
}

}  // namespace

PirClient::PirClient(size_t count, size_t entry_size, int recursion_d)
    : backend_(PirBackend::Plain), count_(count), entry_size_(entry_size) {
  check_recursion(recursion_d);
  if (count == 0) throw UsageError("PIR database count must be >= 1");
}

PirClient::PirClient(const AheKeyPair* key, size_t count, size_t entry_size, int recursion_d)
    : backend_(PirBackend::AheLinear), key_(key), count_(count), entry_size_(entry_size) {
  check_recursion(recursion_d);
  if (count == 0) throw UsageError("PIR database count must be >= 1");
  if (key == nullptr) throw UsageError("ahe-linear backend needs a client key pair");
}

std::vector<uint8_t> PirClient::make_query(size_t index, RandomStream& rng) {
  if (index >= count_) {
    throw RangeError("PIR index " + std::to_string(index) + " out of range (count " +
                     std::to_string(count_) + ")");
  }
  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(backend_));
  if (backend_ == PirBackend::Plain) {
    put_u64_raw(out, index);
  } else {
    // Self-contained query: the client's public key followed by `count`
    // indicator ciphertexts.
    auto pk_bytes = key_->pk().serialize();
    put_u32_raw(out, static_cast<uint32_t>(pk_bytes.size()));
    out.insert(out.end(), pk_bytes.begin(), pk_bytes.end());
    put_u32_raw(out, static_cast<uint32_t>(count_));
    for (size_t a = 0; a < count_; a++) {
      AheCiphertext c = key_->enc(a == index ? 1 : 0, rng);
      ahe_serialize_into(key_->pk(), c, out);
    }
  }
  pending_ = true;
  return out;
}

std::vector<uint8_t> pir_respond(const PirDatabase& db, std::span<const uint8_t> query) {
  if (query.empty()) throw ProtocolError("empty PIR query");
  auto backend = static_cast<PirBackend>(query[0]);
  std::vector<uint8_t> out;
  out.push_back(query[0]);
  if (backend == PirBackend::Plain) {
    if (query.size() != 9) throw ProtocolError("malformed plain PIR query");
    uint64_t index = 0;
    for (int i = 0; i < 8; i++) index |= static_cast<uint64_t>(query[1 + i]) << (8 * i);
    if (index >= db.count()) throw ProtocolError("PIR query index out of range");
    const auto& entry = db.entries[index];
    out.insert(out.end(), entry.begin(), entry.end());
    return out;
  }
  if (backend != PirBackend::AheLinear) throw ProtocolError("unknown PIR backend tag");

  size_t pos = 1;
  auto need = [&](size_t n) {
    if (pos + n > query.size()) throw ProtocolError("truncated PIR query");
  };
  need(4);
  uint32_t pk_len = 0;
  for (int i = 0; i < 4; i++) pk_len |= static_cast<uint32_t>(query[pos + i]) << (8 * i);
  pos += 4;
  need(pk_len);
  AhePublicKey pk = AhePublicKey::deserialize(query.subspan(pos, pk_len));
  pos += pk_len;
  need(4);
  uint32_t count = 0;
  for (int i = 0; i < 4; i++) count |= static_cast<uint32_t>(query[pos + i]) << (8 * i);
  pos += 4;
  if (count != db.count()) throw ProtocolError("PIR query length disagrees with database");
  size_t ct_bytes = pk.ciphertext_bytes();
  need(static_cast<size_t>(count) * ct_bytes);
  std::vector<AheCiphertext> indicator(count);
  for (size_t a = 0; a < count; a++) {
    indicator[a] = ahe_deserialize(pk, query.subspan(pos, ct_bytes));
    pos += ct_bytes;
  }
  if (pos != query.size()) throw ProtocolError("trailing bytes in PIR query");

  size_t chunk_size = pir_chunk_size(pk.bits());
  size_t chunks = (db.entry_size + chunk_size - 1) / chunk_size;
  put_u32_raw(out, static_cast<uint32_t>(chunks));
  for (size_t c = 0; c < chunks; c++) {
    // Homomorphic dot product of the indicator with this chunk column.
    AheCiphertext acc{mpz_class(1), pk.fingerprint()};  // enc(0) with unit randomness
    for (size_t a = 0; a < db.count(); a++) {
      mpz_class v = chunk_value(db.entries[a], c, chunk_size);
      if (v == 0) continue;  // enc(x)^0 is the identity
      acc = ahe_c_add(pk, acc, ahe_p_mul(pk, indicator[a], v));
    }
    ahe_serialize_into(pk, acc, out);
  }
  return out;
}

std::vector<uint8_t> PirClient::extract(std::span<const uint8_t> response) {
  if (!pending_) throw UsageError("extract without an outstanding query");
  pending_ = false;
  if (response.empty() || response[0] != static_cast<uint8_t>(backend_)) {
    throw ProtocolError("PIR response backend tag mismatch");
  }
  if (backend_ == PirBackend::Plain) {
    if (response.size() != 1 + entry_size_) throw ProtocolError("plain PIR response size mismatch");
    return std::vector<uint8_t>(response.begin() + 1, response.end());
  }
  size_t chunk_size = pir_chunk_size(key_->pk().bits());
  size_t chunks = (entry_size_ + chunk_size - 1) / chunk_size;
  size_t ct_bytes = key_->pk().ciphertext_bytes();
  if (response.size() != 5 + chunks * ct_bytes) {
    throw ProtocolError("ahe-linear PIR response size mismatch");
  }
  uint32_t announced = 0;
  for (int i = 0; i < 4; i++) announced |= static_cast<uint32_t>(response[1 + i]) << (8 * i);
  if (announced != chunks) throw ProtocolError("PIR response chunk count mismatch");
  std::vector<uint8_t> entry(entry_size_);
  size_t pos = 5;
  for (size_t c = 0; c < chunks; c++) {
    mpz_class v = key_->dec(ahe_deserialize(key_->pk(), response.subspan(pos, ct_bytes)));
    pos += ct_bytes;
    size_t begin = c * chunk_size;
    size_t len = std::min(chunk_size, entry_size_ - begin);
    size_t vbytes = v == 0 ? 0 : (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
    if (vbytes > len) throw ProtocolError("PIR chunk decrypts outside its byte range");
    if (vbytes > 0) {
      size_t cnt = 0;
      mpz_export(entry.data() + begin + (len - vbytes), &cnt, 1, 1, 0, 0, v.get_mpz_t());
    }
  }
  return entry;
}

}  // namespace s3rec
