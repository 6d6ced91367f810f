#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "s3rec/pir.hpp"

using namespace s3rec;

namespace {

const AheKeyPair& client_key() {
  static AheKeyPair kp = ahe_keygen(2048, 8888);
  return kp;
}

std::vector<uint8_t> u64_blob(uint64_t v) {
  std::vector<uint8_t> b(8);
  for (int i = 0; i < 8; i++) b[i] = static_cast<uint8_t>(v >> (8 * i));
  return b;
}

PirDatabase random_db(size_t count, size_t entry_size, std::mt19937_64& rng) {
  std::vector<std::vector<uint8_t>> blobs(count);
  for (auto& b : blobs) {
    b.resize(entry_size);
    for (auto& byte : b) byte = static_cast<uint8_t>(rng());
  }
  return PirDatabase::from_blobs(std::move(blobs));
}

}  // namespace

TEST_CASE("plain query is the 8-byte index") {
  PirClient client(4, 8);
  RandomStream rng(1);
  auto q = client.make_query(2, rng);
  REQUIRE(q.size() == 9);
  CHECK(q[0] == static_cast<uint8_t>(PirBackend::Plain));
  CHECK(q[1] == 2);
  for (int i = 2; i < 9; i++) CHECK(q[i] == 0);
}

TEST_CASE("plain backend retrieves the selected blob") {
  auto db = PirDatabase::from_blobs({u64_blob(10), u64_blob(20), u64_blob(30), u64_blob(40)});
  PirClient client(4, 8);
  RandomStream rng(2);
  auto r = pir_respond(db, client.make_query(2, rng));
  CHECK(client.extract(r) == u64_blob(30));
}

TEST_CASE("single-entry database") {
  auto db = PirDatabase::from_blobs({u64_blob(77)});
  PirClient client(1, 8);
  RandomStream rng(3);
  auto r = pir_respond(db, client.make_query(0, rng));
  CHECK(client.extract(r) == u64_blob(77));
}

TEST_CASE("index out of range is rejected at query time") {
  PirClient client(4, 8);
  RandomStream rng(4);
  CHECK_THROWS_AS(client.make_query(4, rng), RangeError);
}

TEST_CASE("recursion beyond d=1 is an explicit unsupported error") {
  CHECK_THROWS_AS(PirClient(4, 8, 2), ConfigError);
  CHECK_THROWS_AS(PirClient(&client_key(), 4, 8, 3), ConfigError);
}

TEST_CASE("ahe-linear query is count fresh ciphertexts, indicator decrypts to e_i") {
  const auto& kp = client_key();
  size_t count = 6;
  PirClient client(&kp, count, 8);
  RandomStream rng(5);
  auto q = client.make_query(3, rng);

  // layout: tag | pk_len | pk | count | count * ct
  size_t ct_bytes = kp.pk().ciphertext_bytes();
  auto pk_bytes = kp.pk().serialize();
  REQUIRE(q.size() == 1 + 4 + pk_bytes.size() + 4 + count * ct_bytes);
  size_t pos = 1 + 4 + pk_bytes.size() + 4;
  for (size_t a = 0; a < count; a++) {
    auto ct = ahe_deserialize(kp.pk(), std::span<const uint8_t>(q).subspan(pos, ct_bytes));
    pos += ct_bytes;
    CHECK(kp.dec(ct) == (a == 3 ? 1 : 0));
  }
}

TEST_CASE("no plaintext index bytes appear in an ahe-linear query") {
  const auto& kp = client_key();
  PirClient client(&kp, 16, 8);
  RandomStream rng(6);
  size_t index = 11;
  auto q = client.make_query(index, rng);
  // The plain encoding would contain the index as 8 little-endian bytes.
  std::vector<uint8_t> needle(8);
  for (int i = 0; i < 8; i++) needle[i] = static_cast<uint8_t>(index >> (8 * i));
  auto it = std::search(q.begin() + 1, q.end(), needle.begin(), needle.end());
  CHECK(it == q.end());
}

TEST_CASE("response size is independent of the queried index") {
  std::mt19937_64 gen(7);
  auto db = random_db(16, 24, gen);
  RandomStream rng(8);
  PirClient plain(16, 24);
  size_t plain_size = pir_respond(db, plain.make_query(0, rng)).size();
  const auto& kp = client_key();
  PirClient ahe(&kp, 16, 24);
  size_t ahe_size = pir_respond(db, ahe.make_query(0, rng)).size();
  for (size_t i : {3UL, 9UL, 15UL}) {
    CHECK(pir_respond(db, plain.make_query(i, rng)).size() == plain_size);
    CHECK(pir_respond(db, ahe.make_query(i, rng)).size() == ahe_size);
  }
}

TEST_CASE("exhaustive correctness on a 64-entry database, both backends") {
  std::mt19937_64 gen(9);
  auto db = random_db(64, 8, gen);
  RandomStream rng(10);

  PirClient plain(64, 8);
  for (size_t i = 0; i < 64; i++) {
    auto r = pir_respond(db, plain.make_query(i, rng));
    CHECK(plain.extract(r) == db.entries[i]);
  }

  const auto& kp = client_key();
  PirClient ahe(&kp, 64, 8);
  for (size_t i = 0; i < 64; i++) {
    auto r = pir_respond(db, ahe.make_query(i, rng));
    CHECK(ahe.extract(r) == db.entries[i]);
  }
}

TEST_CASE("correctness property over random databases up to 256 entries") {
  std::mt19937_64 gen(11);
  RandomStream rng(12);
  for (int trial = 0; trial < 30; trial++) {
    size_t count = 1 + gen() % 256;
    size_t entry_size = 1 + gen() % 40;
    auto db = random_db(count, entry_size, gen);
    PirClient client(count, entry_size);
    for (size_t i = 0; i < count; i++) {
      auto r = pir_respond(db, client.make_query(i, rng));
      CHECK(client.extract(r) == db.entries[i]);
    }
  }
  // ahe-linear at the 256-entry boundary (spot indices; the exhaustive
  // sweep lives in the acceptance suite)
  auto db = random_db(256, 16, gen);
  PirClient client(&client_key(), 256, 16);
  for (size_t i : {0UL, 131UL, 255UL}) {
    auto r = pir_respond(db, client.make_query(i, rng));
    CHECK(client.extract(r) == db.entries[i]);
  }
}

TEST_CASE("blobs that are ciphertexts under another key round-trip bit-exactly") {
  // The sensitive protocol stores P_0's ciphertexts as PIR blobs; retrieval
  // must not disturb them.
  AheKeyPair matrix_key = ahe_keygen(2048, 1313);
  const auto& kp = client_key();
  RandomStream rng(13);
  std::vector<std::vector<uint8_t>> blobs;
  std::vector<mpz_class> plain;
  for (int a = 0; a < 4; a++) {
    mpz_class man = 1000 + a;
    plain.push_back(man);
    blobs.push_back(ahe_serialize(matrix_key.pk(), matrix_key.enc(man, rng)));
  }
  size_t entry_size = blobs[0].size();
  auto db = PirDatabase::from_blobs(std::move(blobs));

  PirClient client(&kp, 4, entry_size);
  for (size_t i = 0; i < 4; i++) {
    auto blob = client.extract(pir_respond(db, client.make_query(i, rng)));
    auto ct = ahe_deserialize(matrix_key.pk(), blob);
    CHECK(matrix_key.dec(ct) == plain[i]);
  }
}

TEST_CASE("600-byte blobs chunk and reassemble losslessly") {
  std::mt19937_64 gen(14);
  auto db = random_db(5, 600, gen);
  const auto& kp = client_key();
  // 2048-bit key -> 255-byte chunks -> 3 chunks per entry
  CHECK(pir_chunk_size(kp.pk().bits()) == 255);
  PirClient client(&kp, 5, 600);
  RandomStream rng(15);
  for (size_t i = 0; i < 5; i++) {
    auto r = pir_respond(db, client.make_query(i, rng));
    CHECK(client.extract(r) == db.entries[i]);
  }
}

TEST_CASE("malformed queries are protocol errors") {
  std::mt19937_64 gen(16);
  auto db = random_db(4, 8, gen);
  CHECK_THROWS_AS(pir_respond(db, std::vector<uint8_t>{}), ProtocolError);
  CHECK_THROWS_AS(pir_respond(db, std::vector<uint8_t>{9, 1, 2}), ProtocolError);
  // plain query with an out-of-range index
  std::vector<uint8_t> bad{1, 9, 0, 0, 0, 0, 0, 0, 0};
  CHECK_THROWS_AS(pir_respond(db, bad), ProtocolError);
}
