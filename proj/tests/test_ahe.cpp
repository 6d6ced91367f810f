#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "s3rec/ahe.hpp"

using namespace s3rec;

namespace {

// One 2048-bit pair for the whole binary; keygen is the slow part.
const AheKeyPair& fixture_keypair() {
  static AheKeyPair kp = ahe_keygen(2048, 4242);
  return kp;
}

}  // namespace

TEST_CASE("keygen rejects unsupported sizes") {
  CHECK_THROWS_AS(ahe_keygen(1024, 1), ConfigError);
  CHECK_THROWS_AS(ahe_keygen(4096, 1), ConfigError);
}

TEST_CASE("keygen is deterministic for a fixed seed") {
  AheKeyPair a = ahe_keygen(2048, 99);
  AheKeyPair b = ahe_keygen(2048, 99);
  CHECK(a.pk().n() == b.pk().n());
  CHECK(mpz_sizeinbase(a.pk().n().get_mpz_t(), 2) == 2048);
}

TEST_CASE("3072-bit keys work end to end") {
  AheKeyPair kp = ahe_keygen(3072, 303);
  CHECK(mpz_sizeinbase(kp.pk().n().get_mpz_t(), 2) == 3072);
  RandomStream rng(1);
  CHECK(kp.dec(kp.enc(123456, rng)) == 123456);
  CHECK(kp.dec(ahe_c_add(kp.pk(), kp.enc(40, rng), kp.enc(2, rng))) == 42);
  CHECK(ahe_serialize(kp.pk(), kp.enc(7, rng)).size() == kp.pk().ciphertext_bytes());
}

TEST_CASE("encryption round-trips") {
  const auto& kp = fixture_keypair();
  RandomStream rng(1);
  CHECK(kp.dec(kp.enc(42, rng)) == 42);
  CHECK(kp.dec(kp.enc(0, rng)) == 0);
  CHECK(kp.dec(ahe_enc(kp.pk(), 1, rng)) == 1);

  RandomStream msgs(2);
  for (int i = 0; i < 100; i++) {
    mpz_class m = msgs.uniform_below(kp.pk().n());
    CHECK(kp.dec(kp.enc(m, rng)) == m);
  }
}

TEST_CASE("public and secret-key encryption paths agree") {
  const auto& kp = fixture_keypair();
  // Same randomness stream state produces the same ciphertext bytes.
  RandomStream r1(77), r2(77);
  AheCiphertext via_pk = ahe_enc(kp.pk(), 123456789, r1);
  AheCiphertext via_sk = kp.enc(123456789, r2);
  CHECK(via_pk.value == via_sk.value);
}

TEST_CASE("encryption is randomized") {
  const auto& kp = fixture_keypair();
  RandomStream rng(3);
  AheCiphertext a = kp.enc(5, rng);
  AheCiphertext b = kp.enc(5, rng);
  CHECK(a.value != b.value);
  CHECK(kp.dec(a) == kp.dec(b));
}

TEST_CASE("identical seeds give identical ciphertext bytes") {
  const auto& kp = fixture_keypair();
  RandomStream r1(31337), r2(31337);
  CHECK(ahe_serialize(kp.pk(), kp.enc(7, r1)) == ahe_serialize(kp.pk(), kp.enc(7, r2)));
}

TEST_CASE("plaintext out of range is rejected") {
  const auto& kp = fixture_keypair();
  RandomStream rng(4);
  CHECK_THROWS_AS(kp.enc(-1, rng), RangeError);
  CHECK_THROWS_AS(kp.enc(kp.pk().n(), rng), RangeError);
}

TEST_CASE("ciphertext addition") {
  const auto& kp = fixture_keypair();
  RandomStream rng(5);
  CHECK(kp.dec(ahe_c_add(kp.pk(), kp.enc(3, rng), kp.enc(4, rng))) == 7);
  // adding enc(0) preserves the plaintext
  AheCiphertext x = kp.enc(987654321, rng);
  CHECK(kp.dec(ahe_c_add(kp.pk(), x, kp.enc(0, rng))) == 987654321);

  RandomStream msgs(6);
  for (int i = 0; i < 1000; i++) {
    mpz_class a = msgs.uniform_below(kp.pk().n());
    mpz_class b = msgs.uniform_below(kp.pk().n());
    mpz_class got = kp.dec(ahe_c_add(kp.pk(), kp.enc(a, rng), kp.enc(b, rng)));
    CHECK(got == (a + b) % kp.pk().n());
  }
}

TEST_CASE("c_add rejects mismatched keys") {
  const auto& kp = fixture_keypair();
  AheKeyPair other = ahe_keygen(2048, 77);
  RandomStream rng(7);
  AheCiphertext x = kp.enc(1, rng);
  AheCiphertext y = other.enc(2, rng);
  CHECK_THROWS_AS(ahe_c_add(kp.pk(), x, y), UsageError);
}

TEST_CASE("plaintext multiplication") {
  const auto& kp = fixture_keypair();
  RandomStream rng(8);
  CHECK(kp.dec(ahe_p_mul(kp.pk(), kp.enc(5, rng), 6)) == 30);
  AheCiphertext x = kp.enc(424242, rng);
  CHECK(kp.dec(ahe_p_mul(kp.pk(), x, 1)) == 424242);

  RandomStream msgs(9);
  for (int i = 0; i < 1000; i++) {
    mpz_class a = msgs.uniform_below(kp.pk().n());
    mpz_class k = msgs.uniform_below(kp.pk().n());
    CHECK(kp.dec(ahe_p_mul(kp.pk(), kp.enc(a, rng), k)) == a * k % kp.pk().n());
  }
}

TEST_CASE("homomorphic dot products match the big-integer oracle") {
  const auto& kp = fixture_keypair();
  RandomStream rng(10);
  std::mt19937_64 gen(11);
  for (size_t len : {1, 10, 1000}) {
    std::vector<mpz_class> xs(len), ys(len);
    mpz_class expect = 0;
    for (size_t i = 0; i < len; i++) {
      xs[i] = mpz_class(static_cast<unsigned long>(gen() & 0xffffffffUL));
      ys[i] = mpz_class(static_cast<unsigned long>(gen() & 0xffffffffUL));
      expect += xs[i] * ys[i];
    }
    AheCiphertext acc = kp.enc(0, rng);
    for (size_t i = 0; i < len; i++) {
      acc = ahe_c_add(kp.pk(), acc, ahe_p_mul(kp.pk(), kp.enc(xs[i], rng), ys[i]));
    }
    CHECK(kp.dec(acc) == expect % kp.pk().n());
  }
}

TEST_CASE("lift and lower bridge the ring") {
  CHECK(ahe_lift(RingElement{0}) == 0);
  CHECK(ahe_lift(RingElement{0xffffffffffffffffULL}) == mpz_class("18446744073709551615"));
  std::mt19937_64 gen(12);
  for (int i = 0; i < 10000; i++) {
    RingElement x{gen()};
    CHECK(ahe_lower(ahe_lift(x)) == x);
  }
}

TEST_CASE("lifted product sums lower to the ring-correct value") {
  // m = 100 products of full-width ring values, accumulated in the
  // plaintext space and reduced mod 2^64 at the end.
  std::mt19937_64 gen(13);
  mpz_class acc = 0;
  RingElement ring_acc{0};
  for (int i = 0; i < 100; i++) {
    RingElement x{gen()}, y{gen()};
    acc += ahe_lift(x) * ahe_lift(y);
    ring_acc += x * y;
  }
  CHECK(ahe_lower(acc) == ring_acc);
}

TEST_CASE("ciphertext serialization is fixed-width and round-trips") {
  const auto& kp = fixture_keypair();
  RandomStream rng(14);
  AheCiphertext x = kp.enc(31415926, rng);
  auto bytes = ahe_serialize(kp.pk(), x);
  CHECK(bytes.size() == kp.pk().ciphertext_bytes());
  AheCiphertext back = ahe_deserialize(kp.pk(), bytes);
  CHECK(back.value == x.value);
  // every ciphertext under this key serializes to the same width
  AheCiphertext tiny = kp.enc(0, rng);
  CHECK(ahe_serialize(kp.pk(), tiny).size() == kp.pk().ciphertext_bytes());
}

TEST_CASE("key files round-trip") {
  const auto& kp = fixture_keypair();
  auto dir = std::filesystem::temp_directory_path();
  auto pk_path = (dir / "s3rec_test.pk").string();
  auto sk_path = (dir / "s3rec_test.sk").string();
  write_keypair_files(pk_path, sk_path, kp);
  AheKeyPair back = read_keypair_files(pk_path, sk_path);
  CHECK(back.pk().n() == kp.pk().n());
  RandomStream rng(15);
  CHECK(back.dec(back.enc(4711, rng)) == 4711);
  std::filesystem::remove(pk_path);
  std::filesystem::remove(sk_path);
}

TEST_CASE("public key serialization round-trips") {
  const auto& kp = fixture_keypair();
  auto bytes = kp.pk().serialize();
  AhePublicKey back = AhePublicKey::deserialize(bytes);
  CHECK(back.n() == kp.pk().n());
  CHECK(back.bits() == 2048);
  CHECK(back.fingerprint() == kp.pk().fingerprint());
}
