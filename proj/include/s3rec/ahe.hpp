#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s3rec/errors.hpp"
#include "s3rec/ring.hpp"

namespace s3rec {

// Seedable big-integer randomness. Seeded streams make test transcripts
// reproducible; default construction draws entropy from the OS.
class RandomStream {
 public:
  RandomStream();                       // entropy-seeded
  explicit RandomStream(uint64_t seed);  // deterministic

  mpz_class uniform_below(const mpz_class& bound);  // uniform in [0, bound)
  mpz_class uniform_bits(size_t bits);              // uniform in [0, 2^bits)

 private:
  gmp_randclass rng_;
};

class AhePublicKey {
 public:
  AhePublicKey() = default;
  AhePublicKey(mpz_class n, int bits);

  const mpz_class& n() const { return n_; }
  const mpz_class& n_squared() const { return n2_; }
  int bits() const { return bits_; }
  uint64_t fingerprint() const { return fingerprint_; }
  // Serialized ciphertext width: 4-byte LE length prefix + 2*bits/8 bytes
  // of big-endian magnitude, zero-padded so every ciphertext is the same
  // size on the wire.
  size_t ciphertext_bytes() const { return 4 + 2 * static_cast<size_t>(bits_) / 8; }

  std::vector<uint8_t> serialize() const;
  static AhePublicKey deserialize(std::span<const uint8_t> data);

 private:
  mpz_class n_, n2_;
  int bits_ = 0;
  uint64_t fingerprint_ = 0;
};

// Factorization-derived secret key with the usual CRT precomputations for
// fast decryption (exponent p-1 / q-1 instead of lambda) and a fast
// encryption path available to the key owner.
class AheSecretKey {
 public:
  AheSecretKey() = default;
  AheSecretKey(const mpz_class& p, const mpz_class& q);

  const mpz_class& p() const { return p_; }
  const mpz_class& q() const { return q_; }

  std::vector<uint8_t> serialize() const;
  static AheSecretKey deserialize(std::span<const uint8_t> data);

 private:
  friend class AheKeyPair;
  mpz_class p_, q_;
  mpz_class p2_, q2_;       // p^2, q^2
  mpz_class hp_, hq_;       // L_p(g^{p-1} mod p^2)^-1 mod p and the q twin
  mpz_class q2_inv_p2_;     // (q^2)^-1 mod p^2, Garner recombination
  mpz_class q_inv_p_;       // q^-1 mod p
  mpz_class n_mod_ord_p2_;  // n mod p(p-1), shortened encryption exponent
  mpz_class n_mod_ord_q2_;
};

struct AheCiphertext {
  mpz_class value;          // element of Z_{n^2}
  uint64_t key_fingerprint = 0;
};

class AheKeyPair {
 public:
  AheKeyPair() = default;
  AheKeyPair(AhePublicKey pk, AheSecretKey sk);

  const AhePublicKey& pk() const { return pk_; }
  const AheSecretKey& sk() const { return sk_; }

  // CRT-accelerated encryption; only the key owner can use it. Produces
  // the same distribution as the public-key path.
  AheCiphertext enc(const mpz_class& m, RandomStream& rng) const;
  mpz_class dec(const AheCiphertext& c) const;

 private:
  AhePublicKey pk_;
  AheSecretKey sk_;
  mpz_class n_;
};

// bits must be 2048 or 3072. Deterministic for a fixed seed.
AheKeyPair ahe_keygen(int bits, uint64_t seed);

// Public-key encryption: c = (1 + m*n) * r^n mod n^2, m in [0, n).
AheCiphertext ahe_enc(const AhePublicKey& pk, const mpz_class& m, RandomStream& rng);

// dec(c_add(x, y)) = x_plain + y_plain mod n.
AheCiphertext ahe_c_add(const AhePublicKey& pk, const AheCiphertext& x, const AheCiphertext& y);

// dec(p_mul(x, k)) = x_plain * k mod n, k in [0, n).
AheCiphertext ahe_p_mul(const AhePublicKey& pk, const AheCiphertext& x, const mpz_class& k);

// Bridge between the 64-bit ring and the AHE plaintext space.
inline mpz_class ahe_lift(RingElement e) {
  mpz_class m;
  mpz_import(m.get_mpz_t(), 1, 1, sizeof(uint64_t), 0, 0, &e.v);
  return m;
}
RingElement ahe_lower(const mpz_class& m);

// Fixed-width wire form (see AhePublicKey::ciphertext_bytes).
std::vector<uint8_t> ahe_serialize(const AhePublicKey& pk, const AheCiphertext& c);
void ahe_serialize_into(const AhePublicKey& pk, const AheCiphertext& c,
                        std::vector<uint8_t>& out);
AheCiphertext ahe_deserialize(const AhePublicKey& pk, std::span<const uint8_t> data);

// Key files ("S3PK" / "S3SK" magic).
void write_public_key_file(const std::string& path, const AhePublicKey& pk);
AhePublicKey read_public_key_file(const std::string& path);
void write_keypair_files(const std::string& pk_path, const std::string& sk_path,
                         const AheKeyPair& kp);
AheKeyPair read_keypair_files(const std::string& pk_path, const std::string& sk_path);

}  // namespace s3rec
