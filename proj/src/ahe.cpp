#include "s3rec/ahe.hpp"

#include <cstdio>
#include <cstring>
#include <random>

namespace s3rec {

namespace {

uint64_t low64(const mpz_class& v) {
  mpz_class m = v & mpz_class(0xffffffffffffffffUL);
  uint64_t out = 0;
  size_t count = 0;
  mpz_export(&out, &count, 1, sizeof(uint64_t), 0, 0, m.get_mpz_t());
  return out;
}

// Big-endian magnitude padded on the left to `width` bytes.
void export_fixed(const mpz_class& v, uint8_t* out, size_t width) {
  std::memset(out, 0, width);
  size_t bytes = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  if (v == 0) return;
  if (bytes > width) throw UsageError("value too large for fixed-width export");
  size_t count = 0;
  mpz_export(out + (width - bytes), &count, 1, 1, 0, 0, v.get_mpz_t());
}

mpz_class import_bytes(std::span<const uint8_t> data) {
  mpz_class v;
  if (!data.empty()) mpz_import(v.get_mpz_t(), data.size(), 1, 1, 0, 0, data.data());
  return v;
}

// L(u) = (u - 1) / d, exact by construction in Paillier decryption.
mpz_class l_function(const mpz_class& u, const mpz_class& d) {
  mpz_class out = u - 1;
  mpz_divexact(out.get_mpz_t(), out.get_mpz_t(), d.get_mpz_t());
  return out;
}

void append_lp_block(std::vector<uint8_t>& out, const mpz_class& v) {
  size_t bytes = v == 0 ? 0 : (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(bytes >> (8 * i)));
  size_t start = out.size();
  out.resize(out.size() + bytes);
  if (bytes > 0) {
    size_t count = 0;
    mpz_export(out.data() + start, &count, 1, 1, 0, 0, v.get_mpz_t());
  }
}

mpz_class read_lp_block(std::span<const uint8_t> data, size_t& pos) {
  if (pos + 4 > data.size()) throw ParseError("truncated length prefix");
  uint32_t len = 0;
  for (int i = 0; i < 4; i++) len |= static_cast<uint32_t>(data[pos + i]) << (8 * i);
  pos += 4;
  if (pos + len > data.size()) throw ParseError("truncated big-integer block");
  mpz_class v = import_bytes(data.subspan(pos, len));
  pos += len;
  return v;
}

}  // namespace

RandomStream::RandomStream() : rng_(gmp_randinit_mt) {
  std::random_device rd;
  mpz_class seed;
  for (int i = 0; i < 8; i++) {
    seed <<= 32;
    seed += rd();
  }
  rng_.seed(seed);
}

RandomStream::RandomStream(uint64_t seed) : rng_(gmp_randinit_mt) {
  rng_.seed(mpz_class(static_cast<unsigned long>(seed & 0xffffffffu)) +
            (mpz_class(static_cast<unsigned long>(seed >> 32)) << 32));
}

mpz_class RandomStream::uniform_below(const mpz_class& bound) { return rng_.get_z_range(bound); }

mpz_class RandomStream::uniform_bits(size_t bits) { return rng_.get_z_bits(bits); }

AhePublicKey::AhePublicKey(mpz_class n, int bits)
    : n_(std::move(n)), n2_(n_ * n_), bits_(bits), fingerprint_(low64(n_)) {}

std::vector<uint8_t> AhePublicKey::serialize() const {
  std::vector<uint8_t> out;
  out.reserve(8 + bits_ / 8);
  for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(bits_ >> (8 * i)));
  append_lp_block(out, n_);
  return out;
}

AhePublicKey AhePublicKey::deserialize(std::span<const uint8_t> data) {
  if (data.size() < 4) throw ParseError("public key too short");
  uint32_t bits = 0;
  for (int i = 0; i < 4; i++) bits |= static_cast<uint32_t>(data[i]) << (8 * i);
  size_t pos = 4;
  mpz_class n = read_lp_block(data, pos);
  if (pos != data.size()) throw ParseError("trailing bytes after public key");
  return AhePublicKey(std::move(n), static_cast<int>(bits));
}

AheSecretKey::AheSecretKey(const mpz_class& p, const mpz_class& q) : p_(p), q_(q) {
  p2_ = p * p;
  q2_ = q * q;
  mpz_class n = p * q;
  // g = n + 1, so g^{p-1} mod p^2 = 1 + (p-1) n mod p^2.
  mpz_class gp = (1 + (p - 1) * n) % p2_;
  mpz_class gq = (1 + (q - 1) * n) % q2_;
  mpz_invert(hp_.get_mpz_t(), l_function(gp, p).get_mpz_t(), p.get_mpz_t());
  mpz_invert(hq_.get_mpz_t(), l_function(gq, q).get_mpz_t(), q.get_mpz_t());
  mpz_invert(q2_inv_p2_.get_mpz_t(), q2_.get_mpz_t(), p2_.get_mpz_t());
  mpz_invert(q_inv_p_.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
  n_mod_ord_p2_ = n % (p * (p - 1));
  n_mod_ord_q2_ = n % (q * (q - 1));
}

std::vector<uint8_t> AheSecretKey::serialize() const {
  std::vector<uint8_t> out;
  append_lp_block(out, p_);
  append_lp_block(out, q_);
  return out;
}

AheSecretKey AheSecretKey::deserialize(std::span<const uint8_t> data) {
  size_t pos = 0;
  mpz_class p = read_lp_block(data, pos);
  mpz_class q = read_lp_block(data, pos);
  if (pos != data.size()) throw ParseError("trailing bytes after secret key");
  return AheSecretKey(p, q);
}

AheKeyPair::AheKeyPair(AhePublicKey pk, AheSecretKey sk)
    : pk_(std::move(pk)), sk_(std::move(sk)), n_(pk_.n()) {}

AheCiphertext AheKeyPair::enc(const mpz_class& m, RandomStream& rng) const {
  if (m < 0 || m >= n_) throw RangeError("plaintext outside [0, n)");
  mpz_class r = rng.uniform_below(n_ - 1) + 1;
  // r^n via CRT halves with exponents reduced mod the group orders.
  mpz_class rp, rq;
  mpz_powm(rp.get_mpz_t(), r.get_mpz_t(), sk_.n_mod_ord_p2_.get_mpz_t(), sk_.p2_.get_mpz_t());
  mpz_powm(rq.get_mpz_t(), r.get_mpz_t(), sk_.n_mod_ord_q2_.get_mpz_t(), sk_.q2_.get_mpz_t());
  mpz_class rn = rq + sk_.q2_ * (((rp - rq) * sk_.q2_inv_p2_) % sk_.p2_);
  rn %= pk_.n_squared();
  if (rn < 0) rn += pk_.n_squared();
  mpz_class c = ((1 + m * n_) % pk_.n_squared()) * rn % pk_.n_squared();
  return AheCiphertext{std::move(c), pk_.fingerprint()};
}

mpz_class AheKeyPair::dec(const AheCiphertext& c) const {
  if (c.key_fingerprint != pk_.fingerprint()) throw UsageError("ciphertext under a different key");
  if (c.value < 0 || c.value >= pk_.n_squared()) throw RangeError("ciphertext outside [0, n^2)");
  mpz_class up, uq, ep = sk_.p_ - 1, eq = sk_.q_ - 1;
  mpz_powm(up.get_mpz_t(), c.value.get_mpz_t(), ep.get_mpz_t(), sk_.p2_.get_mpz_t());
  mpz_powm(uq.get_mpz_t(), c.value.get_mpz_t(), eq.get_mpz_t(), sk_.q2_.get_mpz_t());
  mpz_class mp = l_function(up, sk_.p_) * sk_.hp_ % sk_.p_;
  mpz_class mq = l_function(uq, sk_.q_) * sk_.hq_ % sk_.q_;
  // Garner: m = mq + q * ((mp - mq) * q^-1 mod p)
  mpz_class diff = (mp - mq) * sk_.q_inv_p_ % sk_.p_;
  if (diff < 0) diff += sk_.p_;
  return mq + sk_.q_ * diff;
}

AheKeyPair ahe_keygen(int bits, uint64_t seed) {
  if (bits != 2048 && bits != 3072) {
    throw ConfigError("AHE modulus must be 2048 or 3072 bits, got " + std::to_string(bits));
  }
  RandomStream rng(seed);
  int half = bits / 2;
  mpz_class p, q, n;
  while (true) {
    p = rng.uniform_bits(half);
    mpz_setbit(p.get_mpz_t(), half - 1);
    mpz_setbit(p.get_mpz_t(), half - 2);
    mpz_nextprime(p.get_mpz_t(), p.get_mpz_t());
    q = rng.uniform_bits(half);
    mpz_setbit(q.get_mpz_t(), half - 1);
    mpz_setbit(q.get_mpz_t(), half - 2);
    mpz_nextprime(q.get_mpz_t(), q.get_mpz_t());
    if (p == q) continue;
    n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != static_cast<size_t>(bits)) continue;
    mpz_class phi = (p - 1) * (q - 1), g;
    mpz_gcd(g.get_mpz_t(), n.get_mpz_t(), phi.get_mpz_t());
    if (g == 1) break;
  }
  return AheKeyPair(AhePublicKey(n, bits), AheSecretKey(p, q));
}

AheCiphertext ahe_enc(const AhePublicKey& pk, const mpz_class& m, RandomStream& rng) {
  if (m < 0 || m >= pk.n()) throw RangeError("plaintext outside [0, n)");
  mpz_class r = rng.uniform_below(pk.n() - 1) + 1;
  mpz_class rn;
  mpz_powm(rn.get_mpz_t(), r.get_mpz_t(), pk.n().get_mpz_t(), pk.n_squared().get_mpz_t());
  mpz_class c = ((1 + m * pk.n()) % pk.n_squared()) * rn % pk.n_squared();
  return AheCiphertext{std::move(c), pk.fingerprint()};
}

AheCiphertext ahe_c_add(const AhePublicKey& pk, const AheCiphertext& x, const AheCiphertext& y) {
  if (x.key_fingerprint != pk.fingerprint() || y.key_fingerprint != pk.fingerprint()) {
    throw UsageError("ciphertext addition across different keys");
  }
  return AheCiphertext{x.value * y.value % pk.n_squared(), pk.fingerprint()};
}

AheCiphertext ahe_p_mul(const AhePublicKey& pk, const AheCiphertext& x, const mpz_class& k) {
  if (x.key_fingerprint != pk.fingerprint()) throw UsageError("plaintext multiply under wrong key");
  if (k < 0 || k >= pk.n()) throw RangeError("scalar outside [0, n)");
  AheCiphertext out{mpz_class(), pk.fingerprint()};
  mpz_powm(out.value.get_mpz_t(), x.value.get_mpz_t(), k.get_mpz_t(),
           pk.n_squared().get_mpz_t());
  return out;
}

RingElement ahe_lower(const mpz_class& m) {
  mpz_class r = m & mpz_class(0xffffffffffffffffUL);
  uint64_t out = 0;
  size_t count = 0;
  mpz_export(&out, &count, 1, sizeof(uint64_t), 0, 0, r.get_mpz_t());
  return RingElement{out};
}

std::vector<uint8_t> ahe_serialize(const AhePublicKey& pk, const AheCiphertext& c) {
  std::vector<uint8_t> out;
  ahe_serialize_into(pk, c, out);
  return out;
}

void ahe_serialize_into(const AhePublicKey& pk, const AheCiphertext& c,
                        std::vector<uint8_t>& out) {
  size_t width = 2 * static_cast<size_t>(pk.bits()) / 8;
  for (int i = 0; i < 4; i++) out.push_back(static_cast<uint8_t>(width >> (8 * i)));
  size_t start = out.size();
  out.resize(out.size() + width);
  export_fixed(c.value, out.data() + start, width);
}

AheCiphertext ahe_deserialize(const AhePublicKey& pk, std::span<const uint8_t> data) {
  size_t width = 2 * static_cast<size_t>(pk.bits()) / 8;
  if (data.size() != 4 + width) throw ProtocolError("ciphertext block has unexpected size");
  uint32_t len = 0;
  for (int i = 0; i < 4; i++) len |= static_cast<uint32_t>(data[i]) << (8 * i);
  if (len != width) throw ProtocolError("ciphertext length prefix disagrees with key size");
  mpz_class v = import_bytes(data.subspan(4));
  if (v >= pk.n_squared()) throw ProtocolError("ciphertext outside Z_{n^2}");
  return AheCiphertext{std::move(v), pk.fingerprint()};
}

void write_public_key_file(const std::string& path, const AhePublicKey& pk) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw UsageError("cannot open " + path + " for writing");
  std::vector<uint8_t> buf{'S', '3', 'P', 'K'};
  auto body = pk.serialize();
  buf.insert(buf.end(), body.begin(), body.end());
  size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (written != buf.size()) throw UsageError("short write to " + path);
}

namespace {
std::vector<uint8_t> read_all(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw UsageError("cannot open " + path);
  std::vector<uint8_t> buf;
  uint8_t chunk[4096];
  size_t n;
  while ((n = std::fread(chunk, 1, sizeof(chunk), f)) > 0) buf.insert(buf.end(), chunk, chunk + n);
  std::fclose(f);
  return buf;
}
}  // namespace

AhePublicKey read_public_key_file(const std::string& path) {
  auto buf = read_all(path);
  if (buf.size() < 4 || std::memcmp(buf.data(), "S3PK", 4) != 0) {
    throw ParseError(path + ": not a public key file");
  }
  return AhePublicKey::deserialize(std::span<const uint8_t>(buf).subspan(4));
}

void write_keypair_files(const std::string& pk_path, const std::string& sk_path,
                         const AheKeyPair& kp) {
  write_public_key_file(pk_path, kp.pk());
  std::FILE* f = std::fopen(sk_path.c_str(), "wb");
  if (f == nullptr) throw UsageError("cannot open " + sk_path + " for writing");
  std::vector<uint8_t> buf{'S', '3', 'S', 'K'};
  auto body = kp.sk().serialize();
  buf.insert(buf.end(), body.begin(), body.end());
  size_t written = std::fwrite(buf.data(), 1, buf.size(), f);
  std::fclose(f);
  if (written != buf.size()) throw UsageError("short write to " + sk_path);
}

AheKeyPair read_keypair_files(const std::string& pk_path, const std::string& sk_path) {
  AhePublicKey pk = read_public_key_file(pk_path);
  auto buf = read_all(sk_path);
  if (buf.size() < 4 || std::memcmp(buf.data(), "S3SK", 4) != 0) {
    throw ParseError(sk_path + ": not a secret key file");
  }
  AheSecretKey sk = AheSecretKey::deserialize(std::span<const uint8_t>(buf).subspan(4));
  if (sk.p() * sk.q() != pk.n()) throw ParseError("secret key does not match public key");
  return AheKeyPair(std::move(pk), std::move(sk));
}

}  // namespace s3rec
