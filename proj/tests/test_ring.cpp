#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "s3rec/ring.hpp"

using namespace s3rec;

TEST_CASE("encode basics") {
  FixedPointCodec codec(20);
  CHECK(codec.encode(0.0).v == 0);
  CHECK(codec.encode(1.5).v == 1572864);  // 1.5 * 2^20
  CHECK(codec.encode(-1.0).v == (0ULL - 1048576ULL));
}

TEST_CASE("decode basics") {
  FixedPointCodec codec(20);
  CHECK(codec.decode(RingElement{0}) == 0.0);
  CHECK(codec.decode(RingElement{1572864}) == 1.5);
  CHECK(codec.decode(RingElement{0ULL - 1048576ULL}) == -1.0);
}

TEST_CASE("encode rejects out-of-range input") {
  FixedPointCodec codec(20);
  CHECK_THROWS_AS(codec.encode(codec.int_bound()), RangeError);
  CHECK_THROWS_AS(codec.encode(-codec.int_bound() * 2), RangeError);
  CHECK_THROWS_AS(codec.encode(std::nan("")), RangeError);
}

TEST_CASE("round trip over random reals") {
  FixedPointCodec codec(20);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-1e6, 1e6);
  double tol = std::ldexp(1.0, -20);
  for (int i = 0; i < 100000; i++) {
    double x = dist(rng);
    CHECK(std::fabs(codec.decode(codec.encode(x)) - x) <= tol);
  }
}

TEST_CASE("ring arithmetic is associative and commutative") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100000; i++) {
    RingElement a{rng()}, b{rng()}, c{rng()};
    CHECK((a + b) + c == a + (b + c));
    CHECK(a + b == b + a);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * b == b * a);
    CHECK(a * (b + c) == a * b + a * c);
  }
}

TEST_CASE("serialization is 8 bytes little-endian") {
  RingElement e{0x0102030405060708ULL};
  uint8_t buf[8];
  ring_to_bytes(e, buf);
  CHECK(buf[0] == 0x08);
  CHECK(buf[7] == 0x01);
  CHECK(ring_from_bytes(buf) == e);
}

namespace {

// Oracle: reconstruct the truncated pair and compare against the signed
// shift of the original value.
int64_t trunc_pair_error(RingElement x, RingElement split, int f) {
  RingElement s0 = split;
  RingElement s1 = x - split;
  RingElement t = trunc_local(s0, f, 0) + trunc_local(s1, f, 1);
  int64_t expect = static_cast<int64_t>(x.v) >> f;
  return t.as_signed() - expect;
}

}  // namespace

TEST_CASE("truncation of zero") {
  CHECK(trunc_local(RingElement{0}, 20, 0).v == 0);
  CHECK(trunc_local(RingElement{0}, 20, 1).v == 0);
}

TEST_CASE("two-party truncation stays within one ulp") {
  std::mt19937_64 rng(13);
  FixedPointCodec codec(20);
  int f = 20;

  // Shares of encode(6.0) at scale 2f reconstruct to encode(6.0) +- 1.
  RingElement six = RingElement{static_cast<uint64_t>(6) << (2 * f)};
  for (int i = 0; i < 10000; i++) {
    int64_t err = trunc_pair_error(six, RingElement{rng()}, f);
    CHECK(std::abs(err) <= 1);
  }
  RingElement neg = codec.encode(-2.5 * (1 << f));  // -2.5 at scale 2f
  for (int i = 0; i < 10000; i++) {
    int64_t err = trunc_pair_error(neg, RingElement{rng()}, f);
    CHECK(std::abs(err) <= 1);
  }
}

TEST_CASE("truncation failure rate is negligible for bounded magnitudes") {
  // For |x| < 2^40 the failure probability is ~2^-23; 10^4 draws should
  // see zero failures.
  std::mt19937_64 rng(17);
  int f = 20;
  int failures = 0;
  for (int i = 0; i < 10000; i++) {
    uint64_t mag = rng() & ((1ULL << 40) - 1);
    bool negate = (rng() & 1) != 0;
    RingElement x{negate ? (0 - mag) : mag};
    if (std::abs(trunc_pair_error(x, RingElement{rng()}, f)) > 1) failures++;
  }
  CHECK(failures == 0);
}
