#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

#include "s3rec/errors.hpp"

namespace s3rec {

// Element of Z_{2^64}. All arithmetic wraps; unsigned overflow is the ring
// reduction, never a bug. Keep this a trivially-copyable 8-byte value so
// batches can be memcpy'd onto the wire.
struct RingElement {
  uint64_t v = 0;

  constexpr RingElement() = default;
  constexpr explicit RingElement(uint64_t raw) : v(raw) {}

  friend constexpr RingElement operator+(RingElement a, RingElement b) {
    return RingElement{a.v + b.v};
  }
  friend constexpr RingElement operator-(RingElement a, RingElement b) {
    return RingElement{a.v - b.v};
  }
  friend constexpr RingElement operator*(RingElement a, RingElement b) {
    return RingElement{a.v * b.v};
  }
  constexpr RingElement operator-() const { return RingElement{0 - v}; }
  constexpr RingElement& operator+=(RingElement o) {
    v += o.v;
    return *this;
  }
  constexpr RingElement& operator-=(RingElement o) {
    v -= o.v;
    return *this;
  }
  constexpr RingElement& operator*=(RingElement o) {
    v *= o.v;
    return *this;
  }
  friend constexpr bool operator==(RingElement a, RingElement b) { return a.v == b.v; }
  friend constexpr bool operator!=(RingElement a, RingElement b) { return a.v != b.v; }

  constexpr int64_t as_signed() const { return static_cast<int64_t>(v); }
};

// Wire layout: 8 bytes little-endian, shared with the transport module.
inline void ring_to_bytes(RingElement e, uint8_t out[8]) {
  for (int i = 0; i < 8; i++) out[i] = static_cast<uint8_t>(e.v >> (8 * i));
}

inline RingElement ring_from_bytes(const uint8_t in[8]) {
  uint64_t v = 0;
  for (int i = 0; i < 8; i++) v |= static_cast<uint64_t>(in[i]) << (8 * i);
  return RingElement{v};
}

// Fixed-point encoding of reals into the ring: x -> round(x * 2^f), with
// negatives as two's-complement residues. f defaults to 20 fraction bits,
// which leaves headroom for inner products of ~10^4 terms of magnitude
// < 2^3 at scale 2f before wrapping.
struct FixedPointCodec {
  int frac_bits = 20;

  constexpr explicit FixedPointCodec(int f = 20) : frac_bits(f) {}

  double int_bound() const { return std::ldexp(1.0, 63 - frac_bits); }

  RingElement encode(double x) const {
    if (!std::isfinite(x) || std::fabs(x) >= int_bound()) {
      throw RangeError("fixed-point encode: |x| must be < 2^(63-f)");
    }
    double scaled = std::round(std::ldexp(x, frac_bits));
    // Round-trip through signed so negatives land on 2^64 - |residue|.
    return RingElement{static_cast<uint64_t>(static_cast<int64_t>(scaled))};
  }

  double decode(RingElement e) const {
    return std::ldexp(static_cast<double>(e.as_signed()), -frac_bits);
  }

  // Decode a value that carries scale 2f (e.g. a product of two encodings).
  double decode_scale(RingElement e, int scale_bits) const {
    return std::ldexp(static_cast<double>(e.as_signed()), -scale_bits);
  }
};

// Local probabilistic truncation of one share of a scale-2f value.
// Party 0 arithmetic-shifts its signed share; party 1 negates, shifts,
// negates. The reconstructed value is floor(x / 2^f) up to +-1 except
// with probability ~2^(l_x + 1 - 64) for |x| < 2^l_x.
inline RingElement trunc_local(RingElement e, int f, int party_id) {
  if (party_id == 0) {
    return RingElement{static_cast<uint64_t>(e.as_signed() >> f)};
  }
  uint64_t neg = 0 - e.v;
  int64_t shifted = static_cast<int64_t>(neg) >> f;
  return RingElement{0 - static_cast<uint64_t>(shifted)};
}

}  // namespace s3rec
