#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "s3rec/mpcshare.hpp"
#include "s3rec/transport.hpp"

using namespace s3rec;

namespace {

// Runs shr at party `from` and shr_recv at the peer, returning both shares.
std::pair<Share, Share> share_value(PartySession& s0, PartySession& s1, int from, RingElement x) {
  Share a, b;
  run_protocol(s0, s1, [&] { a = from == 0 ? shr(s0, x) : shr_recv(s0); },
               [&] { b = from == 1 ? shr(s1, x) : shr_recv(s1); });
  return {a, b};
}

RingElement open_to(PartySession& s0, PartySession& s1, const Share& a, const Share& b, int to) {
  std::optional<RingElement> r0, r1;
  run_protocol(s0, s1, [&] { r0 = rec(s0, a, to); }, [&] { r1 = rec(s1, b, to); });
  return to == 0 ? *r0 : *r1;
}

}  // namespace

TEST_CASE("shr then rec round-trips") {
  auto [s0, s1] = make_inproc_sessions();
  auto [a, b] = share_value(*s0, *s1, 0, RingElement{5});
  CHECK(open_to(*s0, *s1, a, b, 0).v == 5);

  auto [z0, z1] = share_value(*s0, *s1, 1, RingElement{0});
  CHECK(open_to(*s0, *s1, z0, z1, 1).v == 0);
}

TEST_CASE("rec handles wraparound") {
  auto [s0, s1] = make_inproc_sessions();
  Share a{0, RingElement{0xffffffffffffffffULL}, 0};
  Share b{1, RingElement{2}, 0};
  CHECK(open_to(*s0, *s1, a, b, 0).v == 1);
  // (3, 4) -> 7
  Share c{0, RingElement{3}, 0};
  Share d{1, RingElement{4}, 0};
  CHECK(open_to(*s0, *s1, c, d, 1).v == 7);
}

TEST_CASE("batch of 1000 random values reconstructs") {
  auto [s0, s1] = make_inproc_sessions();
  std::mt19937_64 rng(21);
  std::vector<RingElement> xs(1000);
  for (auto& x : xs) x = RingElement{rng()};
  std::vector<Share> mine, theirs;
  run_protocol(*s0, *s1, [&] { mine = shr_batch(*s0, xs); },
               [&] { theirs = shr_recv_batch(*s1, 1000); });
  std::optional<std::vector<RingElement>> opened;
  run_protocol(*s0, *s1, [&] { opened = rec_batch(*s0, mine, 0); },
               [&] { rec_batch(*s1, theirs, 0); });
  for (size_t i = 0; i < xs.size(); i++) CHECK((*opened)[i] == xs[i]);
}

TEST_CASE("random splits reconstruct to the secret") {
  std::mt19937_64 rng(23);
  auto [s0, s1] = make_inproc_sessions();
  std::vector<Share> a(10000), b(10000);
  std::vector<RingElement> xs(10000);
  for (size_t i = 0; i < xs.size(); i++) {
    xs[i] = RingElement{rng()};
    RingElement r{rng()};
    a[i] = Share{0, xs[i] - r, 0};
    b[i] = Share{1, r, 0};
  }
  std::optional<std::vector<RingElement>> opened;
  run_protocol(*s0, *s1, [&] { opened = rec_batch(*s0, a, 0); }, [&] { rec_batch(*s1, b, 0); });
  for (size_t i = 0; i < xs.size(); i++) CHECK((*opened)[i] == xs[i]);
}

TEST_CASE("add is local and matches plaintext sums") {
  auto [s0, s1] = make_inproc_sessions();
  auto [a0, a1] = share_value(*s0, *s1, 0, RingElement{3});
  auto [b0, b1] = share_value(*s0, *s1, 1, RingElement{4});
  uint64_t sent_before = s0->stats().total_bytes_sent() + s1->stats().total_bytes_sent();
  Share c0 = share_add(a0, b0);
  Share c1 = share_add(a1, b1);
  CHECK(s0->stats().total_bytes_sent() + s1->stats().total_bytes_sent() == sent_before);
  CHECK(open_to(*s0, *s1, c0, c1, 0).v == 7);

  // zero shares are identity
  Share z0{0, RingElement{0}, 0}, z1{1, RingElement{0}, 0};
  CHECK(open_to(*s0, *s1, share_add(a0, z0), share_add(a1, z1), 0).v == 3);

  // oracle over random pairs, done locally on share pairs
  std::mt19937_64 rng(29);
  for (int i = 0; i < 10000; i++) {
    RingElement x{rng()}, y{rng()}, rx{rng()}, ry{rng()};
    Share xa{0, x - rx, 0}, xb{1, rx, 0}, ya{0, y - ry, 0}, yb{1, ry, 0};
    CHECK(share_add(xa, ya).value + share_add(xb, yb).value == x + y);
  }
}

TEST_CASE("add rejects scale mismatch") {
  Share a{0, RingElement{1}, 20};
  Share b{0, RingElement{2}, 40};
  CHECK_THROWS_AS(share_add(a, b), UsageError);
}

TEST_CASE("beaver multiplication matches plaintext products") {
  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] = dealer_generate(10020, 31);

  auto [x0, x1] = share_value(*s0, *s1, 0, RingElement{3});
  auto [y0, y1] = share_value(*s0, *s1, 1, RingElement{4});
  Share p0, p1;
  run_protocol(*s0, *s1, [&] { p0 = mul(*s0, x0, y0, t0); }, [&] { p1 = mul(*s1, x1, y1, t1); });
  CHECK(open_to(*s0, *s1, p0, p1, 0).v == 12);

  // y = 0
  auto [z0, z1] = share_value(*s0, *s1, 1, RingElement{0});
  run_protocol(*s0, *s1, [&] { p0 = mul(*s0, x0, z0, t0); }, [&] { p1 = mul(*s1, x1, z1, t1); });
  CHECK(open_to(*s0, *s1, p0, p1, 0).v == 0);

  // oracle over random batches
  std::mt19937_64 rng(37);
  size_t n = 10000;
  std::vector<RingElement> xs(n), ys(n);
  std::vector<Share> xa(n), xb(n), ya(n), yb(n);
  for (size_t i = 0; i < n; i++) {
    xs[i] = RingElement{rng()};
    ys[i] = RingElement{rng()};
    RingElement rx{rng()}, ry{rng()};
    xa[i] = {0, xs[i] - rx, 0};
    xb[i] = {1, rx, 0};
    ya[i] = {0, ys[i] - ry, 0};
    yb[i] = {1, ry, 0};
  }
  std::vector<Share> pa, pb;
  run_protocol(*s0, *s1, [&] { pa = mul_batch(*s0, xa, ya, t0); },
               [&] { pb = mul_batch(*s1, xb, yb, t1); });
  for (size_t i = 0; i < n; i++) CHECK(pa[i].value + pb[i].value == xs[i] * ys[i]);
}

TEST_CASE("one multiplication costs exactly 16 payload bytes in compute") {
  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] = dealer_generate(1, 41);
  auto [x0, x1] = share_value(*s0, *s1, 0, RingElement{9});
  auto [y0, y1] = share_value(*s0, *s1, 1, RingElement{11});
  uint64_t before0 = s0->stats().payload(Phase::Compute);
  uint64_t before1 = s1->stats().payload(Phase::Compute);
  run_protocol(*s0, *s1, [&] { mul(*s0, x0, y0, t0); }, [&] { mul(*s1, x1, y1, t1); });
  CHECK(s0->stats().payload(Phase::Compute) - before0 == 16);
  CHECK(s1->stats().payload(Phase::Compute) - before1 == 16);
}

TEST_CASE("triple stores are consume-once") {
  auto [t0, t1] = dealer_generate(2, 43);
  t0.take();
  t0.take();
  CHECK_THROWS_AS(t0.take(), UsageError);
}

TEST_CASE("dealer triples are valid and deterministic") {
  auto [t0, t1] = dealer_generate(500, 47);
  for (size_t i = 0; i < 500; i++) {
    const auto& u = t0.raw()[i];
    const auto& v = t1.raw()[i];
    CHECK((u.a + v.a) * (u.b + v.b) == u.c + v.c);
  }
  auto [u0, u1] = dealer_generate(500, 47);
  for (size_t i = 0; i < 500; i++) {
    CHECK(u0.raw()[i].a == t0.raw()[i].a);
    CHECK(u1.raw()[i].c == t1.raw()[i].c);
  }
  auto [e0, e1] = dealer_generate(0, 49);
  CHECK(e0.size() == 0);
  CHECK(e1.size() == 0);
}

TEST_CASE("triple distribution accounts offline bytes") {
  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] = dealer_generate(100, 53);
  TripleStore received;
  run_protocol(*s0, *s1, [&] { send_triples(*s0, t1); }, [&] { received = recv_triples(*s1); });
  CHECK(s0->stats().payload(Phase::Offline) == 100 * 24);
  for (size_t i = 0; i < 100; i++) {
    const auto& u = t0.raw()[i];
    const auto& v = received.raw()[i];
    CHECK((u.a + v.a) * (u.b + v.b) == u.c + v.c);
  }
}

TEST_CASE("triple store files round-trip") {
  auto [t0, t1] = dealer_generate(64, 59);
  auto path = std::filesystem::temp_directory_path() / "s3rec_test_triples.bin";
  write_triple_file(path.string(), t0);
  TripleStore back = read_triple_file(path.string());
  REQUIRE(back.size() == 64);
  for (size_t i = 0; i < 64; i++) {
    CHECK(back.raw()[i].a == t0.raw()[i].a);
    CHECK(back.raw()[i].b == t0.raw()[i].b);
    CHECK(back.raw()[i].c == t0.raw()[i].c);
  }
  std::filesystem::remove(path);
}

TEST_CASE("transmitted shares look uniform (chi-square on low byte)") {
  // Stand-in for the simulation argument: the share sent by shr must be
  // indistinguishable from uniform randomness. 10^5 draws, 256 bins,
  // critical value chi2(0.001, 255) = 330.52.
  auto [s0, s1] = make_inproc_sessions(1234, 5678);
  constexpr int kDraws = 100000;
  std::array<uint64_t, 256> counts{};
  RingElement fixed{0x1122334455667788ULL};
  run_protocol(*s0, *s1,
               [&] {
                 std::vector<RingElement> xs(kDraws, fixed);
                 shr_batch(*s0, xs);
               },
               [&] {
                 auto shares = shr_recv_batch(*s1, kDraws);
                 for (const auto& s : shares) counts[s.value.v & 0xff]++;
               });
  double expected = static_cast<double>(kDraws) / 256.0;
  double chi2 = 0;
  for (auto c : counts) {
    double d = static_cast<double>(c) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 330.51974363400586);
}
