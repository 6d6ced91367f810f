#include "s3rec/bench.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

namespace s3rec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

RingMatrix random_ring_matrix(size_t r, size_t c, std::mt19937_64& rng, uint64_t bound) {
  RingMatrix m(r, c);
  for (auto& v : m.data()) v = RingElement{rng() % bound};
  return m;
}

SparseMatrix<RingElement> random_ring_sparse(size_t n, double alpha, std::mt19937_64& rng,
                                             uint64_t bound) {
  std::vector<std::tuple<uint32_t, uint32_t, RingElement>> entries;
  std::bernoulli_distribution keep(alpha);
  for (uint32_t i = 0; i < n; i++) {
    for (uint32_t j = 0; j < n; j++) {
      if (keep(rng)) entries.emplace_back(i, j, RingElement{1 + rng() % bound});
    }
  }
  return SparseMatrix<RingElement>::from_entries(n, n, std::move(entries));
}

// A social fixture whose symmetrization keeps at most one nonzero per row:
// disjoint user pairs, so sampled sub-matrices stay exactly linear in t.
SocialDataset matching_social(size_t m, uint64_t seed) {
  std::vector<uint32_t> order(m);
  for (size_t i = 0; i < m; i++) order[i] = static_cast<uint32_t>(i);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SocialPair> pairs;
  for (size_t i = 0; i + 1 < m; i += 2) pairs.push_back({order[i], order[i + 1], 1.0});
  return SocialDataset::from_pairs(m, std::move(pairs));
}

}  // namespace

std::string bench_csv_header() {
  return "protocol,k,m,t,mode,measured_bytes,predicted_bytes,offline_bytes,wall_ms,rmse";
}

std::string bench_row_csv(const BenchRow& row) {
  std::ostringstream os;
  os << row.protocol << ',' << row.k << ',' << row.m << ',' << row.t << ',' << row.mode << ','
     << row.measured_bytes << ',' << row.predicted_bytes << ',' << row.offline_bytes << ','
     << row.wall_ms << ',' << row.rmse;
  return os.str();
}

std::string bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "protocol      k    m    t     mode           measured   predicted  offline    wall_ms"
        "   rmse\n";
  char line[256];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-12s %4zu %4zu %5zu %-14s %-10llu %-10llu %-10llu %-9.1f %g%s\n",
                  r.protocol.c_str(), r.k, r.m, r.t, r.mode.empty() ? "-" : r.mode.c_str(),
                  static_cast<unsigned long long>(r.measured_bytes),
                  static_cast<unsigned long long>(r.predicted_bytes),
                  static_cast<unsigned long long>(r.offline_bytes), r.wall_ms, r.rmse,
                  r.ok() ? "" : "  MISMATCH");
    os << line;
  }
  return os.str();
}

BenchContext BenchContext::make(uint64_t seed, int ahe_bits) {
  return BenchContext{ahe_keygen(ahe_bits, seed ^ 0x5eed5eed5eed5eedULL), seed};
}

namespace {

struct DenseOutcome {
  uint64_t compute_payload = 0;
  uint64_t offline_bytes = 0;
  double wall_ms = 0;
};

DenseOutcome run_dense_once(size_t k, size_t m, std::mt19937_64& rng) {
  auto [s0, s1] = make_inproc_sessions(rng(), rng());
  RingMatrix x = random_ring_matrix(k, m, rng, 1000);
  RingMatrix y = random_ring_matrix(m, m, rng, 1000);
  auto [t0, t1] = dealer_generate(k * m * m, rng());
  MatmulDims dims{k, m, 0, 0};
  ProtocolReport rep0, rep1;
  SharedMatrix out0, out1;
  auto start = Clock::now();
  run_protocol(*s0, *s1,
               [&] { out0 = matmul_dense(*s0, dims, &x, nullptr, t0, &rep0); },
               [&] { out1 = matmul_dense(*s1, dims, nullptr, &y, t1, &rep1); });
  DenseOutcome o;
  o.wall_ms = ms_since(start);
  o.compute_payload = rep0.compute_payload();
  o.offline_bytes = 24 * rep0.triples_consumed;
  // correctness stays asserted even in benchmarks
  std::optional<RingMatrix> opened;
  run_protocol(*s0, *s1, [&] { opened = reconstruct(*s0, out0, 0); },
               [&] { reconstruct(*s1, out1, 0); });
  if (*opened != matmul_oracle(x, y)) throw Error("bench: dense result disagrees with oracle");
  return o;
}

}  // namespace

std::vector<BenchRow> bench_protocols(BenchContext& ctx, size_t k, size_t m, double alpha) {
  std::mt19937_64 rng(ctx.seed);
  std::vector<BenchRow> rows;

  {
    BenchRow row;
    row.protocol = "dense";
    row.k = k;
    row.m = m;
    row.t = m * m;
    auto o = run_dense_once(k, m, rng);
    row.measured_bytes = o.compute_payload;
    row.predicted_bytes = predict_dense_compute_bytes(k, m);
    row.offline_bytes = o.offline_bytes;
    row.wall_ms = o.wall_ms;
    rows.push_back(row);
  }

  auto y = random_ring_sparse(m, alpha, rng, 1000);
  RingMatrix x = random_ring_matrix(k, m, rng, 1000);
  RingMatrix expect = matmul_oracle(x, y.to_dense());

  {
    BenchRow row;
    row.protocol = "insensitive";
    row.k = k;
    row.m = m;
    row.t = y.nnz();
    auto [s0, s1] = make_inproc_sessions(rng(), rng());
    auto [t0, t1] = dealer_generate(k * y.nnz(), rng());
    MatmulDims dims{k, m, 0, 0};
    ProtocolReport rep0, rep1;
    SharedMatrix out0, out1;
    auto start = Clock::now();
    run_protocol(
        *s0, *s1,
        [&] { out0 = matmul_insensitive(*s0, dims, y.locs(), &x, nullptr, t0, &rep0); },
        [&] { out1 = matmul_insensitive(*s1, dims, y.locs(), nullptr, &y, t1, &rep1); });
    row.wall_ms = ms_since(start);
    row.measured_bytes = rep0.compute_payload();
    row.predicted_bytes = predict_insensitive_compute_bytes(k, y.nnz());
    row.offline_bytes = 24 * rep0.triples_consumed;
    std::optional<RingMatrix> opened;
    run_protocol(*s0, *s1, [&] { opened = reconstruct(*s0, out0, 0); },
                 [&] { reconstruct(*s1, out1, 0); });
    if (*opened != expect) throw Error("bench: insensitive result disagrees with oracle");
    rows.push_back(row);
  }

  for (auto mode : {SensitiveMode::Pir, SensitiveMode::FullTransfer}) {
    BenchRow row;
    row.protocol = "sensitive";
    row.k = k;
    row.m = m;
    row.t = y.nnz();
    row.mode = mode == SensitiveMode::Pir ? "pir" : "full-transfer";
    auto [s0, s1] = make_inproc_sessions(rng(), rng());
    SensitiveOptions options;
    options.mode = mode;
    RandomStream rng0(rng()), rng1(rng());
    SensitiveInputsP0 in0{&x, &ctx.p0_key, &rng0};
    SensitiveInputsP1 in1{&y, nullptr, &rng1};
    MatmulDims dims{k, m, 0, 0};
    ProtocolReport rep0, rep1;
    SharedMatrix out0, out1;
    auto start = Clock::now();
    run_protocol(*s0, *s1,
                 [&] { out0 = matmul_sensitive(*s0, dims, options, &in0, nullptr, &rep0); },
                 [&] { out1 = matmul_sensitive(*s1, dims, options, nullptr, &in1, &rep1); });
    row.wall_ms = ms_since(start);
    size_t ct_bytes = ctx.p0_key.pk().ciphertext_bytes();
    // Matrix-entry ciphertexts in both directions, in bytes.
    row.measured_bytes = (rep0.ciphertexts_sent + rep1.ciphertexts_sent) * ct_bytes;
    size_t expected_from_p0 = mode == SensitiveMode::Pir ? k * y.distinct_rows() : k * m;
    row.predicted_bytes = (k * m + expected_from_p0) * ct_bytes;
    row.offline_bytes = rep0.payload_bytes[0];  // the public key hand-off
    std::optional<RingMatrix> opened;
    run_protocol(*s0, *s1, [&] { opened = reconstruct(*s0, out0, 0); },
                 [&] { reconstruct(*s1, out1, 0); });
    if (*opened != expect) throw Error("bench: sensitive result disagrees with oracle");
    rows.push_back(row);
  }
  return rows;
}

std::vector<BenchRow> bench_k_grid(BenchContext& ctx, const std::vector<size_t>& ks, size_t m,
                                   size_t sensitive_m) {
  std::mt19937_64 rng(ctx.seed + 1);
  std::vector<BenchRow> rows;
  for (size_t k : ks) {
    BenchRow row;
    row.protocol = "dense";
    row.k = k;
    row.m = m;
    row.t = m * m;
    auto o = run_dense_once(k, m, rng);
    row.measured_bytes = o.compute_payload;
    row.predicted_bytes = predict_dense_compute_bytes(k, m);
    row.offline_bytes = o.offline_bytes;
    row.wall_ms = o.wall_ms;
    rows.push_back(row);
  }
  for (size_t k : ks) {
    BenchRow row;
    row.protocol = "sensitive-ct-count";  // measured column counts ciphertexts
    row.k = k;
    row.m = sensitive_m;
    row.mode = "full-transfer";
    auto y = random_ring_sparse(sensitive_m, 0.2, rng, 1000);
    row.t = y.nnz();
    RingMatrix x = random_ring_matrix(k, sensitive_m, rng, 1000);
    auto [s0, s1] = make_inproc_sessions(rng(), rng());
    SensitiveOptions options;
    options.mode = SensitiveMode::FullTransfer;
    RandomStream rng0(rng()), rng1(rng());
    SensitiveInputsP0 in0{&x, &ctx.p0_key, &rng0};
    SensitiveInputsP1 in1{&y, nullptr, &rng1};
    MatmulDims dims{k, sensitive_m, 0, 0};
    ProtocolReport rep0, rep1;
    SharedMatrix out0, out1;
    auto start = Clock::now();
    run_protocol(*s0, *s1,
                 [&] { out0 = matmul_sensitive(*s0, dims, options, &in0, nullptr, &rep0); },
                 [&] { out1 = matmul_sensitive(*s1, dims, options, nullptr, &in1, &rep1); });
    row.wall_ms = ms_since(start);
    // Count the transferred matrix ciphertexts; exactly k*m regardless of t.
    row.measured_bytes = rep0.ciphertexts_sent;
    row.predicted_bytes = k * sensitive_m;
    std::optional<RingMatrix> opened;
    run_protocol(*s0, *s1, [&] { opened = reconstruct(*s0, out0, 0); },
                 [&] { reconstruct(*s1, out1, 0); });
    if (*opened != matmul_oracle(x, y.to_dense())) {
      throw Error("bench: sensitive result disagrees with oracle");
    }
    rows.push_back(row);
  }
  return rows;
}

uint64_t predict_stmpc_online_payload(size_t k, size_t m, size_t distinct_rows,
                                      size_t ciphertext_bytes) {
  // P_0: insensitive input 8km + opens 16km + one PIR response per distinct
  //      row (1-byte tag + k ciphertexts).
  // P_1: insensitive input 8m + opens 16km + 8-byte query-count control +
  //      9-byte plain queries + k*m masked ciphertexts + 8km output opening.
  uint64_t p0 = 24 * k * m + distinct_rows * (1 + k * ciphertext_bytes);
  uint64_t p1 = 24 * k * m + 8 * m + 8 + 9 * distinct_rows + k * m * ciphertext_bytes;
  return p0 + p1;
}

std::vector<SparsityPoint> bench_sparsity(BenchContext& ctx, size_t k, size_t m,
                                          const std::vector<double>& rates) {
  SocialDataset base = matching_social(m, ctx.seed + 2);
  std::mt19937_64 rng(ctx.seed + 3);
  std::uniform_real_distribution<double> u_dist(-0.5, 0.5);
  RealMatrix u(k, m);
  for (auto& v : u.data()) v = u_dist(rng);
  FixedPointCodec codec(20);
  double gamma = 0.1;

  std::vector<SparsityPoint> points;
  for (size_t idx = 0; idx < rates.size(); idx++) {
    SocialDataset sampled = sample_social(base, rates[idx], ctx.seed + 10 + idx);
    // The trainer's view: symmetrized social matrix and its degree sums.
    std::vector<std::tuple<uint32_t, uint32_t, double>> entries;
    for (const auto& p : sampled.pairs) {
      entries.emplace_back(p.a, p.b, p.weight);
      entries.emplace_back(p.b, p.a, p.weight);
    }
    auto sym = SparseMatrix<double>::from_entries(m, m, std::move(entries));
    auto [d, e] = build_d_e(sym);

    SparsityPoint point;
    point.rate = rates[idx];
    point.realized_t = sym.nnz();
    point.distinct_rows = sym.transpose().distinct_rows();
    point.predicted_bytes =
        predict_stmpc_online_payload(k, m, point.distinct_rows, ctx.p0_key.pk().ciphertext_bytes());

    auto [s0, s1] = make_inproc_sessions(rng(), rng());
    auto [t0, t1] = dealer_generate(k * m, rng());
    SensitiveOptions options;  // pir + plain
    MatmulDims dims{k, m, 0, 0};
    StMpcReport rep0, rep1;
    run_protocol(*s0, *s1,
                 [&] {
                   RandomStream r0(ctx.seed + 20 + idx);
                   StMpcInputsP0 in0{&u, &ctx.p0_key, &r0};
                   st_mpc(*s0, gamma, dims, codec, options, &in0, nullptr, t0, &rep0);
                 },
                 [&] {
                   RandomStream r1(ctx.seed + 30 + idx);
                   StMpcInputsP1 in1{&d, &e, &sym, nullptr, &r1};
                   st_mpc(*s1, gamma, dims, codec, options, nullptr, &in1, t1, &rep1);
                 });
    for (int p = 1; p < kNumPhases; p++) {
      point.online_bytes += rep0.payload_bytes[p] + rep1.payload_bytes[p];
    }

    // Dense replacement at the same dimensions: bytes must not move with t.
    auto [ds0, ds1] = make_inproc_sessions(rng(), rng());
    auto [dt0, dt1] = dealer_generate(k * m * m, 12345);  // fixed seed: same triples per rate
    RingMatrix xe = encode_matrix((-gamma) * u, codec);
    RingMatrix ye = encode_sparse(sym, codec).to_dense();
    ProtocolReport drep0, drep1;
    SharedMatrix dout0, dout1;
    run_protocol(*ds0, *ds1,
                 [&] { dout0 = matmul_dense(*ds0, dims, &xe, nullptr, dt0, &drep0); },
                 [&] { dout1 = matmul_dense(*ds1, dims, nullptr, &ye, dt1, &drep1); });
    for (int p = 1; p < kNumPhases; p++) {
      point.dense_bytes += drep0.payload_bytes[p] + drep1.payload_bytes[p];
    }
    points.push_back(point);
  }
  return points;
}

double linear_r2(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw UsageError("linear_r2 needs >= 2 points");
  size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; i++) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw UsageError("linear_r2: degenerate x values");
  double slope = (n * sxy - sx * sy) / denom;
  double intercept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, mean_y = sy / n;
  for (size_t i = 0; i < n; i++) {
    double fit = intercept + slope * xs[i];
    ss_res += (ys[i] - fit) * (ys[i] - fit);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  if (ss_tot == 0) return 1.0;
  return 1.0 - ss_res / ss_tot;
}

}  // namespace s3rec
