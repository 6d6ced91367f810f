#pragma once

#include <string>
#include <vector>

#include "s3rec/recommender.hpp"
#include "s3rec/securemm.hpp"

namespace s3rec {

// One benchmark measurement. measured_bytes must equal predicted_bytes or
// the bench run fails; the table is a regression test, not a report.
struct BenchRow {
  std::string protocol;  // dense | insensitive | sensitive
  size_t k = 0;
  size_t m = 0;
  size_t t = 0;
  std::string mode;  // pir | full-transfer for sensitive rows
  uint64_t measured_bytes = 0;
  uint64_t predicted_bytes = 0;
  uint64_t offline_bytes = 0;
  double wall_ms = 0;
  double rmse = 0;  // max-abs decoded deviation from the plaintext oracle
  bool ok() const { return measured_bytes == predicted_bytes; }
};

std::string bench_csv_header();
std::string bench_row_csv(const BenchRow& row);
std::string bench_table(const std::vector<BenchRow>& rows);

// Shared AHE material so a bench run pays for keygen once.
struct BenchContext {
  AheKeyPair p0_key;
  uint64_t seed = 1;
  static BenchContext make(uint64_t seed, int ahe_bits = 2048);
};

// One protocol comparison at fixed (k, m, alpha): dense vs insensitive vs
// sensitive in both modes, byte formulas asserted.
std::vector<BenchRow> bench_protocols(BenchContext& ctx, size_t k, size_t m, double alpha);

// Dense compute bytes across a k grid (exact 16*k*m^2 scaling) plus the
// sensitive full-transfer ciphertext count (exactly k*m).
std::vector<BenchRow> bench_k_grid(BenchContext& ctx, const std::vector<size_t>& ks, size_t m,
                                   size_t sensitive_m);

// The sparsity study: a fixed synthetic social matrix sampled at the given
// rates, the per-epoch social-term protocols run at each rate.
struct SparsityPoint {
  double rate = 0;
  size_t realized_t = 0;       // nnz of the symmetrized matrix the protocols see
  size_t distinct_rows = 0;
  uint64_t online_bytes = 0;   // insensitive + sensitive, both parties
  uint64_t predicted_bytes = 0;
  uint64_t dense_bytes = 0;    // the dense replacement at the same dims
};

// Exact prediction of one st_mpc call's combined online payload (both
// parties, pir mode with the plain backend).
uint64_t predict_stmpc_online_payload(size_t k, size_t m, size_t distinct_rows,
                                      size_t ciphertext_bytes);

std::vector<SparsityPoint> bench_sparsity(BenchContext& ctx, size_t k, size_t m,
                                          const std::vector<double>& rates);

// Coefficient of determination of the least-squares line through
// (x_i, y_i); 1.0 means exactly affine.
double linear_r2(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace s3rec
