#pragma once

#include <array>
#include <optional>
#include <string>

#include "s3rec/ahe.hpp"
#include "s3rec/mpcshare.hpp"
#include "s3rec/pir.hpp"
#include "s3rec/sparsela.hpp"
#include "s3rec/transport.hpp"

namespace s3rec {

// Per-party grid of additive shares; reconstructs elementwise to the
// plaintext matrix mod 2^64.
struct SharedMatrix {
  size_t rows = 0, cols = 0;
  std::vector<Share> shares;  // row-major
  uint32_t scale = 0;

  Share& at(size_t r, size_t c) { return shares[r * cols + c]; }
  const Share& at(size_t r, size_t c) const { return shares[r * cols + c]; }
};

SharedMatrix shared_add(const SharedMatrix& a, const SharedMatrix& b);

// Local probabilistic truncation of every share from scale `from_bits`
// down to `from_bits - f`.
SharedMatrix shared_truncate(const SharedMatrix& m, int f, int party_id);

// Opens a shared matrix toward one party (output phase).
std::optional<RingMatrix> reconstruct(PartySession& session, const SharedMatrix& m, int to);

// What one protocol run cost this party. Byte columns are payload bytes per
// phase (frame headers excluded); the closed-form formulas below are stated
// over these.
struct ProtocolReport {
  std::string protocol;  // dense | insensitive | sensitive
  std::string mode;      // pir | full-transfer (sensitive only)
  std::string pir_backend;
  size_t k = 0, m = 0, t = 0, distinct_rows = 0;
  size_t triples_consumed = 0;
  size_t scalar_muls = 0;
  size_t pir_queries = 0;
  // Matrix-entry ciphertexts this party emitted: k*m masked results from
  // P_1; k*distinct (pir) or k*m (full-transfer) retrieved entries from P_0.
  size_t ciphertexts_sent = 0;
  std::array<uint64_t, kNumPhases> payload_bytes{};
  std::array<uint64_t, kNumPhases> total_bytes{};

  uint64_t online_payload() const {
    return payload_bytes[1] + payload_bytes[2] + payload_bytes[3];
  }
  uint64_t compute_payload() const { return payload_bytes[2]; }
  std::string to_text() const;
};

// Closed-form communication predictions (payload bytes per party, compute
// phase) used by bench as assertions, not estimates.
inline uint64_t predict_dense_compute_bytes(size_t k, size_t m) { return 16 * k * m * m; }
inline uint64_t predict_insensitive_compute_bytes(size_t k, size_t t) { return 16 * k * t; }

// Dense-dense product of Fig.-1 shape: X (k x m) held by P_0, Y (m x m)
// held by P_1, result shared. Consumes exactly k*m^2 triples; each party
// sends 16*k*m^2 payload bytes in the compute phase.
struct MatmulDims {
  size_t k = 0;
  size_t m = 0;
  uint32_t x_scale = 0;
  uint32_t y_scale = 0;
};

SharedMatrix matmul_dense(PartySession& session, MatmulDims dims, const RingMatrix* x,
                          const RingMatrix* y, TripleStore& triples,
                          ProtocolReport* report = nullptr);

// Case 1, insensitive sparsity: the support l_y is public, values are not.
// Both parties pass the same public support (digest-checked); P_1's sparse
// matrix must live exactly on it. Consumes k*t triples, 16*k*t compute
// bytes; input-phase sharing covers only bin contents (k*t values from P_0,
// t from P_1).
SharedMatrix matmul_insensitive(PartySession& session, MatmulDims dims,
                                const std::vector<Loc>& public_support, const RingMatrix* x,
                                const SparseMatrix<RingElement>* y, TripleStore& triples,
                                ProtocolReport* report = nullptr);

enum class SensitiveMode { Pir, FullTransfer };

struct SensitiveOptions {
  SensitiveMode mode = SensitiveMode::Pir;
  PirBackend pir_backend = PirBackend::Plain;
  int sigma = 40;  // statistical masking bits
  // Pad the query count up to ceil(alpha_pub * m) dummy retrievals to
  // flatten the distinct-row leakage; 0 disables padding.
  double alpha_pub = 0.0;
};

// Case 2, sensitive sparsity: P_1 keeps both l_y and v_y private. P_0
// encrypts X under its AHE key; P_1 either retrieves the needed columns by
// PIR (one query per distinct nonzero row) or receives the whole encrypted
// matrix (full transfer), then returns k*m masked homomorphic inner
// products that decrypt to P_0's shares.
struct SensitiveInputsP0 {
  const RingMatrix* x = nullptr;
  const AheKeyPair* key = nullptr;
  RandomStream* rng = nullptr;
};
struct SensitiveInputsP1 {
  const SparseMatrix<RingElement>* y = nullptr;
  const AheKeyPair* pir_client_key = nullptr;  // only for the ahe-linear backend
  RandomStream* rng = nullptr;
};

SharedMatrix matmul_sensitive(PartySession& session, MatmulDims dims,
                              const SensitiveOptions& options, const SensitiveInputsP0* p0,
                              const SensitiveInputsP1* p1, ProtocolReport* report = nullptr);

// The composed social-term protocol of the training loop:
//   [R0] = matmul_insensitive(gamma*U/2, D^T + E^T)
//   [R1] = matmul_sensitive(-gamma*U, S^T)
//   return Rec([R0] + [R1]) to P_0, decoded at scale 2f.
// P_0 provides U and gamma; P_1 provides D, E, S. Requires k*m triples.
struct StMpcInputsP0 {
  const RealMatrix* u = nullptr;  // k x m
  const AheKeyPair* key = nullptr;
  RandomStream* rng = nullptr;
};
struct StMpcInputsP1 {
  const DiagonalMatrix<double>* d = nullptr;
  const DiagonalMatrix<double>* e = nullptr;
  const SparseMatrix<double>* s = nullptr;  // m x m
  const AheKeyPair* pir_client_key = nullptr;
  RandomStream* rng = nullptr;
};

struct StMpcReport {
  ProtocolReport insensitive;
  ProtocolReport sensitive;
  std::array<uint64_t, kNumPhases> payload_bytes{};  // whole st_mpc call
};

// Returns the plaintext social term at P_0 (k x m); an empty matrix at P_1.
RealMatrix st_mpc(PartySession& session, double gamma, MatmulDims dims,
                  const FixedPointCodec& codec, const SensitiveOptions& options,
                  const StMpcInputsP0* p0, const StMpcInputsP1* p1, TripleStore& triples,
                  StMpcReport* report = nullptr);

}  // namespace s3rec
