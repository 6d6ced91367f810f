#pragma once

#include <functional>
#include <optional>

#include "s3rec/dataio.hpp"
#include "s3rec/securemm.hpp"

namespace s3rec {

// The regularized factorization objective:
//   1/2 sum I (r - u^T v)^2 + lambda/2 (|U|^2 + |V|^2)
//   + gamma/2 sum_{i,f} s_{i,f} |u_i - u_f|^2
double objective(const RealMatrix& r, const RealMatrix& indicator, const SparseMatrix<double>& s,
                 const RealMatrix& u, const RealMatrix& v, double lambda, double gamma);

// dL/dU splits into the rating term (local to the rating platform) and the
// social term (jointly computed in the secure trainer).
RealMatrix grad_u_rating(const RealMatrix& r, const RealMatrix& indicator, const RealMatrix& u,
                         const RealMatrix& v, double lambda);

// The social component of dL/dU. Evaluates the diagonal-minus-sparse form
// on the symmetrized social matrix S + S^T, which is what makes it the
// analytic gradient of the objective above for arbitrary (possibly
// one-directional) social input.
RealMatrix grad_u_social(const RealMatrix& u, const SparseMatrix<double>& s, double gamma);

RealMatrix grad_u(const RealMatrix& r, const RealMatrix& indicator, const SparseMatrix<double>& s,
                  const RealMatrix& u, const RealMatrix& v, double lambda, double gamma);

RealMatrix grad_v(const RealMatrix& r, const RealMatrix& indicator, const RealMatrix& u,
                  const RealMatrix& v, double lambda);

enum class TrainMode { Mf, Soreg, S3Rec };

struct TrainConfig {
  size_t k = 10;
  double lambda = 0.1;
  double gamma = 0.1;
  double theta = 1e-3;  // learning rate
  size_t epochs = 100;  // T; must stay below the item count in secure mode
  int frac_bits = 20;
  uint64_t seed = 1;
  TrainMode mode = TrainMode::Soreg;
  SensitiveMode sensitive_mode = SensitiveMode::Pir;
  PirBackend pir_backend = PirBackend::Plain;
};

struct EpochMetrics {
  size_t epoch = 0;
  double objective = 0;
  double train_rmse = 0;
  double test_rmse = std::numeric_limits<double>::quiet_NaN();
  // Max-abs deviation of the decoded social term from the plaintext oracle;
  // NaN when no oracle is wired in (plain modes, tcp runs).
  double social_term_dev = std::numeric_limits<double>::quiet_NaN();
  std::array<uint64_t, kNumPhases> payload_bytes{};
};

struct LatentModel {
  RealMatrix u;  // k x m
  RealMatrix v;  // k x n
};

struct TrainResult {
  LatentModel model;
  std::vector<EpochMetrics> metrics;
};

// Seeded initialization shared by the plain and secure trainers so paired
// runs start from identical latents: entries i.i.d. uniform in [0, 1/sqrt(k)).
LatentModel init_model(size_t k, size_t m, size_t n, uint64_t seed);

// Full-batch gradient descent on one machine (modes mf and soreg).
TrainResult train_plain(const RatingDataset& data, const std::vector<RatingTriple>& train,
                        const std::vector<RatingTriple>& test, const SocialDataset& social,
                        const TrainConfig& config);

// The secure trainer: P_0 drives the gradient steps and owns the model;
// P_1 contributes the social term through st_mpc every epoch. Both parties
// call this with the same config over a connected session.
struct SecureTrainP0 {
  const RatingDataset* data = nullptr;
  const std::vector<RatingTriple>* train = nullptr;
  const std::vector<RatingTriple>* test = nullptr;
  const AheKeyPair* key = nullptr;
  RandomStream* rng = nullptr;
  // Optional per-epoch oracle: given U, returns the plaintext social term.
  // In-process harnesses wire this up to record social_term_dev.
  std::function<RealMatrix(const RealMatrix&)> social_oracle;
};

struct SecureTrainP1 {
  const SocialDataset* social = nullptr;
  const AheKeyPair* pir_client_key = nullptr;
  RandomStream* rng = nullptr;
};

// m, n are public dimensions both parties agree on (epochs < n is enforced
// for either party). Returns the model at P_0; P_1 gets metrics only.
TrainResult train_secure(PartySession& session, size_t m, size_t n, const TrainConfig& config,
                         TripleStore& triples, const SecureTrainP0* p0, const SecureTrainP1* p1);

// Triples one secure training run consumes: one insensitive social-term
// call per epoch on the m-cell diagonal support.
inline size_t secure_triples_needed(size_t k, size_t m, size_t epochs) { return k * m * epochs; }

// Model file I/O ("S3MD" magic; embedded config text, then row-major
// doubles).
void write_model_file(const std::string& path, const LatentModel& model,
                      const std::string& config_text = "");
LatentModel read_model_file(const std::string& path, std::string* config_text = nullptr);

// Predictions and RMSE over a triple list.
double rmse_over(const LatentModel& model, std::span<const RatingTriple> triples);

}  // namespace s3rec
