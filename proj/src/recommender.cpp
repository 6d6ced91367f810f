#include "s3rec/recommender.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>

namespace s3rec {

namespace {

SparseMatrix<double> symmetrize(const SparseMatrix<double>& s) {
  std::vector<std::tuple<uint32_t, uint32_t, double>> entries;
  entries.reserve(2 * s.nnz());
  for (size_t i = 0; i < s.nnz(); i++) {
    entries.emplace_back(s.locs()[i].row, s.locs()[i].col, s.vals()[i]);
    entries.emplace_back(s.locs()[i].col, s.locs()[i].row, s.vals()[i]);
  }
  return SparseMatrix<double>::from_entries(s.rows(), s.cols(), std::move(entries));
}

RealMatrix residual_on_support(const RealMatrix& r, const RealMatrix& indicator,
                               const RealMatrix& u, const RealMatrix& v) {
  size_t m = r.rows(), n = r.cols(), k = u.rows();
  RealMatrix err(m, n);
  for (size_t i = 0; i < m; i++) {
    for (size_t j = 0; j < n; j++) {
      if (indicator(i, j) == 0.0) continue;
      double dot = 0;
      for (size_t d = 0; d < k; d++) dot += u(d, i) * v(d, j);
      err(i, j) = r(i, j) - dot;
    }
  }
  return err;
}

double frobenius_sq(const RealMatrix& a) {
  double acc = 0;
  for (double x : a.data()) acc += x * x;
  return acc;
}

}  // namespace

double objective(const RealMatrix& r, const RealMatrix& indicator, const SparseMatrix<double>& s,
                 const RealMatrix& u, const RealMatrix& v, double lambda, double gamma) {
  if (r.rows() != indicator.rows() || r.cols() != indicator.cols()) {
    throw ShapeError("objective: R and I must agree");
  }
  if (u.cols() != r.rows() || v.cols() != r.cols() || u.rows() != v.rows()) {
    throw ShapeError("objective: latent shapes inconsistent with ratings");
  }
  RealMatrix err = residual_on_support(r, indicator, u, v);
  double fit = 0;
  for (size_t i = 0; i < err.data().size(); i++) {
    if (indicator.data()[i] != 0.0) fit += err.data()[i] * err.data()[i];
  }
  double social = 0;
  size_t k = u.rows();
  for (size_t e = 0; e < s.nnz(); e++) {
    size_t i = s.locs()[e].row, f = s.locs()[e].col;
    double dist = 0;
    for (size_t d = 0; d < k; d++) {
      double diff = u(d, i) - u(d, f);
      dist += diff * diff;
    }
    social += s.vals()[e] * dist;
  }
  return 0.5 * fit + 0.5 * lambda * (frobenius_sq(u) + frobenius_sq(v)) + 0.5 * gamma * social;
}

RealMatrix grad_u_rating(const RealMatrix& r, const RealMatrix& indicator, const RealMatrix& u,
                         const RealMatrix& v, double lambda) {
  size_t m = r.rows(), n = r.cols(), k = u.rows();
  RealMatrix err = residual_on_support(r, indicator, u, v);
  RealMatrix grad(k, m);
  for (size_t d = 0; d < k; d++) {
    for (size_t i = 0; i < m; i++) {
      double acc = 0;
      for (size_t j = 0; j < n; j++) acc += v(d, j) * err(i, j);
      grad(d, i) = -acc + lambda * u(d, i);
    }
  }
  return grad;
}

RealMatrix grad_u_social(const RealMatrix& u, const SparseMatrix<double>& s, double gamma) {
  if (s.rows() != s.cols() || s.rows() != u.cols()) {
    throw ShapeError("grad_u_social: S must be m x m matching U's columns");
  }
  size_t k = u.rows(), m = u.cols();
  RealMatrix grad(k, m);
  if (gamma == 0.0) return grad;
  auto sym = symmetrize(s);
  auto [d, e] = build_d_e(sym);
  // gamma/2 * U (D^T + E^T) - gamma * U * S^T over the symmetrized matrix.
  for (size_t dd = 0; dd < k; dd++) {
    for (size_t i = 0; i < m; i++) grad(dd, i) = 0.5 * gamma * u(dd, i) * (d.diag[i] + e.diag[i]);
  }
  for (size_t idx = 0; idx < sym.nnz(); idx++) {
    // U * S^T column i accumulates u_f weighted by s_{i,f}.
    size_t i = sym.locs()[idx].row, f = sym.locs()[idx].col;
    double w = sym.vals()[idx];
    for (size_t dd = 0; dd < k; dd++) grad(dd, i) -= gamma * w * u(dd, f);
  }
  return grad;
}

RealMatrix grad_u(const RealMatrix& r, const RealMatrix& indicator, const SparseMatrix<double>& s,
                  const RealMatrix& u, const RealMatrix& v, double lambda, double gamma) {
  RealMatrix grad = grad_u_rating(r, indicator, u, v, lambda);
  if (gamma != 0.0) grad = grad + grad_u_social(u, s, gamma);
  return grad;
}

RealMatrix grad_v(const RealMatrix& r, const RealMatrix& indicator, const RealMatrix& u,
                  const RealMatrix& v, double lambda) {
  size_t m = r.rows(), n = r.cols(), k = u.rows();
  RealMatrix err = residual_on_support(r, indicator, u, v);
  RealMatrix grad(k, n);
  for (size_t d = 0; d < k; d++) {
    for (size_t j = 0; j < n; j++) {
      double acc = 0;
      for (size_t i = 0; i < m; i++) acc += u(d, i) * err(i, j);
      grad(d, j) = -acc + lambda * v(d, j);
    }
  }
  return grad;
}

LatentModel init_model(size_t k, size_t m, size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(k)));
  LatentModel model{RealMatrix(k, m), RealMatrix(k, n)};
  for (auto& x : model.u.data()) x = dist(rng);
  for (auto& x : model.v.data()) x = dist(rng);
  return model;
}

double rmse_over(const LatentModel& model, std::span<const RatingTriple> triples) {
  if (triples.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> pred(triples.size()), truth(triples.size());
  size_t k = model.u.rows();
  for (size_t idx = 0; idx < triples.size(); idx++) {
    double dot = 0;
    for (size_t d = 0; d < k; d++) dot += model.u(d, triples[idx].user) * model.v(d, triples[idx].item);
    pred[idx] = dot;
    truth[idx] = triples[idx].rating;
  }
  return rmse(pred, truth);
}

namespace {

std::pair<RealMatrix, RealMatrix> dense_from_triples(size_t m, size_t n,
                                                     std::span<const RatingTriple> triples) {
  RealMatrix r(m, n), ind(m, n);
  for (const auto& t : triples) {
    r(t.user, t.item) = t.rating;
    ind(t.user, t.item) = 1.0;
  }
  return {std::move(r), std::move(ind)};
}

void check_finite(double obj, size_t epoch) {
  if (!std::isfinite(obj)) {
    throw TrainingError("objective diverged at epoch " + std::to_string(epoch));
  }
}

}  // namespace

TrainResult train_plain(const RatingDataset& data, const std::vector<RatingTriple>& train,
                        const std::vector<RatingTriple>& test, const SocialDataset& social,
                        const TrainConfig& config) {
  if (config.mode == TrainMode::S3Rec) {
    throw UsageError("train_plain handles mf and soreg; use train_secure for s3rec");
  }
  size_t m = data.num_users, n = data.num_items;
  double gamma = config.mode == TrainMode::Mf ? 0.0 : config.gamma;
  auto [r, ind] = dense_from_triples(m, n, train);
  SparseMatrix<double> s = gamma != 0.0 ? social.to_sparse() : SparseMatrix<double>(m, m);

  TrainResult result;
  result.model = init_model(config.k, m, n, config.seed);
  for (size_t epoch = 0; epoch < config.epochs; epoch++) {
    RealMatrix gu = grad_u(r, ind, s, result.model.u, result.model.v, config.lambda, gamma);
    RealMatrix gv = grad_v(r, ind, result.model.u, result.model.v, config.lambda);
    result.model.u = result.model.u - config.theta * gu;
    result.model.v = result.model.v - config.theta * gv;

    EpochMetrics em;
    em.epoch = epoch;
    em.objective = objective(r, ind, s, result.model.u, result.model.v, config.lambda, gamma);
    check_finite(em.objective, epoch);
    em.train_rmse = rmse_over(result.model, train);
    em.test_rmse = rmse_over(result.model, test);
    result.metrics.push_back(em);
  }
  return result;
}

TrainResult train_secure(PartySession& session, size_t m, size_t n, const TrainConfig& config,
                         TripleStore& triples, const SecureTrainP0* p0, const SecureTrainP1* p1) {
  if (config.epochs >= n) {
    throw ConfigError("epoch count T = " + std::to_string(config.epochs) +
                      " must stay below the item count n = " + std::to_string(n));
  }
  bool is_p0 = session.party_id() == 0;
  bool social_active = config.gamma != 0.0;
  FixedPointCodec codec(config.frac_bits);
  SensitiveOptions options;
  options.mode = config.sensitive_mode;
  options.pir_backend = config.pir_backend;

  if (social_active && triples.remaining() < secure_triples_needed(config.k, m, config.epochs)) {
    throw ConfigError("triple store holds " + std::to_string(triples.remaining()) +
                      " triples; secure training needs k*m*T = " +
                      std::to_string(secure_triples_needed(config.k, m, config.epochs)));
  }

  TrainResult result;
  MatmulDims dims{config.k, m, 0, 0};

  if (is_p0) {
    if (p0 == nullptr || p0->data == nullptr || p0->train == nullptr) {
      throw UsageError("train_secure: P_0 needs its rating data");
    }
    if (social_active && (p0->key == nullptr || p0->rng == nullptr)) {
      throw UsageError("train_secure: P_0 needs an AHE key pair and randomness");
    }
    auto [r, ind] = dense_from_triples(m, n, *p0->train);
    SparseMatrix<double> no_social(m, m);
    result.model = init_model(config.k, m, n, config.seed);

    for (size_t epoch = 0; epoch < config.epochs; epoch++) {
      auto payload_before = session.stats().payload_sent;
      EpochMetrics em;
      em.epoch = epoch;

      RealMatrix gu = grad_u_rating(r, ind, result.model.u, result.model.v, config.lambda);
      if (social_active) {
        StMpcInputsP0 in0{&result.model.u, p0->key, p0->rng};
        RealMatrix social =
            st_mpc(session, config.gamma, dims, codec, options, &in0, nullptr, triples, nullptr);
        if (p0->social_oracle) {
          em.social_term_dev = max_abs_diff(social, p0->social_oracle(result.model.u));
        }
        gu = gu + social;
      }
      RealMatrix gv = grad_v(r, ind, result.model.u, result.model.v, config.lambda);
      result.model.u = result.model.u - config.theta * gu;
      result.model.v = result.model.v - config.theta * gv;

      // The objective's social component lives at P_1; P_0 logs the terms
      // it can see (rating fit + regularizers).
      em.objective =
          objective(r, ind, no_social, result.model.u, result.model.v, config.lambda, 0.0);
      check_finite(em.objective, epoch);
      em.train_rmse = rmse_over(result.model, *p0->train);
      if (p0->test != nullptr) em.test_rmse = rmse_over(result.model, *p0->test);
      for (int p = 0; p < kNumPhases; p++) {
        em.payload_bytes[p] = session.stats().payload_sent[p] - payload_before[p];
      }
      result.metrics.push_back(em);
    }
  } else {
    if (p1 == nullptr || p1->social == nullptr) {
      throw UsageError("train_secure: P_1 needs its social data");
    }
    if (social_active && p1->rng == nullptr) {
      throw UsageError("train_secure: P_1 needs randomness");
    }
    // Social term inputs are static across epochs: symmetrized S and its
    // row/column sums.
    SparseMatrix<double> sym = symmetrize(p1->social->to_sparse());
    auto [d, e] = build_d_e(sym);

    for (size_t epoch = 0; epoch < config.epochs; epoch++) {
      auto payload_before = session.stats().payload_sent;
      EpochMetrics em;
      em.epoch = epoch;
      if (social_active) {
        StMpcInputsP1 in1{&d, &e, &sym, p1->pir_client_key, p1->rng};
        st_mpc(session, config.gamma, dims, codec, options, nullptr, &in1, triples, nullptr);
      }
      for (int p = 0; p < kNumPhases; p++) {
        em.payload_bytes[p] = session.stats().payload_sent[p] - payload_before[p];
      }
      result.metrics.push_back(em);
    }
  }
  return result;
}

void write_model_file(const std::string& path, const LatentModel& model,
                      const std::string& config_text) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) throw UsageError("cannot open " + path + " for writing");
  auto put_u64 = [&](uint64_t v) { std::fwrite(&v, sizeof(v), 1, f); };
  std::fwrite("S3MD", 1, 4, f);
  put_u64(config_text.size());
  std::fwrite(config_text.data(), 1, config_text.size(), f);
  put_u64(model.u.rows());
  put_u64(model.u.cols());
  put_u64(model.v.cols());
  std::fwrite(model.u.data().data(), sizeof(double), model.u.data().size(), f);
  std::fwrite(model.v.data().data(), sizeof(double), model.v.data().size(), f);
  std::fclose(f);
}

LatentModel read_model_file(const std::string& path, std::string* config_text) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw UsageError("cannot open " + path);
  char magic[4];
  uint64_t config_len = 0;
  bool ok = std::fread(magic, 1, 4, f) == 4 && std::memcmp(magic, "S3MD", 4) == 0 &&
            std::fread(&config_len, sizeof(config_len), 1, f) == 1;
  std::string config(config_len, '\0');
  ok = ok && std::fread(config.data(), 1, config_len, f) == config_len;
  uint64_t k = 0, m = 0, n = 0;
  ok = ok && std::fread(&k, sizeof(k), 1, f) == 1 && std::fread(&m, sizeof(m), 1, f) == 1 &&
       std::fread(&n, sizeof(n), 1, f) == 1;
  if (!ok) {
    std::fclose(f);
    throw ParseError(path + ": not a model file");
  }
  LatentModel model{RealMatrix(k, m), RealMatrix(k, n)};
  ok = std::fread(model.u.data().data(), sizeof(double), k * m, f) == k * m &&
       std::fread(model.v.data().data(), sizeof(double), k * n, f) == k * n;
  std::fclose(f);
  if (!ok) throw ParseError(path + ": truncated model file");
  if (config_text != nullptr) *config_text = std::move(config);
  return model;
}

}  // namespace s3rec
