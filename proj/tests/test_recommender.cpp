#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "s3rec/recommender.hpp"

using namespace s3rec;

namespace {

struct Instance {
  RealMatrix r, ind;
  SparseMatrix<double> s;
  RealMatrix u, v;
};

Instance random_instance(size_t m, size_t n, size_t k, uint64_t seed, double rating_density = 0.6,
                         double social_density = 0.25) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> rating(0.5, 4.5), latent(-0.8, 0.8), weight(0.2, 1.5);
  std::bernoulli_distribution keep_r(rating_density), keep_s(social_density);
  Instance inst{RealMatrix(m, n), RealMatrix(m, n), SparseMatrix<double>(m, m), RealMatrix(k, m),
                RealMatrix(k, n)};
  for (size_t i = 0; i < m; i++) {
    for (size_t j = 0; j < n; j++) {
      if (keep_r(rng)) {
        inst.r(i, j) = rating(rng);
        inst.ind(i, j) = 1.0;
      }
    }
  }
  std::vector<std::tuple<uint32_t, uint32_t, double>> entries;
  for (uint32_t i = 0; i < m; i++) {
    for (uint32_t f = 0; f < m; f++) {
      if (i != f && keep_s(rng)) entries.emplace_back(i, f, weight(rng));
    }
  }
  inst.s = SparseMatrix<double>::from_entries(m, m, std::move(entries));
  for (auto& x : inst.u.data()) x = latent(rng);
  for (auto& x : inst.v.data()) x = latent(rng);
  return inst;
}

// Independent re-summation of the four objective terms, scalar loops only.
double objective_resum(const Instance& inst, double lambda, double gamma) {
  size_t m = inst.r.rows(), n = inst.r.cols(), k = inst.u.rows();
  double fit = 0;
  for (size_t i = 0; i < m; i++) {
    for (size_t j = 0; j < n; j++) {
      if (inst.ind(i, j) == 0) continue;
      double dot = 0;
      for (size_t d = 0; d < k; d++) dot += inst.u(d, i) * inst.v(d, j);
      fit += 0.5 * (inst.r(i, j) - dot) * (inst.r(i, j) - dot);
    }
  }
  double reg = 0;
  for (double x : inst.u.data()) reg += x * x;
  for (double x : inst.v.data()) reg += x * x;
  double social = 0;
  for (size_t e = 0; e < inst.s.nnz(); e++) {
    size_t i = inst.s.locs()[e].row, f = inst.s.locs()[e].col;
    for (size_t d = 0; d < k; d++) {
      double diff = inst.u(d, i) - inst.u(d, f);
      social += 0.5 * gamma * inst.s.vals()[e] * diff * diff;
    }
  }
  return fit + 0.5 * lambda * reg + social;
}

}  // namespace

TEST_CASE("objective on hand-checked cases") {
  // single rating r = 4 with all-zero latents: only the fit term remains
  RealMatrix r(1, 1, {4.0}), ind(1, 1, {1.0});
  SparseMatrix<double> s(1, 1);
  RealMatrix u(2, 1), v(2, 1);
  CHECK(objective(r, ind, s, u, v, 0.7, 0.3) == doctest::Approx(8.0));

  // no ratings, no social: pure regularizer
  RealMatrix r0(2, 2), ind0(2, 2);
  SparseMatrix<double> s0(2, 2);
  RealMatrix u0(2, 2, {1, 2, 3, 4}), v0(2, 2, {1, 1, 1, 1});
  double expect = 0.5 * 0.4 * (1 + 4 + 9 + 16 + 4);
  CHECK(objective(r0, ind0, s0, u0, v0, 0.4, 0.9) == doctest::Approx(expect));
}

TEST_CASE("objective matches the independent re-summation") {
  for (uint64_t seed = 1; seed <= 10; seed++) {
    auto inst = random_instance(5, 6, 3, seed);
    CHECK(objective(inst.r, inst.ind, inst.s, inst.u, inst.v, 0.3, 0.2) ==
          doctest::Approx(objective_resum(inst, 0.3, 0.2)).epsilon(1e-12));
  }
}

TEST_CASE("gamma = 0 reduces grad_u to the mf gradient") {
  auto inst = random_instance(4, 5, 3, 21);
  RealMatrix with_social = grad_u(inst.r, inst.ind, inst.s, inst.u, inst.v, 0.1, 0.0);
  RealMatrix rating_only = grad_u_rating(inst.r, inst.ind, inst.u, inst.v, 0.1);
  CHECK(max_abs_diff(with_social, rating_only) == 0.0);
}

TEST_CASE("zero model has zero gradient when R is zero on support") {
  RealMatrix r(3, 4), ind(3, 4);
  SparseMatrix<double> s(3, 3);
  RealMatrix u(2, 3), v(2, 4);
  CHECK(max_abs_diff(grad_u(r, ind, s, u, v, 0.5, 0.5), RealMatrix(2, 3)) == 0.0);
  CHECK(max_abs_diff(grad_v(r, ind, u, v, 0.5), RealMatrix(2, 4)) == 0.0);
}

TEST_CASE("perfect fit leaves only the regularizer in grad_v") {
  std::mt19937_64 rng(23);
  size_t m = 4, n = 5, k = 2;
  RealMatrix u(k, m), v(k, n);
  std::uniform_real_distribution<double> latent(-1, 1);
  for (auto& x : u.data()) x = latent(rng);
  for (auto& x : v.data()) x = latent(rng);
  RealMatrix r(m, n), ind(m, n);
  for (size_t i = 0; i < m; i++) {
    for (size_t j = 0; j < n; j++) {
      ind(i, j) = 1.0;
      for (size_t d = 0; d < k; d++) r(i, j) += u(d, i) * v(d, j);
    }
  }
  RealMatrix gv = grad_v(r, ind, u, v, 0.7);
  CHECK(max_abs_diff(gv, 0.7 * v) < 1e-12);
  // and U = 0 likewise gives lambda * V
  RealMatrix zero_u(k, m);
  CHECK(max_abs_diff(grad_v(r, ind, zero_u, v, 0.7), 0.7 * v) < 1e-12);
}

namespace {

// Central finite differences of the objective in every U and V coordinate.
void check_gradients_fd(const Instance& inst, double lambda, double gamma, double h = 1e-6,
                        double rel_tol = 1e-5) {
  RealMatrix gu = grad_u(inst.r, inst.ind, inst.s, inst.u, inst.v, lambda, gamma);
  RealMatrix gv = grad_v(inst.r, inst.ind, inst.u, inst.v, lambda);
  Instance probe = inst;
  auto fd = [&](RealMatrix& target, size_t idx) {
    double saved = target.data()[idx];
    target.data()[idx] = saved + h;
    double up = objective(probe.r, probe.ind, probe.s, probe.u, probe.v, lambda, gamma);
    target.data()[idx] = saved - h;
    double down = objective(probe.r, probe.ind, probe.s, probe.u, probe.v, lambda, gamma);
    target.data()[idx] = saved;
    return (up - down) / (2 * h);
  };
  double scale = 0;
  for (size_t i = 0; i < gu.data().size(); i++) scale = std::max(scale, std::abs(gu.data()[i]));
  for (size_t i = 0; i < gv.data().size(); i++) scale = std::max(scale, std::abs(gv.data()[i]));
  scale = std::max(scale, 1.0);
  for (size_t i = 0; i < gu.data().size(); i++) {
    CHECK(std::abs(gu.data()[i] - fd(probe.u, i)) <= rel_tol * scale);
  }
  for (size_t i = 0; i < gv.data().size(); i++) {
    CHECK(std::abs(gv.data()[i] - fd(probe.v, i)) <= rel_tol * scale);
  }
}

}  // namespace

TEST_CASE("gradients match central finite differences") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 20; trial++) {
    size_t m = 2 + rng() % 5, n = 2 + rng() % 7, k = 1 + rng() % 4;
    auto inst = random_instance(m, n, k, rng());
    check_gradients_fd(inst, 0.1, 0.15);
  }
}

TEST_CASE("social decomposition: grad_u(gamma) - grad_u(0) is the social term") {
  auto inst = random_instance(6, 5, 3, 31);
  RealMatrix with_social = grad_u(inst.r, inst.ind, inst.s, inst.u, inst.v, 0.2, 0.45);
  RealMatrix without = grad_u(inst.r, inst.ind, inst.s, inst.u, inst.v, 0.2, 0.0);
  RealMatrix social = grad_u_social(inst.u, inst.s, 0.45);
  CHECK(max_abs_diff(with_social - without, social) < 1e-12);
}

TEST_CASE("soreg with gamma = 0 walks the same trajectory as mf") {
  SynthConfig sc;
  sc.seed = 33;
  auto [data, social] = synth(sc);
  TrainConfig mf;
  mf.mode = TrainMode::Mf;
  mf.epochs = 20;
  mf.seed = 5;
  TrainConfig soreg = mf;
  soreg.mode = TrainMode::Soreg;
  soreg.gamma = 0.0;
  auto a = train_plain(data, data.ratings, {}, social, mf);
  auto b = train_plain(data, data.ratings, {}, social, soreg);
  CHECK(max_abs_diff(a.model.u, b.model.u) == 0.0);
  CHECK(max_abs_diff(a.model.v, b.model.v) == 0.0);
  for (size_t e = 0; e < a.metrics.size(); e++) {
    CHECK(a.metrics[e].objective == b.metrics[e].objective);
  }
}

TEST_CASE("one epoch matches a hand-rolled gradient step") {
  auto inst = random_instance(2, 3, 2, 35, 1.0, 0.5);
  RatingDataset data;
  data.num_users = 2;
  data.num_items = 3;
  for (uint32_t i = 0; i < 2; i++) {
    for (uint32_t j = 0; j < 3; j++) data.ratings.push_back({i, j, inst.r(i, j)});
  }
  std::vector<SocialPair> pairs;
  for (size_t e = 0; e < inst.s.nnz(); e++) {
    pairs.push_back({inst.s.locs()[e].row, inst.s.locs()[e].col, inst.s.vals()[e]});
  }
  SocialDataset social = SocialDataset::from_pairs(2, std::move(pairs));

  TrainConfig tc;
  tc.mode = TrainMode::Soreg;
  tc.k = 2;
  tc.lambda = 0.3;
  tc.gamma = 0.2;
  tc.theta = 0.01;
  tc.epochs = 1;
  tc.seed = 77;
  auto result = train_plain(data, data.ratings, {}, social, tc);

  LatentModel expect = init_model(2, 2, 3, 77);
  RealMatrix r(2, 3), ind(2, 3);
  for (const auto& t : data.ratings) {
    r(t.user, t.item) = t.rating;
    ind(t.user, t.item) = 1.0;
  }
  RealMatrix gu = grad_u(r, ind, inst.s, expect.u, expect.v, 0.3, 0.2);
  RealMatrix gv = grad_v(r, ind, expect.u, expect.v, 0.3);
  expect.u = expect.u - 0.01 * gu;
  expect.v = expect.v - 0.01 * gv;
  CHECK(max_abs_diff(result.model.u, expect.u) < 1e-14);
  CHECK(max_abs_diff(result.model.v, expect.v) < 1e-14);
}

TEST_CASE("objective decreases monotonically at theta = 1e-3") {
  SynthConfig sc;
  sc.m = 20;
  sc.n = 30;
  sc.seed = 37;
  auto [data, social] = synth(sc);
  TrainConfig tc;
  tc.mode = TrainMode::Soreg;
  tc.theta = 1e-3;
  tc.epochs = 50;
  auto result = train_plain(data, data.ratings, {}, social, tc);
  for (size_t e = 1; e < result.metrics.size(); e++) {
    CHECK(result.metrics[e].objective <= result.metrics[e - 1].objective);
  }
}

TEST_CASE("training errors out on divergence with the epoch index") {
  SynthConfig sc;
  sc.seed = 39;
  auto [data, social] = synth(sc);
  TrainConfig tc;
  tc.mode = TrainMode::Soreg;
  tc.theta = 50.0;  // absurd learning rate
  tc.epochs = 200;
  CHECK_THROWS_AS(train_plain(data, data.ratings, {}, social, tc), TrainingError);
}

TEST_CASE("soreg beats mf on the socially correlated synthetic dataset") {
  // Property stand-in for the paper-scale RMSE improvements: >= 3% relative
  // improvement averaged over 5 seeds.
  double total_improvement = 0;
  for (uint64_t seed = 1; seed <= 5; seed++) {
    SynthConfig sc;
    sc.m = 20;
    sc.n = 30;
    sc.k_true = 4;
    sc.alpha_social = 0.08;
    sc.noise_sd = 0.25;
    sc.rating_density = 0.25;
    sc.seed = seed;
    auto [data, social] = synth(sc);
    FoldSplit folds = make_folds(data.ratings.size(), 4, seed);
    auto split = split_fold(data, folds, 0);

    TrainConfig mf;
    mf.mode = TrainMode::Mf;
    mf.k = 4;
    mf.lambda = 0.1;
    mf.theta = 5e-3;
    mf.epochs = 400;
    mf.seed = seed;
    TrainConfig soreg = mf;
    soreg.mode = TrainMode::Soreg;
    soreg.gamma = 0.8;

    auto mf_run = train_plain(data, split.train, split.test, social, mf);
    auto soreg_run = train_plain(data, split.train, split.test, social, soreg);
    double mf_rmse = mf_run.metrics.back().test_rmse;
    double soreg_rmse = soreg_run.metrics.back().test_rmse;
    total_improvement += (mf_rmse - soreg_rmse) / mf_rmse;
  }
  CHECK(total_improvement / 5.0 >= 0.03);
}

TEST_CASE("secure training with gamma = 0 equals plain mf exactly") {
  SynthConfig sc;
  sc.seed = 41;
  auto [data, social] = synth(sc);
  TrainConfig tc;
  tc.mode = TrainMode::S3Rec;
  tc.gamma = 0.0;
  tc.k = 3;
  tc.epochs = 8;
  tc.seed = 6;

  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] = dealer_generate(0, 43);
  TrainResult secure;
  run_protocol(*s0, *s1,
               [&] {
                 SecureTrainP0 in0{&data, &data.ratings, nullptr, nullptr, nullptr, {}};
                 secure = train_secure(*s0, data.num_users, data.num_items, tc, t0, &in0, nullptr);
               },
               [&] {
                 SecureTrainP1 in1{&social, nullptr, nullptr};
                 train_secure(*s1, data.num_users, data.num_items, tc, t1, nullptr, &in1);
               });

  TrainConfig mf = tc;
  mf.mode = TrainMode::Mf;
  auto plain = train_plain(data, data.ratings, {}, social, mf);
  CHECK(max_abs_diff(secure.model.u, plain.model.u) == 0.0);
  CHECK(max_abs_diff(secure.model.v, plain.model.v) == 0.0);
  CHECK(s0->stats().total_bytes_sent() == 0);  // no protocol traffic at all
}

TEST_CASE("secure training tracks plain soreg within 1e-3") {
  SynthConfig sc;
  sc.m = 20;
  sc.n = 30;
  sc.k_true = 4;
  sc.seed = 45;
  auto [data, social] = synth(sc);

  TrainConfig tc;
  tc.mode = TrainMode::S3Rec;
  tc.k = 4;
  tc.lambda = 0.1;
  tc.gamma = 0.1;
  tc.theta = 1e-3;
  tc.epochs = 10;
  tc.frac_bits = 20;
  tc.seed = 8;

  static AheKeyPair kp = ahe_keygen(2048, 4545);
  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] =
      dealer_generate(secure_triples_needed(tc.k, data.num_users, tc.epochs), 47);

  SparseMatrix<double> s_plain = social.to_sparse();
  TrainResult secure;
  run_protocol(*s0, *s1,
               [&] {
                 RandomStream rng(49);
                 SecureTrainP0 in0{&data, &data.ratings, nullptr, &kp, &rng,
                                   [&](const RealMatrix& u) {
                                     return grad_u_social(u, s_plain, tc.gamma);
                                   }};
                 secure = train_secure(*s0, data.num_users, data.num_items, tc, t0, &in0, nullptr);
               },
               [&] {
                 RandomStream rng(51);
                 SecureTrainP1 in1{&social, nullptr, &rng};
                 train_secure(*s1, data.num_users, data.num_items, tc, t1, nullptr, &in1);
               });

  TrainConfig plain_cfg = tc;
  plain_cfg.mode = TrainMode::Soreg;
  auto plain = train_plain(data, data.ratings, {}, social, plain_cfg);

  CHECK(max_abs_diff(secure.model.u, plain.model.u) < 1e-3);
  CHECK(max_abs_diff(secure.model.v, plain.model.v) < 1e-3);

  double dev_tol = (static_cast<double>(data.num_users) + 1) * std::ldexp(1.0, -tc.frac_bits);
  for (const auto& em : secure.metrics) {
    CHECK(em.social_term_dev == em.social_term_dev);  // not NaN
    CHECK(em.social_term_dev <= dev_tol);
  }
}

TEST_CASE("secure training rejects T >= n") {
  TrainConfig tc;
  tc.mode = TrainMode::S3Rec;
  tc.epochs = 30;
  auto [s0, s1] = make_inproc_sessions();
  auto [t0, t1] = dealer_generate(0, 53);
  SynthConfig sc;
  sc.n = 30;
  auto [data, social] = synth(sc);
  SecureTrainP0 in0{&data, &data.ratings, nullptr, nullptr, nullptr, {}};
  CHECK_THROWS_AS(train_secure(*s0, data.num_users, 30, tc, t0, &in0, nullptr), ConfigError);
}

TEST_CASE("model files round-trip") {
  LatentModel model = init_model(3, 5, 7, 99);
  auto path = std::filesystem::temp_directory_path() / "s3rec_model.bin";
  write_model_file(path.string(), model);
  LatentModel back = read_model_file(path.string());
  CHECK(max_abs_diff(back.u, model.u) == 0.0);
  CHECK(max_abs_diff(back.v, model.v) == 0.0);
  std::filesystem::remove(path);
}
