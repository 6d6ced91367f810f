// s3rec command-line tool: data generation, offline provisioning, training
// (single-process and two-party), and the protocol benchmark harness.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "s3rec/bench.hpp"
#include "s3rec/dataio.hpp"
#include "s3rec/recommender.hpp"

using namespace s3rec;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

// Every output artifact carries the resolved configuration, so reruns are
// auditable and byte-reproducible.
std::vector<std::string> config_lines(const CLI::App& cmd) {
  std::vector<std::string> lines;
  std::istringstream dump(const_cast<CLI::App&>(cmd).config_to_str(true, false));
  std::string line;
  while (std::getline(dump, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

std::string config_text(const CLI::App& cmd) {
  std::string out;
  for (const auto& l : config_lines(cmd)) {
    out += l;
    out += '\n';
  }
  return out;
}

void write_metrics_file(const std::string& path, const std::string& config,
                        const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path + " for writing");
  json header;
  header["type"] = "config";
  header["config"] = config;
  out << header.dump() << '\n';
  for (const auto& em : metrics) {
    json rec;
    rec["type"] = "epoch";
    rec["epoch"] = em.epoch;
    rec["objective"] = em.objective;
    rec["train_rmse"] = em.train_rmse;
    rec["test_rmse"] = std::isnan(em.test_rmse) ? json() : json(em.test_rmse);
    rec["social_term_dev"] =
        std::isnan(em.social_term_dev) ? json() : json(em.social_term_dev);
    rec["bytes"] = {{"offline", em.payload_bytes[0]},
                    {"input", em.payload_bytes[1]},
                    {"compute", em.payload_bytes[2]},
                    {"output", em.payload_bytes[3]}};
    out << rec.dump() << '\n';
  }
}

TrainMode parse_mode(const std::string& mode) {
  if (mode == "mf") return TrainMode::Mf;
  if (mode == "soreg") return TrainMode::Soreg;
  if (mode == "s3rec") return TrainMode::S3Rec;
  throw ConfigError("unknown mode '" + mode + "'");
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Flat `key = value` config support: entries become --key=value arguments
// inserted ahead of the explicit flags, and only for keys the command line
// does not already set, so flags override the file. Unknown keys surface
// as unknown-option errors.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  std::string config_path;
  size_t config_at = 0;
  for (size_t i = 1; i < args.size(); i++) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
      config_at = i;
      args.erase(args.begin() + i, args.begin() + i + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      config_at = i;
      args.erase(args.begin() + i);
      break;
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw UsageError("cannot open config file " + config_path);
  std::vector<std::string> injected;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError(config_path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ParseError(config_path + ":" + std::to_string(line_no) + ": empty key");
    }
    std::string flag = "--" + key;
    bool overridden = false;
    for (size_t i = 1; i < args.size(); i++) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (!overridden) injected.push_back(flag + "=" + value);
  }
  args.insert(args.begin() + static_cast<long>(config_at), injected.begin(), injected.end());
  return args;
}

struct GenDataArgs {
  std::string out_dir;
  SynthConfig synth_cfg;
  double rate = 1.0;
};

int cmd_gen_data(const CLI::App& cmd, const GenDataArgs& args) {
  auto [data, social] = synth(args.synth_cfg);
  if (args.rate < 1.0) social = sample_social(social, args.rate, args.synth_cfg.seed + 1);
  fs::create_directories(args.out_dir);
  auto lines = config_lines(cmd);
  write_ratings_tsv(args.out_dir + "/ratings.tsv", data, lines);
  write_social_tsv(args.out_dir + "/social.tsv", social, data.user_ids, lines);
  write_id_file(args.out_dir + "/users.tsv", data.user_ids, lines);
  write_id_file(args.out_dir + "/items.tsv", data.item_ids, lines);
  std::cout << "wrote " << data.ratings.size() << " ratings (" << data.num_users << " users, "
            << data.num_items << " items), " << social.nnz() << " social pairs to "
            << args.out_dir << "\n";
  return 0;
}

struct DealerArgs {
  std::string out_dir;
  size_t count = 0;
  uint64_t seed = 1;
  int ahe_bits = 2048;
  bool write_keys = true;
  // sizing check inputs
  size_t k = 0, m = 0, t = 0, epochs = 1;
  std::string protocol;  // dense | insensitive | "" (skip check)
};

int cmd_dealer(const CLI::App& cmd, const DealerArgs& args) {
  if (!args.protocol.empty()) {
    size_t needed = 0;
    std::string formula;
    if (args.protocol == "dense") {
      needed = args.k * args.m * args.m * args.epochs;
      formula = "k*m^2 = " + std::to_string(args.k) + "*" + std::to_string(args.m) + "^2 over " +
                std::to_string(args.epochs) + " call(s)";
    } else if (args.protocol == "insensitive") {
      needed = args.k * args.t * args.epochs;
      formula = "k*t = " + std::to_string(args.k) + "*" + std::to_string(args.t) + " over " +
                std::to_string(args.epochs) + " call(s)";
    } else {
      throw ConfigError("sizing check supports protocol dense|insensitive");
    }
    if (args.count < needed) {
      throw ConfigError("count " + std::to_string(args.count) + " is insufficient: " + formula +
                        " requires " + std::to_string(needed) + " triples");
    }
  }
  fs::create_directories(args.out_dir);
  auto [t0, t1] = dealer_generate(args.count, args.seed);
  write_triple_file(args.out_dir + "/party0.triples", t0);
  write_triple_file(args.out_dir + "/party1.triples", t1);
  std::ofstream cfg(args.out_dir + "/dealer.config");
  cfg << config_text(cmd);
  uint64_t offline_bytes = 24 * args.count;
  std::cout << "wrote " << args.count << " triples per party (offline bytes per store: "
            << offline_bytes << ")\n";
  if (args.write_keys) {
    AheKeyPair kp = ahe_keygen(args.ahe_bits, args.seed ^ 0xa4e5u);
    write_keypair_files(args.out_dir + "/ahe.pk", args.out_dir + "/ahe.sk", kp);
    std::cout << "wrote " << args.ahe_bits << "-bit AHE key pair\n";
  }
  return 0;
}

struct KeygenArgs {
  std::string out_prefix;
  int bits = 2048;
  uint64_t seed = 1;
};

int cmd_keygen(const CLI::App&, const KeygenArgs& args) {
  AheKeyPair kp = ahe_keygen(args.bits, args.seed);
  write_keypair_files(args.out_prefix + ".pk", args.out_prefix + ".sk", kp);
  std::cout << "wrote " << args.out_prefix << ".pk and " << args.out_prefix << ".sk\n";
  return 0;
}

struct TrainArgs {
  std::string ratings_path, social_path, users_path, items_path;
  std::string mode = "soreg";
  std::string out_dir = ".";
  std::string metrics_path;
  int min_interactions = 0;
  size_t folds = 0;  // 0: no held-out test set
  size_t test_fold = 0;
  TrainConfig config;
  // s3rec options
  int party = -1;  // -1: both in-process
  std::string transport = "inproc";
  std::string host = "127.0.0.1";
  uint16_t port = 7100;
  int timeout_ms = 30000;
  unsigned latency_us = 0;  // artificial per-write latency, inproc only
  std::string triples_path, pk_path, sk_path;
  std::string sensitive_mode = "pir";
  std::string pir_backend = "plain";
  int ahe_bits = 2048;
};

void report_transport_failure(const PartySession& session, const TransportError& err) {
  const auto& st = session.stats();
  std::cerr << "transport failure at party " << session.party_id() << ": " << err.what()
            << "\n  bytes sent so far:";
  for (int p = 0; p < kNumPhases; p++) {
    std::cerr << " " << kPhaseNames[p] << "=" << st.bytes_sent[p];
  }
  std::cerr << "\n";
}

int cmd_train(const CLI::App& cmd, TrainArgs& args) {
  TrainConfig& config = args.config;
  config.mode = parse_mode(args.mode);
  if (args.sensitive_mode != "pir" && args.sensitive_mode != "full-transfer") {
    throw ConfigError("sensitive-mode must be pir or full-transfer");
  }
  if (args.pir_backend != "plain" && args.pir_backend != "ahe-linear") {
    throw ConfigError("pir-backend must be plain or ahe-linear");
  }
  config.sensitive_mode =
      args.sensitive_mode == "full-transfer" ? SensitiveMode::FullTransfer : SensitiveMode::Pir;
  config.pir_backend = args.pir_backend == "ahe-linear" ? PirBackend::AheLinear : PirBackend::Plain;

  std::string cfg_text = config_text(cmd);
  fs::create_directories(args.out_dir);
  std::string metrics_path =
      args.metrics_path.empty() ? args.out_dir + "/metrics.jsonl" : args.metrics_path;
  std::string model_path = args.out_dir + "/model.bin";

  if (config.mode != TrainMode::S3Rec) {
    auto [data, social] = load_datasets(args.ratings_path, args.social_path, args.min_interactions);
    std::vector<RatingTriple> train = data.ratings, test;
    if (args.folds > 1) {
      auto split = split_fold(data, make_folds(data.ratings.size(), args.folds, config.seed),
                              args.test_fold);
      train = std::move(split.train);
      test = std::move(split.test);
    }
    TrainResult result = train_plain(data, train, test, social, config);
    write_model_file(model_path, result.model, cfg_text);
    write_metrics_file(metrics_path, cfg_text, result.metrics);
    std::cout << "train_rmse = " << result.metrics.back().train_rmse << "\n";
    if (!test.empty()) std::cout << "test_rmse = " << result.metrics.back().test_rmse << "\n";
    return 0;
  }

  // s3rec: two parties over a channel.
  bool inproc = args.transport == "inproc";
  if (!inproc && args.transport != "tcp") throw ConfigError("transport must be inproc or tcp");
  if (!inproc && args.party != 0 && args.party != 1) {
    throw ConfigError("tcp transport needs --party 0 or --party 1");
  }

  // Provisioning: loaded from files when given, else co-derived from the
  // seed, dealer-style (both parties derive consistent stores).
  auto load_or_generate_triples = [&](int party, size_t needed) {
    if (!args.triples_path.empty()) return read_triple_file(args.triples_path);
    auto [t0, t1] = dealer_generate(needed, config.seed ^ 0x3717135ULL);
    return party == 0 ? std::move(t0) : std::move(t1);
  };

  if (inproc) {
    auto [data, social] = load_datasets(args.ratings_path, args.social_path, args.min_interactions);
    std::vector<RatingTriple> train = data.ratings, test;
    if (args.folds > 1) {
      auto split = split_fold(data, make_folds(data.ratings.size(), args.folds, config.seed),
                              args.test_fold);
      train = std::move(split.train);
      test = std::move(split.test);
    }
    size_t m = data.num_users, n = data.num_items;
    size_t needed = config.gamma != 0.0 ? secure_triples_needed(config.k, m, config.epochs) : 0;
    auto [s0, s1] =
        make_inproc_sessions(config.seed + 100, config.seed + 101, args.latency_us);
    TripleStore t0 = load_or_generate_triples(0, needed);
    TripleStore t1 = load_or_generate_triples(1, needed);
    AheKeyPair kp;
    if (config.gamma != 0.0) {
      kp = args.pk_path.empty() ? ahe_keygen(args.ahe_bits, config.seed ^ 0xa4e5u)
                                : read_keypair_files(args.pk_path, args.sk_path);
    }
    AheKeyPair pir_key;
    bool want_pir_key = config.pir_backend == PirBackend::AheLinear && config.gamma != 0.0;
    if (want_pir_key) pir_key = ahe_keygen(args.ahe_bits, config.seed ^ 0x9187u);
    RandomStream rng0(config.seed + 200), rng1(config.seed + 201);

    SparseMatrix<double> s_plain = social.to_sparse();
    TrainResult result;
    run_protocol(*s0, *s1,
                 [&] {
                   SecureTrainP0 in0{&data, &train, &test, &kp, &rng0,
                                     [&](const RealMatrix& u) {
                                       return grad_u_social(u, s_plain, config.gamma);
                                     }};
                   result = train_secure(*s0, m, n, config, t0, &in0, nullptr);
                 },
                 [&] {
                   SecureTrainP1 in1{&social, want_pir_key ? &pir_key : nullptr, &rng1};
                   train_secure(*s1, m, n, config, t1, nullptr, &in1);
                 });
    write_model_file(model_path, result.model, cfg_text);
    write_metrics_file(metrics_path, cfg_text, result.metrics);
    std::cout << "train_rmse = " << result.metrics.back().train_rmse << "\n";
    if (!test.empty()) std::cout << "test_rmse = " << result.metrics.back().test_rmse << "\n";
    if (config.gamma != 0.0) {
      std::cout << "final_social_term_dev = " << result.metrics.back().social_term_dev << "\n";
    }
    return 0;
  }

  // tcp, one party per process. Dimensions come from the shared id files.
  if (args.users_path.empty() || args.items_path.empty()) {
    throw ConfigError("tcp s3rec runs need --users and --items mapping files");
  }
  auto users = read_id_file(args.users_path);
  auto items = read_id_file(args.items_path);
  size_t m = users.size(), n = items.size();
  size_t needed = config.gamma != 0.0 ? secure_triples_needed(config.k, m, config.epochs) : 0;

  std::unique_ptr<PartySession> session;
  try {
    if (args.party == 0) {
      session = std::make_unique<PartySession>(
          0, listen_tcp(args.host, args.port, args.timeout_ms), config.seed + 100);
    } else {
      session = std::make_unique<PartySession>(
          1, connect_tcp(args.host, args.port, args.timeout_ms), config.seed + 101);
    }
  } catch (const TransportError& err) {
    std::cerr << "transport failure while connecting (party " << args.party << "): " << err.what()
              << "\n";
    return 1;
  }

  try {
    TripleStore triples = load_or_generate_triples(args.party, needed);
    if (args.party == 0) {
      RatingDataset data = load_ratings_fixed(args.ratings_path, users, items);
      std::vector<RatingTriple> train = data.ratings, test;
      if (args.folds > 1) {
        auto split = split_fold(data, make_folds(data.ratings.size(), args.folds, config.seed),
                                args.test_fold);
        train = std::move(split.train);
        test = std::move(split.test);
      }
      AheKeyPair kp;
      if (config.gamma != 0.0) {
        kp = args.pk_path.empty() ? ahe_keygen(args.ahe_bits, config.seed ^ 0xa4e5u)
                                  : read_keypair_files(args.pk_path, args.sk_path);
      }
      RandomStream rng(config.seed + 200);
      SecureTrainP0 in0{&data, &train, &test, &kp, &rng, {}};
      TrainResult result = train_secure(*session, m, n, config, triples, &in0, nullptr);
      write_model_file(model_path, result.model, cfg_text);
      write_metrics_file(metrics_path, cfg_text, result.metrics);
      std::cout << "train_rmse = " << result.metrics.back().train_rmse << "\n";
    } else {
      SocialDataset social = load_social_fixed(args.social_path, users);
      AheKeyPair pir_key;
      bool want_pir_key = config.pir_backend == PirBackend::AheLinear && config.gamma != 0.0;
      if (want_pir_key) pir_key = ahe_keygen(args.ahe_bits, config.seed ^ 0x9187u);
      RandomStream rng(config.seed + 201);
      SecureTrainP1 in1{&social, want_pir_key ? &pir_key : nullptr, &rng};
      TrainResult result = train_secure(*session, m, n, config, triples, nullptr, &in1);
      write_metrics_file(metrics_path, cfg_text, result.metrics);
    }
  } catch (const TransportError& err) {
    report_transport_failure(*session, err);
    return 1;
  }
  return 0;
}

struct BenchArgs {
  std::string out_csv = "bench.csv";
  uint64_t seed = 1;
  size_t k = 4, m = 16;
  double alpha = 0.2;
  std::vector<size_t> k_grid{10, 15, 20};
  size_t k_grid_m = 16;
  size_t k_grid_sensitive_m = 8;
  std::vector<double> rates{0.4, 0.6, 0.8};
  size_t sparsity_m = 24;
  int ahe_bits = 2048;
};

int cmd_bench(const CLI::App& cmd, const BenchArgs& args) {
  BenchContext ctx = BenchContext::make(args.seed, args.ahe_bits);
  std::vector<BenchRow> rows = bench_protocols(ctx, args.k, args.m, args.alpha);
  auto grid = bench_k_grid(ctx, args.k_grid, args.k_grid_m, args.k_grid_sensitive_m);
  rows.insert(rows.end(), grid.begin(), grid.end());

  auto points = bench_sparsity(ctx, args.k, args.sparsity_m, args.rates);
  for (const auto& p : points) {
    BenchRow row;
    row.protocol = "social-term";
    row.k = args.k;
    row.m = args.sparsity_m;
    row.t = p.realized_t;
    row.mode = "pir";
    row.measured_bytes = p.online_bytes;
    row.predicted_bytes = p.predicted_bytes;
    rows.push_back(row);
  }

  std::ofstream out(args.out_csv);
  if (!out) throw UsageError("cannot open " + args.out_csv + " for writing");
  for (const auto& line : config_lines(cmd)) out << "# " << line << "\n";
  out << bench_csv_header() << "\n";
  bool all_ok = true;
  for (const auto& row : rows) {
    out << bench_row_csv(row) << "\n";
    all_ok = all_ok && row.ok();
  }
  std::cout << bench_table(rows);

  std::vector<double> ts, bytes;
  for (const auto& p : points) {
    ts.push_back(static_cast<double>(p.realized_t));
    bytes.push_back(static_cast<double>(p.online_bytes));
  }
  double r2 = linear_r2(ts, bytes);
  bool dense_constant = true;
  for (const auto& p : points) {
    dense_constant = dense_constant && p.dense_bytes == points[0].dense_bytes;
  }
  std::cout << "sparsity scaling: R^2(online bytes vs t) = " << r2
            << (dense_constant ? ", dense bytes constant" : ", DENSE BYTES MOVED") << "\n";
  all_ok = all_ok && r2 > 0.999 && dense_constant;

  if (!all_ok) {
    std::cerr << "bench: measured communication deviates from the closed-form prediction\n";
    return 1;
  }
  std::cout << "all measured byte counts match predictions\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-party secure social recommendation toolkit"};
  app.require_subcommand(1);

  GenDataArgs gen_args;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic correlated dataset");
  gen->add_option("--out-dir", gen_args.out_dir, "output directory")->required();
  gen->add_option("--m", gen_args.synth_cfg.m, "users")->capture_default_str();
  gen->add_option("--n", gen_args.synth_cfg.n, "items")->capture_default_str();
  gen->add_option("--k-true", gen_args.synth_cfg.k_true, "ground-truth latent dim")
      ->capture_default_str();
  gen->add_option("--alpha-social", gen_args.synth_cfg.alpha_social, "social density")
      ->capture_default_str();
  gen->add_option("--noise-sd", gen_args.synth_cfg.noise_sd, "rating noise sd")
      ->capture_default_str();
  gen->add_option("--rating-density", gen_args.synth_cfg.rating_density, "rating density")
      ->capture_default_str();
  gen->add_option("--seed", gen_args.synth_cfg.seed, "rng seed")->capture_default_str();
  gen->add_option("--rate", gen_args.rate, "social sampling rate")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();

  DealerArgs dealer_args;
  CLI::App* dealer = app.add_subcommand("dealer", "provision beaver triples and AHE keys");
  dealer->add_option("--out-dir", dealer_args.out_dir, "output directory")->required();
  dealer->add_option("--count", dealer_args.count, "triples per party")->required();
  dealer->add_option("--seed", dealer_args.seed, "rng seed")->capture_default_str();
  dealer->add_option("--ahe-bits", dealer_args.ahe_bits, "AHE modulus bits")
      ->capture_default_str();
  dealer->add_flag("!--no-keys", dealer_args.write_keys, "skip AHE key generation");
  dealer->add_option("--protocol", dealer_args.protocol, "sizing check: dense|insensitive");
  dealer->add_option("--k", dealer_args.k, "sizing: latent dim");
  dealer->add_option("--m", dealer_args.m, "sizing: users");
  dealer->add_option("--t", dealer_args.t, "sizing: sparse nonzeros");
  dealer->add_option("--epochs", dealer_args.epochs, "sizing: protocol calls")
      ->capture_default_str();

  KeygenArgs keygen_args;
  CLI::App* keygen = app.add_subcommand("keygen", "generate an AHE key pair");
  keygen->add_option("--out-prefix", keygen_args.out_prefix, "output path prefix")->required();
  keygen->add_option("--bits", keygen_args.bits, "modulus bits (2048 or 3072)")
      ->capture_default_str();
  keygen->add_option("--seed", keygen_args.seed, "rng seed")->capture_default_str();

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train mf, soreg, or the two-party s3rec");
  train->add_option("--ratings", train_args.ratings_path, "ratings TSV");
  train->add_option("--social", train_args.social_path, "social TSV");
  train->add_option("--users", train_args.users_path, "user id mapping file (tcp s3rec)");
  train->add_option("--items", train_args.items_path, "item id mapping file (tcp s3rec)");
  train->add_option("--mode", train_args.mode, "mf | soreg | s3rec")->capture_default_str();
  train->add_option("--out-dir", train_args.out_dir, "output directory")->capture_default_str();
  train->add_option("--metrics", train_args.metrics_path, "metrics JSONL path override");
  train->add_option("--min-interactions", train_args.min_interactions, "preprocessing threshold")
      ->capture_default_str();
  train->add_option("--folds", train_args.folds, "cross-validation folds (0: train on all)")
      ->capture_default_str();
  train->add_option("--test-fold", train_args.test_fold, "held-out fold index")
      ->capture_default_str();
  train->add_option("--k", train_args.config.k, "latent dimension")->capture_default_str();
  train->add_option("--lambda", train_args.config.lambda, "regularizer")->capture_default_str();
  train->add_option("--gamma", train_args.config.gamma, "social strength")->capture_default_str();
  train->add_option("--theta", train_args.config.theta, "learning rate")->capture_default_str();
  train->add_option("--epochs", train_args.config.epochs, "epoch count T")->capture_default_str();
  train->add_option("--f", train_args.config.frac_bits, "fixed-point fraction bits")
      ->capture_default_str();
  train->add_option("--seed", train_args.config.seed, "rng seed")->capture_default_str();
  train->add_option("--party", train_args.party, "0 or 1 (tcp mode)");
  train->add_option("--transport", train_args.transport, "inproc | tcp")->capture_default_str();
  train->add_option("--host", train_args.host, "tcp host")->capture_default_str();
  train->add_option("--port", train_args.port, "tcp port")->capture_default_str();
  train->add_option("--timeout-ms", train_args.timeout_ms, "connect/accept timeout")
      ->capture_default_str();
  train->add_option("--latency-us", train_args.latency_us,
                    "artificial per-write latency on the inproc transport")
      ->capture_default_str();
  train->add_option("--triples", train_args.triples_path, "triple store file for this party");
  train->add_option("--pk", train_args.pk_path, "AHE public key file (party 0)");
  train->add_option("--sk", train_args.sk_path, "AHE secret key file (party 0)");
  train->add_option("--sensitive-mode", train_args.sensitive_mode, "pir | full-transfer")
      ->capture_default_str();
  train->add_option("--pir-backend", train_args.pir_backend, "plain | ahe-linear")
      ->capture_default_str();
  train->add_option("--ahe-bits", train_args.ahe_bits, "AHE modulus bits")->capture_default_str();

  BenchArgs bench_args;
  CLI::App* bench = app.add_subcommand("bench", "run the communication benchmark matrix");
  bench->add_option("--out", bench_args.out_csv, "CSV output path")->capture_default_str();
  bench->add_option("--seed", bench_args.seed, "rng seed")->capture_default_str();
  bench->add_option("--k", bench_args.k, "latent dimension")->capture_default_str();
  bench->add_option("--m", bench_args.m, "users")->capture_default_str();
  bench->add_option("--alpha", bench_args.alpha, "sparse density")->capture_default_str();
  bench->add_option("--k-grid", bench_args.k_grid, "k values for the scaling study")
      ->capture_default_str();
  bench->add_option("--k-grid-m", bench_args.k_grid_m, "users for the dense k grid")
      ->capture_default_str();
  bench->add_option("--k-grid-sensitive-m", bench_args.k_grid_sensitive_m,
                    "users for the sensitive k grid")
      ->capture_default_str();
  bench->add_option("--rates", bench_args.rates, "social sampling rates")->capture_default_str();
  bench->add_option("--sparsity-m", bench_args.sparsity_m, "users for the sparsity study")
      ->capture_default_str();
  bench->add_option("--ahe-bits", bench_args.ahe_bits, "AHE modulus bits")->capture_default_str();

  // Registered for --help only; the value is consumed by expand_config_args
  // before CLI11 runs.
  std::string config_dummy;
  for (auto* sub : {gen, dealer, keygen, train, bench}) {
    sub->add_option("--config", config_dummy, "flat key = value config file; flags override");
  }

  std::vector<std::string> args;
  try {
    args = expand_config_args(argc, argv);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  // CLI11 parses back to front.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return cmd_gen_data(*gen, gen_args);
    if (dealer->parsed()) return cmd_dealer(*dealer, dealer_args);
    if (keygen->parsed()) return cmd_keygen(*keygen, keygen_args);
    if (train->parsed()) return cmd_train(*train, train_args);
    if (bench->parsed()) return cmd_bench(*bench, bench_args);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
