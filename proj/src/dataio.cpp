#include "s3rec/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace s3rec {

namespace {

struct RawRating {
  std::string user, item;
  double rating;
};

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (true) {
    size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

double parse_number(const std::string& s, const std::string& path, size_t line_no) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

std::vector<RawRating> parse_ratings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<RawRating> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'user<TAB>item<TAB>rating'");
    }
    double r = parse_number(fields[2], path, line_no);
    if (!(r >= 0.0 && r <= 5.0)) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": rating " + fields[2] +
                       " outside [0, 5]");
    }
    out.push_back({fields[0], fields[1], r});
  }
  return out;
}

}  // namespace

std::pair<RealMatrix, RealMatrix> RatingDataset::to_dense() const {
  RealMatrix r(num_users, num_items), ind(num_users, num_items);
  for (const auto& t : ratings) {
    r(t.user, t.item) = t.rating;
    ind(t.user, t.item) = 1.0;
  }
  return {std::move(r), std::move(ind)};
}

SparseMatrix<double> SocialDataset::to_sparse() const {
  std::vector<std::tuple<uint32_t, uint32_t, double>> entries;
  entries.reserve(pairs.size());
  for (const auto& p : pairs) entries.emplace_back(p.a, p.b, p.weight);
  return SparseMatrix<double>::from_entries(num_users, num_users, std::move(entries));
}

SocialDataset SocialDataset::from_pairs(size_t num_users, std::vector<SocialPair> raw) {
  for (const auto& p : raw) {
    if (p.a >= num_users || p.b >= num_users) throw UsageError("social pair user out of range");
  }
  std::sort(raw.begin(), raw.end(),
            [](const SocialPair& x, const SocialPair& y) {
              return std::pair(x.a, x.b) < std::pair(y.a, y.b);
            });
  SocialDataset out;
  out.num_users = num_users;
  for (const auto& p : raw) {
    if (!out.pairs.empty() && out.pairs.back().a == p.a && out.pairs.back().b == p.b) {
      out.pairs.back().weight += p.weight;  // duplicates summed
    } else {
      out.pairs.push_back(p);
    }
  }
  return out;
}

std::vector<RawSocialEdge> load_social_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<RawSocialEdge> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    line_no++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if ((fields.size() != 2 && fields.size() != 3) || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 'user<TAB>user[<TAB>weight]'");
    }
    double w = fields.size() == 3 ? parse_number(fields[2], path, line_no) : 1.0;
    out.push_back({fields[0], fields[1], w});
  }
  return out;
}

std::pair<RatingDataset, SocialDataset> load_datasets(const std::string& ratings_path,
                                                      const std::string& social_path,
                                                      int min_interactions) {
  auto raw = parse_ratings(ratings_path);

  // Last write wins for duplicate (user, item).
  std::map<std::pair<std::string, std::string>, double> latest;
  size_t duplicates = 0;
  for (const auto& r : raw) {
    auto key = std::pair(r.user, r.item);
    if (latest.count(key) > 0) duplicates++;
    latest[key] = r.rating;
  }

  // Iterate the interaction filter to a fixpoint.
  std::set<std::string> users, items;
  for (const auto& [key, rating] : latest) {
    users.insert(key.first);
    items.insert(key.second);
  }
  while (true) {
    std::map<std::string, int> user_count, item_count;
    for (const auto& [key, rating] : latest) {
      if (users.count(key.first) == 0 || items.count(key.second) == 0) continue;
      user_count[key.first]++;
      item_count[key.second]++;
    }
    std::set<std::string> next_users, next_items;
    for (const auto& u : users) {
      if (user_count[u] >= min_interactions) next_users.insert(u);
    }
    for (const auto& i : items) {
      if (item_count[i] >= min_interactions) next_items.insert(i);
    }
    bool stable = next_users == users && next_items == items;
    users = std::move(next_users);
    items = std::move(next_items);
    if (stable) break;
  }

  RatingDataset data;
  data.duplicate_ratings = duplicates;
  std::unordered_map<std::string, uint32_t> user_index, item_index;
  for (const auto& u : users) {
    user_index.emplace(u, static_cast<uint32_t>(data.user_ids.size()));
    data.user_ids.push_back(u);
  }
  for (const auto& i : items) {
    item_index.emplace(i, static_cast<uint32_t>(data.item_ids.size()));
    data.item_ids.push_back(i);
  }
  data.num_users = data.user_ids.size();
  data.num_items = data.item_ids.size();
  for (const auto& [key, rating] : latest) {
    auto u = user_index.find(key.first);
    auto i = item_index.find(key.second);
    if (u == user_index.end() || i == item_index.end()) continue;
    data.ratings.push_back({u->second, i->second, rating});
  }

  std::vector<SocialPair> pairs;
  if (!social_path.empty()) {
    for (const auto& e : load_social_tsv(social_path)) {
      auto a = user_index.find(e.a);
      auto b = user_index.find(e.b);
      if (a == user_index.end() || b == user_index.end()) continue;
      pairs.push_back({a->second, b->second, e.weight});
    }
  }
  SocialDataset social = SocialDataset::from_pairs(data.num_users, std::move(pairs));
  return {std::move(data), std::move(social)};
}

RatingDataset load_ratings_tsv(const std::string& path) {
  auto [data, social] = load_datasets(path, "", 0);
  return data;
}

void write_ratings_tsv(const std::string& path, const RatingDataset& data,
                       const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path + " for writing");
  for (const auto& h : header_comments) out << "# " << h << "\n";
  char buf[64];
  for (const auto& r : data.ratings) {
    std::snprintf(buf, sizeof(buf), "%.6g", r.rating);
    out << data.user_ids[r.user] << '\t' << data.item_ids[r.item] << '\t' << buf << '\n';
  }
}

void write_social_tsv(const std::string& path, const SocialDataset& social,
                      const std::vector<std::string>& user_ids,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path + " for writing");
  for (const auto& h : header_comments) out << "# " << h << "\n";
  char buf[64];
  for (const auto& p : social.pairs) {
    std::snprintf(buf, sizeof(buf), "%.6g", p.weight);
    out << user_ids[p.a] << '\t' << user_ids[p.b] << '\t' << buf << '\n';
  }
}

void write_id_file(const std::string& path, const std::vector<std::string>& ids,
                   const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot open " + path + " for writing");
  for (const auto& h : header_comments) out << "# " << h << "\n";
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> read_id_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    ids.push_back(line);
  }
  return ids;
}

namespace {
std::unordered_map<std::string, uint32_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, uint32_t> map;
  for (uint32_t i = 0; i < ids.size(); i++) {
    if (!map.emplace(ids[i], i).second) throw ParseError("duplicate id '" + ids[i] + "'");
  }
  return map;
}
}  // namespace

RatingDataset load_ratings_fixed(const std::string& path, std::vector<std::string> users,
                                 std::vector<std::string> items) {
  auto user_index = index_of(users);
  auto item_index = index_of(items);
  RatingDataset data;
  data.user_ids = std::move(users);
  data.item_ids = std::move(items);
  data.num_users = data.user_ids.size();
  data.num_items = data.item_ids.size();
  std::map<std::pair<uint32_t, uint32_t>, double> latest;
  for (const auto& raw : parse_ratings(path)) {
    auto u = user_index.find(raw.user);
    auto i = item_index.find(raw.item);
    if (u == user_index.end()) throw ParseError(path + ": unknown user id '" + raw.user + "'");
    if (i == item_index.end()) throw ParseError(path + ": unknown item id '" + raw.item + "'");
    auto key = std::pair(u->second, i->second);
    if (latest.count(key) > 0) data.duplicate_ratings++;
    latest[key] = raw.rating;
  }
  for (const auto& [key, rating] : latest) data.ratings.push_back({key.first, key.second, rating});
  return data;
}

SocialDataset load_social_fixed(const std::string& path, const std::vector<std::string>& users) {
  auto user_index = index_of(users);
  std::vector<SocialPair> pairs;
  for (const auto& e : load_social_tsv(path)) {
    auto a = user_index.find(e.a);
    auto b = user_index.find(e.b);
    if (a == user_index.end()) throw ParseError(path + ": unknown user id '" + e.a + "'");
    if (b == user_index.end()) throw ParseError(path + ": unknown user id '" + e.b + "'");
    pairs.push_back({a->second, b->second, e.weight});
  }
  return SocialDataset::from_pairs(users.size(), std::move(pairs));
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw UsageError("rmse: length mismatch");
  if (pred.empty()) throw UsageError("rmse: empty input");
  double acc = 0;
  for (size_t i = 0; i < pred.size(); i++) {
    double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

std::pair<RatingDataset, SocialDataset> synth(const SynthConfig& config) {
  if (config.m == 0 || config.n == 0 || config.k_true == 0) {
    throw UsageError("synth: dimensions must be positive");
  }
  if (!(config.alpha_social > 0.0 && config.alpha_social <= 1.0)) {
    throw UsageError("synth: alpha_social must be in (0, 1]");
  }
  std::mt19937_64 rng(config.seed);
  size_t m = config.m, n = config.n, k = config.k_true;

  double scale = std::sqrt(4.0 / static_cast<double>(k));
  std::uniform_real_distribution<double> latent(0.0, scale);
  RealMatrix u(k, m), v(k, n);
  for (auto& x : u.data()) x = latent(rng);
  for (auto& x : v.data()) x = latent(rng);

  // Exactly round(alpha * m^2) distinct directed pairs (no self-loops).
  size_t target = static_cast<size_t>(std::llround(config.alpha_social * static_cast<double>(m) *
                                                   static_cast<double>(m)));
  target = std::min(target, m * (m - 1));
  std::set<std::pair<uint32_t, uint32_t>> chosen;
  std::uniform_int_distribution<uint32_t> pick(0, static_cast<uint32_t>(m - 1));
  while (chosen.size() < target) {
    uint32_t a = pick(rng), b = pick(rng);
    if (a != b) chosen.emplace(a, b);
  }
  std::vector<SocialPair> pairs;
  pairs.reserve(chosen.size());
  for (const auto& [a, b] : chosen) pairs.push_back({a, b, 1.0});

  // Blend socially linked users' latent vectors (undirected) so ties
  // correlate preferences.
  for (int round = 0; round < 3; round++) {
    std::vector<std::vector<uint32_t>> neighbors(m);
    for (const auto& p : pairs) {
      neighbors[p.a].push_back(p.b);
      neighbors[p.b].push_back(p.a);
    }
    RealMatrix blended = u;
    for (size_t i = 0; i < m; i++) {
      if (neighbors[i].empty()) continue;
      for (size_t d = 0; d < k; d++) {
        double mean = 0;
        for (auto f : neighbors[i]) mean += u(d, f);
        mean /= static_cast<double>(neighbors[i].size());
        blended(d, i) = 0.4 * u(d, i) + 0.6 * mean;
      }
    }
    u = std::move(blended);
  }

  RatingDataset data;
  data.num_users = m;
  data.num_items = n;
  // Zero-padded ids so lexicographic reindexing preserves this order.
  auto padded = [](char prefix, size_t idx, size_t count) {
    size_t width = std::to_string(count - 1).size();
    std::string digits = std::to_string(idx);
    return prefix + std::string(width - digits.size(), '0') + digits;
  };
  for (size_t i = 0; i < m; i++) data.user_ids.push_back(padded('u', i, m));
  for (size_t j = 0; j < n; j++) data.item_ids.push_back(padded('i', j, n));
  std::bernoulli_distribution keep(config.rating_density);
  std::normal_distribution<double> noise(0.0, config.noise_sd);
  for (uint32_t i = 0; i < m; i++) {
    for (uint32_t j = 0; j < n; j++) {
      if (!keep(rng)) continue;
      double dot = 0;
      for (size_t d = 0; d < k; d++) dot += u(d, i) * v(d, j);
      double r = dot + (config.noise_sd > 0 ? noise(rng) : 0.0);
      r = std::clamp(r, 0.0, 5.0);
      data.ratings.push_back({i, j, r});
    }
  }
  return {std::move(data), SocialDataset::from_pairs(m, std::move(pairs))};
}

SocialDataset sample_social(const SocialDataset& social, double rate, uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) throw UsageError("sample rate must be in (0, 1]");
  if (rate == 1.0) return social;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(rate);
  std::vector<SocialPair> kept;
  for (const auto& p : social.pairs) {
    if (keep(rng)) kept.push_back(p);
  }
  return SocialDataset::from_pairs(social.num_users, std::move(kept));
}

FoldSplit make_folds(size_t count, size_t num_folds, uint64_t seed) {
  if (num_folds == 0 || num_folds > count) throw UsageError("fold count must be in [1, count]");
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; i++) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldSplit split;
  split.folds.resize(num_folds);
  for (size_t i = 0; i < count; i++) split.folds[i % num_folds].push_back(order[i]);
  return split;
}

TrainTestSplit split_fold(const RatingDataset& data, const FoldSplit& folds, size_t test_fold) {
  if (test_fold >= folds.folds.size()) throw UsageError("test fold out of range");
  std::vector<bool> in_test(data.ratings.size(), false);
  for (size_t idx : folds.folds[test_fold]) in_test[idx] = true;
  TrainTestSplit out;
  for (size_t i = 0; i < data.ratings.size(); i++) {
    (in_test[i] ? out.test : out.train).push_back(data.ratings[i]);
  }
  return out;
}

}  // namespace s3rec
