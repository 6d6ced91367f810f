#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s3rec/sparsela.hpp"

namespace s3rec {

struct RatingTriple {
  uint32_t user = 0;
  uint32_t item = 0;
  double rating = 0;
};

// Ratings with ids reindexed densely after preprocessing. user_ids/item_ids
// map dense indices back to the original string ids.
struct RatingDataset {
  size_t num_users = 0;
  size_t num_items = 0;
  std::vector<RatingTriple> ratings;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  size_t duplicate_ratings = 0;  // how many (user, item) repeats ingestion dropped

  // Dense R and indicator I, both m x n.
  std::pair<RealMatrix, RealMatrix> to_dense() const;
};

struct SocialPair {
  uint32_t a = 0;
  uint32_t b = 0;
  double weight = 1.0;
};

struct SocialDataset {
  size_t num_users = 0;
  std::vector<SocialPair> pairs;  // deduplicated (weights summed), sorted

  SparseMatrix<double> to_sparse() const;
  size_t nnz() const { return pairs.size(); }

  static SocialDataset from_pairs(size_t num_users, std::vector<SocialPair> raw);
};

// TSV ingestion with the standard preprocessing: users and items with fewer
// than min_interactions ratings are removed, iterating to a fixpoint, then
// ids are reindexed densely (sorted order). Social pairs are restricted to
// surviving users; duplicate pairs are summed. Social edges do not count
// toward the interaction threshold.
std::pair<RatingDataset, SocialDataset> load_datasets(const std::string& ratings_path,
                                                      const std::string& social_path,
                                                      int min_interactions = 15);

// Parsers for a single file (used by load_datasets and the tests).
RatingDataset load_ratings_tsv(const std::string& path);
// Pairs keyed by original string ids; resolution to dense ids happens in
// load_datasets once the surviving user set is known.
struct RawSocialEdge {
  std::string a, b;
  double weight;
};
std::vector<RawSocialEdge> load_social_tsv(const std::string& path);

void write_ratings_tsv(const std::string& path, const RatingDataset& data,
                       const std::vector<std::string>& header_comments = {});
void write_social_tsv(const std::string& path, const SocialDataset& social,
                      const std::vector<std::string>& user_ids,
                      const std::vector<std::string>& header_comments = {});

// Id-universe files (one id per line): the mapping gen-data emits so the
// two platforms of a two-process run index users and items identically.
void write_id_file(const std::string& path, const std::vector<std::string>& ids,
                   const std::vector<std::string>& header_comments = {});
std::vector<std::string> read_id_file(const std::string& path);

// Loads against a fixed id universe: no filtering or reindexing; unknown
// ids are errors.
RatingDataset load_ratings_fixed(const std::string& path, std::vector<std::string> users,
                                 std::vector<std::string> items);
SocialDataset load_social_fixed(const std::string& path, const std::vector<std::string>& users);

double rmse(std::span<const double> pred, std::span<const double> truth);

// Synthetic social-correlated data: ground-truth latents, social neighbors
// blended toward each other so social ties correlate preferences, noisy
// ratings clipped to [0, 5].
struct SynthConfig {
  size_t m = 20;
  size_t n = 30;
  size_t k_true = 4;
  double alpha_social = 0.05;  // social density: exactly round(alpha * m^2) pairs
  double noise_sd = 0.3;
  double rating_density = 0.3;
  uint64_t seed = 1;
};

std::pair<RatingDataset, SocialDataset> synth(const SynthConfig& config);

// Keeps each social pair independently with probability `rate`.
SocialDataset sample_social(const SocialDataset& social, double rate, uint64_t seed);

// Seeded disjoint partition of rating indices; the union of test folds is
// the whole dataset.
struct FoldSplit {
  std::vector<std::vector<size_t>> folds;
};
FoldSplit make_folds(size_t count, size_t num_folds, uint64_t seed);

// Train/test view for one fold.
struct TrainTestSplit {
  std::vector<RatingTriple> train;
  std::vector<RatingTriple> test;
};
TrainTestSplit split_fold(const RatingDataset& data, const FoldSplit& folds, size_t test_fold);

}  // namespace s3rec
