#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hred/corpus.hpp"
#include "hred/numerics.hpp"

// Count-based suggestion models and the reranking feature stack: query
// adjacency counts, a variable-memory Markov model with suffix back-off,
// string-similarity features, and a pairwise logistic-regression ranker.

namespace hred {

// Consecutive-pair counts from background sessions. Ordered maps keep every
// walk deterministic.
struct AdjIndex {
  std::map<std::string, std::map<std::string, std::int64_t>> successors;
  std::map<std::string, std::int64_t> frequency;  // every query occurrence

  std::int64_t successor_count(const std::string& anchor, const std::string& next) const;
  std::int64_t query_frequency(const std::string& query) const;
};

AdjIndex build_adj(const std::vector<TextSession>& background);

struct AdjCandidate {
  std::string query;
  std::int64_t count = 0;
};

// Successors of the anchor by count descending, ties lexicographic; at most
// `limit` entries, empty when the anchor was never seen.
std::vector<AdjCandidate> adj_candidates(const AdjIndex& index, const std::string& anchor,
                                         std::size_t limit = 20);

void adj_save(const AdjIndex& index, const std::string& path);
AdjIndex adj_load(const std::string& path);

// Variable-memory Markov model over query sequences: a suffix tree over
// reversed contexts up to max_order queries deep. Prediction walks to the
// deepest matching context node, then backs off toward the root until the
// candidate has been seen there; a candidate unseen even with empty context
// gets the uniform fallback 1/|distinct queries|.
class QvmmTree {
 public:
  QvmmTree() = default;

  std::size_t max_order() const { return max_order_; }
  std::int64_t distinct_queries() const { return distinct_queries_; }
  std::int64_t total_observations() const;  // root mass: every query occurrence

  double log_prob(const std::vector<std::string>& context, const std::string& candidate) const;

  // Successor counts at the deepest node matching the context suffix
  // (possibly the root); used by tests and the manifest.
  const std::map<std::string, std::int64_t>& successors_at(
      const std::vector<std::string>& context) const;

  friend QvmmTree build_qvmm(const std::vector<TextSession>& background, std::size_t max_order);
  friend void qvmm_save(const QvmmTree& tree, const std::string& path);
  friend QvmmTree qvmm_load(const std::string& path);

 private:
  struct Node {
    std::map<std::string, std::int64_t> next_counts;
    std::int64_t total = 0;
    std::map<std::string, std::size_t> children;  // keyed by the next-older query
    std::size_t parent = 0;
  };

  std::size_t walk(const std::vector<std::string>& context) const;

  std::vector<Node> nodes_{Node{}};  // nodes_[0] is the empty-context root
  std::size_t max_order_ = 0;
  std::int64_t distinct_queries_ = 0;
};

QvmmTree build_qvmm(const std::vector<TextSession>& background, std::size_t max_order = 3);

inline double qvmm_log_prob(const QvmmTree& tree, const std::vector<std::string>& context,
                            const std::string& candidate) {
  return tree.log_prob(context, candidate);
}

void qvmm_save(const QvmmTree& tree, const std::string& path);
QvmmTree qvmm_load(const std::string& path);

// Unit-cost edit distance over characters.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Jaccard similarity of boundary-padded character trigram sets ("^" + s +
// "$"); two empty strings score 0.
double char_ngram_similarity(std::string_view a, std::string_view b);

// Fixed feature ledger, in vector order:
//   0  candidate-follows-anchor count
//   1  anchor background frequency
//   2  levenshtein(anchor, candidate)
//   3  candidate character length
//   4  candidate word length
//   5  candidate background frequency
//   6-15  trigram Jaccard against the 10 most recent context queries,
//         most recent first, zero-filled when the context is shorter
//   16 mean levenshtein between candidate and all context queries
//   17 variable-memory Markov log-probability of the candidate
// Counts are raw here; the ranker applies its own log(1+x) conditioning.
inline constexpr std::size_t kNumBaseFeatures = 18;
extern const char* const kFeatureNames[kNumBaseFeatures + 1];  // +1: hred_score

Vector extract_features(const std::vector<std::string>& context, const std::string& candidate,
                        const AdjIndex& adj, const QvmmTree& qvmm,
                        std::optional<double> hred_score = std::nullopt);

// One reranking example: feature rows for all candidates plus the index of
// the true next query.
struct RankedExample {
  std::vector<Vector> candidate_features;
  std::vector<std::string> candidate_texts;  // tie-break order
  std::size_t relevant = 0;
};

struct RankerConfig {
  double learning_rate = 0.5;
  std::size_t iterations = 300;
  std::uint64_t seed = 1234;
};

struct RankerModel {
  std::vector<std::string> feature_names;
  Vector weights;  // per feature, applied to conditioned values
  double bias = 0.0;
  std::vector<double> feature_shift;  // conditioning: (log1p(x) or x) - shift
  std::vector<double> feature_scale;  //   ... divided by scale
  std::vector<bool> log_transformed;  // which slots get log(1+x)
  std::size_t training_pairs = 0;
  bool degenerate = false;  // all candidate features identical; weights zeroed
};

// Pairwise logistic regression over (relevant - non-relevant) feature
// differences, full-batch gradient ascent from zero weights. Deterministic.
// Degenerate input (no informative pair) yields zero weights and a warning on
// stderr.
RankerModel train_ranker(const std::vector<RankedExample>& examples,
                         const RankerConfig& config = RankerConfig{});

double ranker_score(const RankerModel& model, const Vector& features);

// Candidate order (indices into the example) by score descending, ties broken
// by candidate text ascending.
std::vector<std::size_t> rank_candidates(const RankerModel& model, const RankedExample& example);

}  // namespace hred
