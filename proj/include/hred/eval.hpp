#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hred/baselines.hpp"
#include "hred/decoding.hpp"

// The three evaluation scenarios (next-query, robust, long-tail), candidate
// reranking, and MRR reporting with session-length buckets.

namespace hred {

struct ScenarioInstance {
  std::vector<std::string> context;     // >= 1 queries; the anchor is context.back()
  std::string target;                   // the true next query
  std::vector<std::string> candidates;  // exactly 20, target at `relevant`
  std::size_t relevant = 0;
  // Adjacency scoring key: the anchor for the next-query scenario, the
  // shortened prefix for long-tail, the possibly-displaced last context query
  // after robust corruption.
  std::string adj_key;
};

void validate_instance(const ScenarioInstance& instance);

// Sessions with >= 2 queries whose anchor yields a full 20-candidate
// adjacency list containing the true next query.
std::vector<ScenarioInstance> build_next_query_scenario(const std::vector<TextSession>& sessions,
                                                        const AdjIndex& adj);

// Copies each instance and inserts one noisy query — drawn from the 100 most
// frequent background queries proportionally to frequency — at a uniformly
// random context position (the anchor slot included). Candidates, target and
// relevant slot are unchanged.
std::vector<ScenarioInstance> build_robust_scenario(const std::vector<ScenarioInstance>& instances,
                                                    const AdjIndex& background, Prng& prng);

// Sessions whose anchor never occurs in the background; the anchor is
// shortened word by word from the right until it matches a background query,
// which then keys candidate extraction. Skips sessions with no matching
// prefix.
std::vector<ScenarioInstance> build_longtail_scenario(const std::vector<TextSession>& sessions,
                                                      const AdjIndex& adj);

// 1-based position of the relevant candidate inside a ranking permutation.
std::size_t relevant_rank(const std::vector<std::size_t>& ranking, std::size_t relevant);

double mrr_from_ranks(const std::vector<std::size_t>& ranks);
double mrr(const std::vector<std::vector<std::size_t>>& rankings,
           const std::vector<std::size_t>& relevant);

// Candidate order by adjacency count for the instance's scoring key,
// descending, ties by candidate text.
std::vector<std::size_t> rank_by_adj(const AdjIndex& adj, const ScenarioInstance& instance);

// Candidate order by conditional log-likelihood under the model, using only
// the `depth` most recent context queries (0 = the whole context).
std::vector<std::size_t> rank_by_rescore(const ModelParams& params, const Vocabulary& vocab,
                                         const ScenarioInstance& instance, std::size_t depth = 0);

// Feature rows for all 20 candidates; the model score is appended as a 19th
// feature when `params` and `vocab` are supplied.
RankedExample featurize_instance(const ScenarioInstance& instance, const AdjIndex& adj,
                                 const QvmmTree& qvmm, const ModelParams* params = nullptr,
                                 const Vocabulary* vocab = nullptr);

struct BucketStats {
  std::size_t count = 0;
  double mrr = 0.0;
};

struct EvalReport {
  std::size_t instances = 0;
  double overall_mrr = 0.0;
  // session length = context length + 1: short = 2, medium = 3-4, long >= 5
  std::optional<BucketStats> short_sessions;
  std::optional<BucketStats> medium_sessions;
  std::optional<BucketStats> long_sessions;
};

EvalReport bucketed_report(const std::vector<ScenarioInstance>& instances,
                           const std::vector<std::vector<std::size_t>>& rankings);

struct TruncationPoint {
  std::size_t depth = 0;  // 0 = whole context
  double mrr = 0.0;
};

// Reranks by model rescore at increasing context depths; depth 0 (the whole
// context) is always appended.
std::vector<TruncationPoint> context_truncation_curve(
    const ModelParams& params, const Vocabulary& vocab,
    const std::vector<ScenarioInstance>& instances,
    const std::vector<std::size_t>& depths = {1, 2, 3});

// A full evaluation run: per-system bucketed reports in a fixed order plus
// the optional truncation curve, diff-stable when formatted.
struct ScenarioEvaluation {
  std::string scenario;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::vector<std::pair<std::string, EvalReport>> systems;
  std::vector<TruncationPoint> truncation;
};

// Structured text, fixed key order, six decimal places.
std::string format_report(const ScenarioEvaluation& evaluation);

// One instance per line: context queries, "|", target, "|", 20 candidates,
// all tab-separated.
void write_instances(const std::string& path, const std::vector<ScenarioInstance>& instances);

}  // namespace hred
