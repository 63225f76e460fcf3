#pragma once

#include <string>
#include <vector>

#include "hred/model.hpp"

// Beam-search generation and likelihood rescoring. Hypothesis scores are raw
// cumulative log-probabilities (no length normalization).

namespace hred {

struct BeamConfig {
  std::size_t width = 50;
  std::size_t max_length = 12;  // maximum words per generated query
  bool forbid_unknown = true;   // mask the unknown token during generation only
};

// A finished beam hypothesis: the generated words (end-of-query not stored)
// and the cumulative log-probability including the end-of-query step.
struct ScoredTokens {
  std::vector<int> tokens;
  double log_prob = 0.0;
};

struct ScoredText {
  std::string text;
  double log_prob = 0.0;
};

// Session state after consuming every context query (zero state for an empty
// context). Context queries are content-token lists.
Vector context_state(const ModelParams& params, const std::vector<std::vector<int>>& context);

// Breadth-limited best-first search for the most likely next queries.
// Completions are sorted by (log-probability desc, earlier completion,
// lexicographic token order). May return fewer than `width` completions when
// max_length truncates the frontier.
std::vector<ScoredTokens> beam_search(const ModelParams& params,
                                      const std::vector<std::vector<int>>& context,
                                      const BeamConfig& config);

// Log-probability of `candidate` (plus end-of-query) given the context. The
// unknown token is allowed here; masking applies to generation only.
double rescore(const ModelParams& params, const std::vector<std::vector<int>>& context,
               const std::vector<int>& candidate);

// beam_search, then decode ids to words; drops the empty completion and
// (when the unknown token is allowed) de-duplicates identical texts.
std::vector<ScoredText> suggest(const ModelParams& params, const Vocabulary& vocab,
                                const std::vector<std::string>& context_texts, std::size_t k,
                                const BeamConfig& base = BeamConfig{});

}  // namespace hred
