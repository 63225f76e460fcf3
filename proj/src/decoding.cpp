#include "hred/decoding.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace hred {

namespace {

struct LiveHypothesis {
  std::vector<int> tokens;  // words so far, end-of-query never stored
  double log_prob = 0.0;
  Vector dec_state;
};

struct Expansion {
  std::vector<int> tokens;  // resulting word list (unchanged when completing)
  double log_prob = 0.0;
  bool complete = false;
  std::size_t parent = 0;
  int word = kEndOfQueryId;
};

// Selection order within one step: better score first, then lexicographically
// smaller token sequence, completions ahead of live prefixes.
bool expansion_before(const Expansion& a, const Expansion& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.tokens != b.tokens) {
    return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(),
                                        b.tokens.end());
  }
  return a.complete && !b.complete;
}

// Final ranking: score, then earlier completion (fewer words), then
// lexicographic token order.
bool result_before(const ScoredTokens& a, const ScoredTokens& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
  return a.tokens < b.tokens;
}

}  // namespace

Vector context_state(const ModelParams& params, const std::vector<std::vector<int>>& context) {
  if (context.empty()) return Vector(params.hyper.session_dim);
  Session session;
  session.queries = context;
  return encode_session(params, session).back();
}

std::vector<ScoredTokens> beam_search(const ModelParams& params,
                                      const std::vector<std::vector<int>>& context,
                                      const BeamConfig& config) {
  if (config.width < 1 || config.max_length < 1) {
    throw std::invalid_argument("beam_search: width and max_length must be >= 1");
  }
  if (context.empty()) throw std::invalid_argument("beam_search: context is empty");
  for (const auto& query : context) {
    if (query.empty()) throw std::invalid_argument("beam_search: empty context query");
  }

  const int vocab_size = params.hyper.vocab_size;
  std::vector<LiveHypothesis> live;
  live.push_back({{}, 0.0, decoder_init(params, context_state(params, context))});
  std::vector<ScoredTokens> completed;

  while (!live.empty() && completed.size() < config.width) {
    std::vector<Expansion> expansions;
    for (std::size_t parent = 0; parent < live.size(); ++parent) {
      const LiveHypothesis& hyp = live[parent];
      const int prev = hyp.tokens.empty() ? kNoPrevWord : hyp.tokens.back();
      const Vector log_probs = next_word_log_distribution(params, hyp.dec_state, prev);

      std::vector<Expansion> local;
      auto push = [&](int word) {
        Expansion e;
        e.log_prob = hyp.log_prob + log_probs[static_cast<std::size_t>(word)];
        e.parent = parent;
        e.word = word;
        e.complete = word == kEndOfQueryId;
        e.tokens = hyp.tokens;
        if (!e.complete) e.tokens.push_back(word);
        local.push_back(std::move(e));
      };
      if (hyp.tokens.size() >= config.max_length) {
        push(kEndOfQueryId);  // full-length prefixes may only close
      } else {
        for (int word = 0; word < vocab_size; ++word) {
          if (config.forbid_unknown && word == kUnknownId) continue;
          push(word);
        }
      }
      // each prefix contributes at most `width` follow-ups
      if (local.size() > config.width) {
        std::partial_sort(local.begin(), local.begin() + static_cast<std::ptrdiff_t>(config.width),
                          local.end(), expansion_before);
        local.resize(config.width);
      }
      for (auto& e : local) expansions.push_back(std::move(e));
    }

    const std::size_t keep = std::min(config.width, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep),
                      expansions.end(), expansion_before);
    expansions.resize(keep);

    std::vector<LiveHypothesis> next_live;
    for (auto& e : expansions) {
      if (e.complete) {
        completed.push_back({std::move(e.tokens), e.log_prob});
      } else {
        LiveHypothesis h;
        h.log_prob = e.log_prob;
        h.dec_state = gru_step(params.dec, live[e.parent].dec_state, e.word).h;
        h.tokens = std::move(e.tokens);
        next_live.push_back(std::move(h));
      }
    }
    live = std::move(next_live);
  }

  std::sort(completed.begin(), completed.end(), result_before);
  if (completed.size() > config.width) completed.resize(config.width);
  return completed;
}

double rescore(const ModelParams& params, const std::vector<std::vector<int>>& context,
               const std::vector<int>& candidate) {
  if (candidate.empty()) throw std::invalid_argument("rescore: candidate is empty");
  return query_log_prob(params, context_state(params, context), candidate);
}

std::vector<ScoredText> suggest(const ModelParams& params, const Vocabulary& vocab,
                                const std::vector<std::string>& context_texts, std::size_t k,
                                const BeamConfig& base) {
  if (context_texts.empty()) throw std::invalid_argument("suggest: context is empty");
  std::vector<std::vector<int>> context;
  for (const auto& text : context_texts) {
    std::vector<int> tokens = encode_query_text(vocab, text);
    if (tokens.empty()) {
      throw std::invalid_argument("suggest: context query '" + text +
                                  "' has no words after normalization");
    }
    context.push_back(std::move(tokens));
  }
  BeamConfig config = base;
  // one extra slot: the bare end-of-query completion is filtered below
  config.width = std::max(base.width, k + 1);
  std::vector<ScoredText> out;
  std::unordered_set<std::string> seen;
  for (const auto& result : beam_search(params, context, config)) {
    if (result.tokens.empty()) continue;  // the bare end-of-query completion
    std::string text = decode_tokens(vocab, result.tokens);
    if (!seen.insert(text).second) continue;
    out.push_back({std::move(text), result.log_prob});
    if (out.size() == k) break;
  }
  return out;
}

}  // namespace hred
