#include "hred/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace hred {

namespace {

std::vector<std::string> split_query_words(const std::string& query) {
  std::vector<std::string> words;
  std::istringstream stream(query);
  std::string word;
  while (stream >> word) words.push_back(word);
  return words;
}

// candidate order from precomputed scores, descending, ties by text
std::vector<std::size_t> order_by_score(const std::vector<double>& scores,
                                        const std::vector<std::string>& texts) {
  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return texts[a] < texts[b];
  });
  return order;
}

std::optional<ScenarioInstance> instance_for(const std::vector<std::string>& context,
                                             const std::string& target,
                                             const std::string& adj_key, const AdjIndex& adj) {
  const std::vector<AdjCandidate> candidates = adj_candidates(adj, adj_key, 20);
  if (candidates.size() < 20) return std::nullopt;
  ScenarioInstance instance;
  instance.context = context;
  instance.target = target;
  instance.adj_key = adj_key;
  bool found = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    instance.candidates.push_back(candidates[i].query);
    if (candidates[i].query == target) {
      instance.relevant = i;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  return instance;
}

}  // namespace

void validate_instance(const ScenarioInstance& instance) {
  if (instance.context.empty()) {
    throw std::invalid_argument("scenario instance: context is empty");
  }
  if (instance.candidates.size() != 20) {
    throw std::invalid_argument("scenario instance: expected 20 candidates, found " +
                                std::to_string(instance.candidates.size()));
  }
  if (instance.relevant >= instance.candidates.size() ||
      instance.candidates[instance.relevant] != instance.target) {
    throw std::invalid_argument("scenario instance: relevant slot does not hold the target");
  }
  for (std::size_t i = 0; i < instance.candidates.size(); ++i) {
    if (i != instance.relevant && instance.candidates[i] == instance.target) {
      throw std::invalid_argument("scenario instance: target appears in two candidate slots");
    }
  }
}

std::vector<ScenarioInstance> build_next_query_scenario(const std::vector<TextSession>& sessions,
                                                        const AdjIndex& adj) {
  std::vector<ScenarioInstance> instances;
  for (const auto& session : sessions) {
    if (session.queries.size() < 2) continue;
    std::vector<std::string> context(session.queries.begin(), session.queries.end() - 1);
    const std::string& target = session.queries.back();
    auto instance = instance_for(context, target, context.back(), adj);
    if (instance.has_value()) {
      validate_instance(*instance);
      instances.push_back(std::move(*instance));
    }
  }
  return instances;
}

std::vector<ScenarioInstance> build_robust_scenario(const std::vector<ScenarioInstance>& instances,
                                                    const AdjIndex& background, Prng& prng) {
  // noise pool: the 100 most frequent background queries, weighted by count
  std::vector<std::pair<std::string, std::int64_t>> pool(background.frequency.begin(),
                                                         background.frequency.end());
  std::stable_sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (pool.size() > 100) pool.resize(100);
  if (pool.empty()) throw std::invalid_argument("build_robust_scenario: empty background");
  std::vector<double> cumulative(pool.size());
  double total = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    total += static_cast<double>(pool[i].second);
    cumulative[i] = total;
  }

  std::vector<ScenarioInstance> corrupted;
  corrupted.reserve(instances.size());
  for (const auto& original : instances) {
    // one frequency-proportional draw, then one uniform position draw
    const double u = prng.next_double() * total;
    const std::size_t pick =
        static_cast<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin());
    const std::string& noise = pool[std::min(pick, pool.size() - 1)].first;
    const std::size_t position = prng.next_below(original.context.size() + 1);

    ScenarioInstance instance = original;
    instance.context.insert(instance.context.begin() + static_cast<std::ptrdiff_t>(position),
                            noise);
    instance.adj_key = instance.context.back();
    validate_instance(instance);
    corrupted.push_back(std::move(instance));
  }
  return corrupted;
}

std::vector<ScenarioInstance> build_longtail_scenario(const std::vector<TextSession>& sessions,
                                                      const AdjIndex& adj) {
  std::vector<ScenarioInstance> instances;
  for (const auto& session : sessions) {
    if (session.queries.size() < 2) continue;
    std::vector<std::string> context(session.queries.begin(), session.queries.end() - 1);
    const std::string& anchor = context.back();
    if (adj.query_frequency(anchor) > 0) continue;  // not long-tail

    std::vector<std::string> words = split_query_words(anchor);
    std::string prefix;
    for (std::size_t keep = words.empty() ? 0 : words.size() - 1; keep >= 1; --keep) {
      std::string joined;
      for (std::size_t i = 0; i < keep; ++i) {
        if (!joined.empty()) joined.push_back(' ');
        joined += words[i];
      }
      if (adj.query_frequency(joined) > 0) {
        prefix = std::move(joined);
        break;
      }
    }
    if (prefix.empty()) continue;  // no prefix ever matches

    auto instance = instance_for(context, session.queries.back(), prefix, adj);
    if (instance.has_value()) {
      validate_instance(*instance);
      instances.push_back(std::move(*instance));
    }
  }
  return instances;
}

std::size_t relevant_rank(const std::vector<std::size_t>& ranking, std::size_t relevant) {
  for (std::size_t position = 0; position < ranking.size(); ++position) {
    if (ranking[position] == relevant) return position + 1;
  }
  throw std::invalid_argument("relevant_rank: relevant candidate missing from the ranking");
}

double mrr_from_ranks(const std::vector<std::size_t>& ranks) {
  if (ranks.empty()) throw std::invalid_argument("mrr: no instances");
  double sum = 0.0;
  for (std::size_t rank : ranks) {
    if (rank < 1) throw std::invalid_argument("mrr: ranks are 1-based");
    sum += 1.0 / static_cast<double>(rank);
  }
  return sum / static_cast<double>(ranks.size());
}

double mrr(const std::vector<std::vector<std::size_t>>& rankings,
           const std::vector<std::size_t>& relevant) {
  if (rankings.size() != relevant.size()) {
    throw std::invalid_argument("mrr: rankings and relevant indices differ in length");
  }
  std::vector<std::size_t> ranks;
  ranks.reserve(rankings.size());
  for (std::size_t i = 0; i < rankings.size(); ++i) {
    ranks.push_back(relevant_rank(rankings[i], relevant[i]));
  }
  return mrr_from_ranks(ranks);
}

std::vector<std::size_t> rank_by_adj(const AdjIndex& adj, const ScenarioInstance& instance) {
  std::vector<double> scores(instance.candidates.size());
  for (std::size_t i = 0; i < instance.candidates.size(); ++i) {
    scores[i] =
        static_cast<double>(adj.successor_count(instance.adj_key, instance.candidates[i]));
  }
  return order_by_score(scores, instance.candidates);
}

std::vector<std::size_t> rank_by_rescore(const ModelParams& params, const Vocabulary& vocab,
                                         const ScenarioInstance& instance, std::size_t depth) {
  std::vector<std::vector<int>> context;
  const std::size_t use =
      depth == 0 ? instance.context.size() : std::min(depth, instance.context.size());
  for (std::size_t i = instance.context.size() - use; i < instance.context.size(); ++i) {
    std::vector<int> tokens = encode_query_text(vocab, instance.context[i]);
    if (!tokens.empty()) context.push_back(std::move(tokens));
  }
  std::vector<double> scores(instance.candidates.size());
  for (std::size_t i = 0; i < instance.candidates.size(); ++i) {
    const std::vector<int> tokens = encode_query_text(vocab, instance.candidates[i]);
    if (tokens.empty()) {
      throw std::invalid_argument("rank_by_rescore: candidate '" + instance.candidates[i] +
                                  "' has no words");
    }
    scores[i] = rescore(params, context, tokens);
  }
  return order_by_score(scores, instance.candidates);
}

RankedExample featurize_instance(const ScenarioInstance& instance, const AdjIndex& adj,
                                 const QvmmTree& qvmm, const ModelParams* params,
                                 const Vocabulary* vocab) {
  if ((params == nullptr) != (vocab == nullptr)) {
    throw std::invalid_argument("featurize_instance: params and vocab go together");
  }
  RankedExample example;
  example.relevant = instance.relevant;
  example.candidate_texts = instance.candidates;
  std::vector<std::vector<int>> context_tokens;
  if (params != nullptr) {
    for (const auto& query : instance.context) {
      std::vector<int> tokens = encode_query_text(*vocab, query);
      if (!tokens.empty()) context_tokens.push_back(std::move(tokens));
    }
  }
  for (const auto& candidate : instance.candidates) {
    std::optional<double> hred_score;
    if (params != nullptr) {
      hred_score = rescore(*params, context_tokens, encode_query_text(*vocab, candidate));
    }
    example.candidate_features.push_back(
        extract_features(instance.context, candidate, adj, qvmm, hred_score));
  }
  return example;
}

EvalReport bucketed_report(const std::vector<ScenarioInstance>& instances,
                           const std::vector<std::vector<std::size_t>>& rankings) {
  if (instances.size() != rankings.size()) {
    throw std::invalid_argument("bucketed_report: instances and rankings differ in length");
  }
  if (instances.empty()) throw std::invalid_argument("bucketed_report: no instances");
  std::vector<std::size_t> all, short_ranks, medium_ranks, long_ranks;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const std::size_t rank = relevant_rank(rankings[i], instances[i].relevant);
    all.push_back(rank);
    const std::size_t session_length = instances[i].context.size() + 1;
    if (session_length <= 2) {
      short_ranks.push_back(rank);
    } else if (session_length <= 4) {
      medium_ranks.push_back(rank);
    } else {
      long_ranks.push_back(rank);
    }
  }
  EvalReport report;
  report.instances = all.size();
  report.overall_mrr = mrr_from_ranks(all);
  if (!short_ranks.empty()) {
    report.short_sessions = BucketStats{short_ranks.size(), mrr_from_ranks(short_ranks)};
  }
  if (!medium_ranks.empty()) {
    report.medium_sessions = BucketStats{medium_ranks.size(), mrr_from_ranks(medium_ranks)};
  }
  if (!long_ranks.empty()) {
    report.long_sessions = BucketStats{long_ranks.size(), mrr_from_ranks(long_ranks)};
  }
  return report;
}

std::vector<TruncationPoint> context_truncation_curve(
    const ModelParams& params, const Vocabulary& vocab,
    const std::vector<ScenarioInstance>& instances, const std::vector<std::size_t>& depths) {
  std::vector<std::size_t> schedule = depths;
  schedule.push_back(0);  // the whole context
  std::vector<TruncationPoint> curve;
  for (std::size_t depth : schedule) {
    std::vector<std::size_t> ranks;
    ranks.reserve(instances.size());
    for (const auto& instance : instances) {
      ranks.push_back(
          relevant_rank(rank_by_rescore(params, vocab, instance, depth), instance.relevant));
    }
    curve.push_back({depth, mrr_from_ranks(ranks)});
  }
  return curve;
}

namespace {

std::string fixed6(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

void append_bucket(std::string& out, const char* name,
                   const std::optional<BucketStats>& bucket) {
  out += "bucket ";
  out += name;
  if (bucket.has_value()) {
    out += " count " + std::to_string(bucket->count) + " mrr " + fixed6(bucket->mrr) + "\n";
  } else {
    out += " absent\n";
  }
}

}  // namespace

std::string format_report(const ScenarioEvaluation& evaluation) {
  std::string out = "hred evaluation report\n";
  out += "scenario " + evaluation.scenario + "\n";
  for (const auto& [key, value] : evaluation.config_echo) {
    out += "config " + key + " " + value + "\n";
  }
  for (const auto& [name, report] : evaluation.systems) {
    out += "system " + name + "\n";
    out += "instances " + std::to_string(report.instances) + "\n";
    out += "mrr " + fixed6(report.overall_mrr) + "\n";
    append_bucket(out, "short", report.short_sessions);
    append_bucket(out, "medium", report.medium_sessions);
    append_bucket(out, "long", report.long_sessions);
  }
  for (const auto& point : evaluation.truncation) {
    out += "truncation ";
    out += point.depth == 0 ? "all" : std::to_string(point.depth);
    out += " mrr " + fixed6(point.mrr) + "\n";
  }
  return out;
}

void write_instances(const std::string& path, const std::vector<ScenarioInstance>& instances) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("write_instances: cannot open " + path);
  for (const auto& instance : instances) {
    for (const auto& query : instance.context) file << query << "\t";
    file << "|\t" << instance.target << "\t|";
    for (const auto& candidate : instance.candidates) file << "\t" << candidate;
    file << "\n";
  }
  if (!file) throw std::runtime_error("write_instances: write failed for " + path);
}

}  // namespace hred
