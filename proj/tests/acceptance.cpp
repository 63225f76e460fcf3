// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Each check is self-contained and uses only public library interfaces plus
// local brute-force oracles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hred/eval.hpp"
#include "hred/training.hpp"
#include "test_support.hpp"

using namespace hred;
using test::TempDir;
using test::random_model;
using test::random_session;
using test::text_session;
using test::tiny_hyper;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<double> flatten(const ModelParams& params) {
  std::vector<double> out;
  for_each_param(params, [&](const ParamView& view) {
    out.insert(out.end(), view.data, view.data + view.count);
  });
  return out;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------- criterion 1

bool gradient_correctness(std::string& detail) {
  const auto start = Clock::now();
  Hyper hyper;
  hyper.query_dim = 8;
  hyper.session_dim = 12;
  hyper.embed_dim = 6;
  hyper.vocab_size = 20;

  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Prng prng(7000 + seed);
    const ModelParams params = init_model(hyper, prng);
    for (int trial = 0; trial < 3; ++trial) {
      const std::size_t queries = 1 + prng.next_below(3);
      const Session session = random_session(hyper.vocab_size, queries, 4, prng);
      const BatchGradients analytic = backward_bptt(params, {session});
      const Gradients numeric = finite_diff_oracle(params, session);
      const auto a = flatten(analytic.grads);
      const auto b = flatten(numeric);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({1.0, std::abs(a[i]), std::abs(b[i])});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
      }
    }
  }
  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << "max rel err " << worst << ", " << elapsed << "s";
  detail = os.str();
  return worst <= 1e-4 && elapsed <= 60.0;
}

// ---------------------------------------------------------------- criterion 2

struct Enumerated {
  std::vector<int> tokens;
  double log_prob = 0.0;
};

void enumerate_completions(const ModelParams& params, const Vector& dec_state, int prev_word,
                           std::vector<int>& prefix, double log_prob, std::size_t max_length,
                           std::vector<Enumerated>& out) {
  const Vector lp = next_word_log_distribution(params, dec_state, prev_word);
  out.push_back({prefix, log_prob + lp[kEndOfQueryId]});
  if (prefix.size() >= max_length) return;
  for (int word = 0; word < params.hyper.vocab_size; ++word) {
    if (word == kEndOfQueryId || word == kUnknownId) continue;
    prefix.push_back(word);
    const GruActivations step = gru_step(params.dec, dec_state, word);
    enumerate_completions(params, step.h, word, prefix, log_prob + lp[word], max_length, out);
    prefix.pop_back();
  }
}

bool beam_optimality(std::string& detail) {
  const auto start = Clock::now();
  const Hyper hyper = tiny_hyper(5, 3, 4, 2);
  BeamConfig config;
  config.max_length = 4;
  config.width = 121;  // 1 + 3 + 9 + 27 + 81 complete sequences

  std::size_t agree = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ModelParams params = random_model(hyper, 40000 + seed);
    const std::vector<std::vector<int>> context{{2, 3}, {4}};

    std::vector<Enumerated> expected;
    std::vector<int> prefix;
    enumerate_completions(params, decoder_init(params, context_state(params, context)),
                          kNoPrevWord, prefix, 0.0, config.max_length, expected);
    std::stable_sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.tokens.size() != b.tokens.size()) return a.tokens.size() < b.tokens.size();
      return a.tokens < b.tokens;
    });

    const auto got = beam_search(params, context, config);
    bool same = got.size() == expected.size();
    for (std::size_t i = 0; same && i < got.size(); ++i) {
      same = got[i].tokens == expected[i].tokens && got[i].log_prob == expected[i].log_prob;
    }
    agree += same ? 1 : 0;
  }
  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os << agree << "/100 seeds, ranking and scores exact, " << elapsed << "s";
  detail = os.str();
  return agree == 100 && elapsed <= 60.0;
}

// ---------------------------------------------------------------- criterion 3

void conserved_mass(const ModelParams& params, const Vector& dec_state, int prev_word,
                    double path_prob, std::size_t depth, double& complete, double& frontier) {
  const Vector p = next_word_distribution(params, dec_state, prev_word);
  complete += path_prob * p[kEndOfQueryId];
  for (int word = 0; word < params.hyper.vocab_size; ++word) {
    if (word == kEndOfQueryId) continue;
    const double mass = path_prob * p[word];
    if (depth == 1) {
      frontier += mass;
    } else {
      const GruActivations step = gru_step(params.dec, dec_state, word);
      conserved_mass(params, step.h, word, mass, depth - 1, complete, frontier);
    }
  }
}

bool probability_conservation(std::string& detail) {
  const Hyper hyper = tiny_hyper(7, 3, 4, 2);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelParams params = random_model(hyper, 500 + seed);
    const std::vector<std::vector<int>> context{{2, 5}, {3}};
    const Vector d0 = decoder_init(params, context_state(params, context));
    for (std::size_t depth = 1; depth <= 3; ++depth) {
      double complete = 0.0;
      double frontier = 0.0;
      conserved_mass(params, d0, kNoPrevWord, 1.0, depth, complete, frontier);
      worst = std::max(worst, std::abs(complete + frontier - 1.0));
    }
  }
  std::ostringstream os;
  os << "max |mass - 1| = " << worst << " over depths 1..3";
  detail = os.str();
  return worst <= 1e-9;
}

// ---------------------------------------------------------------- criterion 4

// Synthetic corpus where the third query is a function of the first alone:
// twenty topics map one-to-one onto twenty answers, but consecutive topic
// pairs share the middle (distractor) query, so the anchor cannot identify
// the answer. Probe-answer pair sessions give the adjacency model all twenty
// answers as candidates.
struct DirectionCorpus {
  std::vector<TextSession> background;
  std::vector<TextSession> validation;
  std::vector<TextSession> held_out;
};

DirectionCorpus direction_corpus(int repetitions, int variant_rounds) {
  DirectionCorpus corpus;
  char topic[16], answer[16], probe[16];
  std::vector<std::string> mix;  // frequent queries: what corruption inserts
  for (int j = 0; j < 10; ++j) {
    std::snprintf(probe, sizeof probe, "probe%d", j);
    mix.push_back(probe);
  }
  for (int k = 0; k < 20; ++k) {
    std::snprintf(answer, sizeof answer, "ans%02d", k);
    mix.push_back(answer);
  }
  for (int i = 0; i < 20; ++i) {
    std::snprintf(topic, sizeof topic, "topic%02d", i);
    mix.push_back(topic);
  }

  std::int64_t t = 0;
  auto add = [&](std::vector<TextSession>& dst, std::vector<std::string> queries) {
    dst.push_back(text_session(std::move(queries), t));
    t += 4000;
  };
  for (int i = 0; i < 20; ++i) {
    std::snprintf(topic, sizeof topic, "topic%02d", i);
    std::snprintf(answer, sizeof answer, "ans%02d", i);
    std::snprintf(probe, sizeof probe, "probe%d", i / 2);
    for (int r = 0; r < repetitions; ++r) add(corpus.background, {topic, probe, answer});
    // variants with an extra query per insertion slot, so displaced contexts
    // stay learnable; the two slots before the anchor get double coverage
    // because they perturb the session state the model must carry
    for (int v = 0; v < variant_rounds; ++v) {
      const auto pick = [&](int offset) -> const std::string& {
        return mix[static_cast<std::size_t>(3 * i + 60 * v + offset) % mix.size()];
      };
      add(corpus.background, {pick(0), topic, probe, answer});
      add(corpus.background, {pick(7), topic, probe, answer});
      add(corpus.background, {topic, pick(1), probe, answer});
      add(corpus.background, {topic, pick(13), probe, answer});
      add(corpus.background, {topic, probe, pick(2), answer});
    }
    add(corpus.validation, {topic, probe, answer});
    add(corpus.held_out, {topic, probe, answer});
  }
  // probe-answer pairs put all twenty answers in every probe's adjacency
  // list; doubled so answers always outrank the variant insertions
  for (int j = 0; j < 10; ++j) {
    std::snprintf(probe, sizeof probe, "probe%d", j);
    for (int k = 0; k < 20; ++k) {
      std::snprintf(answer, sizeof answer, "ans%02d", k);
      add(corpus.background, {probe, answer});
      add(corpus.background, {probe, answer});
    }
  }
  return corpus;
}

double mrr_of(const std::vector<ScenarioInstance>& instances,
              const std::function<std::vector<std::size_t>(const ScenarioInstance&)>& rank) {
  std::vector<std::vector<std::size_t>> rankings;
  std::vector<std::size_t> relevant;
  for (const auto& instance : instances) {
    rankings.push_back(rank(instance));
    relevant.push_back(instance.relevant);
  }
  return mrr(rankings, relevant);
}

bool context_sensitivity(std::string& detail) {
  const auto start = Clock::now();
  const DirectionCorpus corpus = direction_corpus(6, 4);
  const Vocabulary vocab = build_vocabulary(corpus.background, 64);
  const std::vector<Session> training = encode_sessions(corpus.background, vocab, 2);
  const std::vector<Session> validation = encode_sessions(corpus.validation, vocab, 2);

  Hyper hyper;
  hyper.query_dim = 32;
  hyper.session_dim = 48;
  hyper.embed_dim = 20;
  hyper.vocab_size = vocab.size();

  TrainConfig config;
  config.learning_rate = 3e-3;
  config.batch_size = 16;
  config.patience = 40;
  config.max_epochs = 250;
  config.seed = 20260815;

  const Checkpoint ckpt = fit(training, validation, hyper, config);

  const AdjIndex adj = build_adj(corpus.background);
  const std::vector<ScenarioInstance> clean = build_next_query_scenario(corpus.held_out, adj);
  if (clean.size() != 20) {
    detail = "expected 20 clean instances, got " + std::to_string(clean.size());
    return false;
  }

  // ten corrupted copies of each instance to smooth the noise draw
  std::vector<ScenarioInstance> replicated;
  for (int copy = 0; copy < 10; ++copy) {
    replicated.insert(replicated.end(), clean.begin(), clean.end());
  }
  Prng corruption = Prng(config.seed).fork(2);
  const std::vector<ScenarioInstance> noisy = build_robust_scenario(replicated, adj, corruption);

  const auto adj_rank = [&](const ScenarioInstance& i) { return rank_by_adj(adj, i); };
  const auto hred_rank = [&](const ScenarioInstance& i) {
    return rank_by_rescore(ckpt.params, vocab, i);
  };
  const double adj_clean = mrr_of(clean, adj_rank);
  const double hred_clean = mrr_of(clean, hred_rank);
  const double adj_noisy = mrr_of(noisy, adj_rank);
  const double hred_noisy = mrr_of(noisy, hred_rank);
  const double adj_drop = adj_clean - adj_noisy;
  const double hred_drop = hred_clean - hred_noisy;

  const double elapsed = seconds_since(start);
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << "clean mrr hred " << hred_clean << " vs adj " << adj_clean
     << "; degradation hred " << hred_drop << " vs adj " << adj_drop << "; "
     << std::setprecision(1) << elapsed << "s";
  detail = os.str();
  return hred_clean >= adj_clean + 0.10 && hred_drop < adj_drop && elapsed <= 900.0;
}

// ---------------------------------------------------------------- criterion 5

// Brute-force recount oracle: explicit (suffix -> successor -> count) tables.
struct FlatQvmm {
  std::map<std::vector<std::string>, std::map<std::string, std::int64_t>> counts;
  std::map<std::vector<std::string>, std::int64_t> totals;
  std::int64_t distinct = 0;
  std::size_t max_order = 0;

  static FlatQvmm build(const std::vector<TextSession>& background, std::size_t max_order) {
    FlatQvmm flat;
    flat.max_order = max_order;
    std::set<std::string> seen;
    for (const auto& session : background) {
      for (std::size_t t = 0; t < session.queries.size(); ++t) {
        seen.insert(session.queries[t]);
        for (std::size_t order = 0; order <= std::min(max_order, t); ++order) {
          std::vector<std::string> suffix(session.queries.begin() + (t - order),
                                          session.queries.begin() + t);
          flat.counts[suffix][session.queries[t]] += 1;
          flat.totals[suffix] += 1;
        }
      }
    }
    flat.distinct = static_cast<std::int64_t>(seen.size());
    return flat;
  }

  double log_prob(const std::vector<std::string>& context, const std::string& cand) const {
    const std::size_t limit = std::min(max_order, context.size());
    std::size_t depth = 0;
    for (std::size_t j = 1; j <= limit; ++j) {
      const std::vector<std::string> suffix(context.end() - j, context.end());
      if (totals.find(suffix) == totals.end()) break;
      depth = j;
    }
    for (std::size_t j = depth + 1; j-- > 0;) {
      const std::vector<std::string> suffix(context.end() - j, context.end());
      const auto node = counts.find(suffix);
      if (node != counts.end()) {
        const auto it = node->second.find(cand);
        if (it != node->second.end() && it->second > 0) {
          return std::log(static_cast<double>(it->second) /
                          static_cast<double>(totals.at(suffix)));
        }
      }
    }
    return std::log(1.0 / static_cast<double>(distinct));
  }
};

bool qvmm_equivalence(std::string& detail) {
  const std::vector<std::string> alphabet{"q1", "q2", "q3", "q4", "q5", "q6", "ghost"};
  std::size_t probes = 0;
  std::size_t mass_checks = 0;
  double worst_mass = 0.0;

  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Prng prng(3100 + seed);
    const std::size_t count = 1 + prng.next_below(50);
    std::vector<TextSession> log;
    for (std::size_t s = 0; s < count; ++s) {
      std::vector<std::string> queries;
      const std::size_t len = 1 + prng.next_below(5);
      for (std::size_t i = 0; i < len; ++i) {
        queries.push_back(alphabet[prng.next_below(alphabet.size() - 1)]);  // "ghost" unseen
      }
      log.push_back(text_session(std::move(queries), static_cast<std::int64_t>(s) * 4000));
    }

    for (std::size_t order = 1; order <= 3; ++order) {
      const QvmmTree tree = build_qvmm(log, order);
      const FlatQvmm flat = FlatQvmm::build(log, order);

      for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> context;
        const std::size_t len = prng.next_below(5);
        for (std::size_t i = 0; i < len; ++i) {
          context.push_back(alphabet[prng.next_below(alphabet.size())]);
        }
        const std::string& cand = alphabet[prng.next_below(alphabet.size())];
        ++probes;
        if (tree.log_prob(context, cand) != flat.log_prob(context, cand)) {
          detail = "log-prob mismatch at seed " + std::to_string(seed);
          return false;
        }
      }

      for (const auto& [suffix, successor_counts] : flat.counts) {
        const auto& node_counts = tree.successors_at(suffix);
        if (node_counts != successor_counts) {
          detail = "successor counts mismatch at seed " + std::to_string(seed);
          return false;
        }
        const std::int64_t total = flat.totals.at(suffix);
        double mass = 0.0;
        for (const auto& [_, c] : node_counts) {
          mass += static_cast<double>(c) / static_cast<double>(total);
        }
        worst_mass = std::max(worst_mass, std::abs(mass - 1.0));
        ++mass_checks;
      }
    }
  }
  std::ostringstream os;
  os << probes << " probes exact, " << mass_checks << " successor masses, max |mass - 1| = "
     << worst_mass;
  detail = os.str();
  return worst_mass <= 1e-12;
}

// ---------------------------------------------------------------- criterion 6

bool mrr_harness(std::string& detail) {
  if (mrr_from_ranks({2, 4}) != 0.375) {
    detail = "mrr of ranks [2,4] is not exactly 0.375";
    return false;
  }

  const DirectionCorpus corpus = direction_corpus(3, 1);
  const AdjIndex adj = build_adj(corpus.background);
  std::vector<ScenarioInstance> all = build_next_query_scenario(corpus.held_out, adj);

  Prng corruption = Prng(99).fork(2);
  const auto noisy = build_robust_scenario(all, adj, corruption);
  all.insert(all.end(), noisy.begin(), noisy.end());

  // long-tail: anchors with unseen trailing words, shortened back to a probe
  std::vector<TextSession> tail_sessions;
  tail_sessions.push_back(text_session({"topic00", "probe0 zz yy", "ans00"}));
  tail_sessions.push_back(text_session({"topic07", "probe3 unseen", "ans07"}));
  const auto tail = build_longtail_scenario(tail_sessions, adj);
  if (tail.size() != 2) {
    detail = "expected 2 long-tail instances, got " + std::to_string(tail.size());
    return false;
  }
  all.insert(all.end(), tail.begin(), tail.end());

  for (const auto& instance : all) {
    validate_instance(instance);
    if (instance.candidates.size() != 20) {
      detail = "instance with " + std::to_string(instance.candidates.size()) + " candidates";
      return false;
    }
    const auto hits = std::count(instance.candidates.begin(), instance.candidates.end(),
                                 instance.target);
    if (hits != 1 || instance.candidates[instance.relevant] != instance.target) {
      detail = "instance without exactly one relevant candidate";
      return false;
    }
    const std::set<std::string> unique(instance.candidates.begin(), instance.candidates.end());
    if (unique.size() != 20) {
      detail = "instance with duplicate candidates";
      return false;
    }
  }
  detail = "ranks [2,4] -> 0.375 exactly; " + std::to_string(all.size()) +
           " instances all have 20 candidates, 1 relevant";
  return true;
}

// ---------------------------------------------------------------- criterion 7

bool clipping_and_patience(std::string& detail) {
  const Hyper hyper = tiny_hyper(10, 4, 5, 3);
  Prng prng(8800);
  double worst_norm = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Gradients grads = zero_model(hyper);
    const double scale = prng.uniform(0.0, 20.0);
    for_each_param(grads, [&](const ParamView& view) {
      for (std::size_t i = 0; i < view.count; ++i) {
        view.data[i] = prng.uniform(-scale, scale);
      }
    });
    clip_gradient_norm(grads, 1.0);
    const auto flat = flatten(grads);
    double sum = 0.0;
    for (double g : flat) sum += g * g;
    worst_norm = std::max(worst_norm, std::sqrt(sum));
  }
  if (worst_norm > 1.0 + 1e-12) {
    detail = "post-clip norm " + std::to_string(worst_norm);
    return false;
  }

  // documented patience fixture: improvements at epochs 1 and 2, then decay
  const std::vector<double> scores{-5.0, -4.0, -4.5, -4.6, -4.7, -4.8, -4.9};
  EarlyStopping stopper(5);
  double kept = 0.0;  // stand-in for a parameter snapshot
  std::size_t consumed = 0;
  for (double score : scores) {
    ++consumed;
    if (stopper.observe(score)) kept = score;
    if (stopper.should_stop()) break;
  }
  if (consumed != 7 || stopper.best_epoch() != 2 || kept != -4.0) {
    detail = "patience fixture: stopped after " + std::to_string(consumed) + ", best epoch " +
             std::to_string(stopper.best_epoch());
    return false;
  }

  // the real loop returns the parameters of the best validation epoch
  const DirectionCorpus corpus = direction_corpus(2, 1);
  const Vocabulary vocab = build_vocabulary(corpus.background, 64);
  const std::vector<Session> training = encode_sessions(corpus.background, vocab, 2);
  const std::vector<Session> validation = encode_sessions(corpus.validation, vocab, 2);
  Hyper small;
  small.query_dim = 6;
  small.session_dim = 8;
  small.embed_dim = 4;
  small.vocab_size = vocab.size();
  TrainConfig config;
  config.max_epochs = 10;
  config.patience = 2;
  config.seed = 313;
  const Checkpoint ckpt = fit(training, validation, small, config);
  const double best = *std::max_element(ckpt.history.begin(), ckpt.history.end());
  const double returned = mean_session_log_likelihood(ckpt.params, validation);
  if (returned != best) {
    detail = "returned params score " + std::to_string(returned) + " but best epoch scored " +
             std::to_string(best);
    return false;
  }
  std::ostringstream os;
  os << "1000 clipped norms <= 1+1e-12 (worst " << worst_norm
     << "); patience fixture stops at epoch 7 keeping epoch 2";
  detail = os.str();
  return true;
}

// ---------------------------------------------------------------- criterion 8

bool robust_builder_statistics(std::string& detail) {
  // background: 120 distinct queries with distinct descending frequencies, so
  // the top-100 selection and its frequency target are unambiguous
  std::vector<TextSession> background;
  std::map<std::string, std::int64_t> expected_counts;
  std::int64_t stamp = 0;
  for (int k = 0; k < 120; ++k) {
    char name[16];
    std::snprintf(name, sizeof name, "noise%03d", k);
    const std::int64_t count = 124 - k;
    if (k < 100) expected_counts[name] = count;
    for (std::int64_t r = 0; r < count; ++r) {
      background.push_back(text_session({name}, stamp));
      stamp += 4000;
    }
  }
  const AdjIndex adj = build_adj(background);

  ScenarioInstance seedling;
  seedling.context = {"ctx alpha", "ctx beta", "ctx gamma"};  // disjoint from the pool
  seedling.target = "noise000";
  for (int k = 0; k < 20; ++k) {
    char name[16];
    std::snprintf(name, sizeof name, "noise%03d", k);
    seedling.candidates.push_back(name);
  }
  seedling.relevant = 0;
  seedling.adj_key = seedling.context.back();

  const std::size_t draws = 10000;
  const std::vector<ScenarioInstance> originals(draws, seedling);
  Prng corruption = Prng(20260815).fork(3);
  const std::vector<ScenarioInstance> corrupted =
      build_robust_scenario(originals, adj, corruption);

  std::map<std::string, std::size_t> noise_tally;
  std::vector<std::size_t> position_tally(4, 0);
  for (const auto& instance : corrupted) {
    if (instance.context.size() != 4 || instance.adj_key != instance.context.back()) {
      detail = "corrupted context malformed";
      return false;
    }
    std::size_t position = 3;
    for (std::size_t i = 0; i < seedling.context.size(); ++i) {
      if (instance.context[i] != seedling.context[i]) {
        position = i;
        break;
      }
    }
    ++noise_tally[instance.context[position]];
    ++position_tally[position];
  }

  std::int64_t pool_total = 0;
  for (const auto& [_, c] : expected_counts) pool_total += c;
  double tv = 0.0;
  std::set<std::string> keys;
  for (const auto& [name, _] : expected_counts) keys.insert(name);
  for (const auto& [name, _] : noise_tally) keys.insert(name);
  for (const auto& name : keys) {
    const auto want_it = expected_counts.find(name);
    const double want =
        want_it == expected_counts.end()
            ? 0.0
            : static_cast<double>(want_it->second) / static_cast<double>(pool_total);
    const auto got_it = noise_tally.find(name);
    const double got = got_it == noise_tally.end()
                           ? 0.0
                           : static_cast<double>(got_it->second) / static_cast<double>(draws);
    tv += std::abs(got - want);
  }
  tv /= 2.0;

  double chi_square = 0.0;
  const double expected_per_position = static_cast<double>(draws) / 4.0;
  for (std::size_t count : position_tally) {
    const double diff = static_cast<double>(count) - expected_per_position;
    chi_square += diff * diff / expected_per_position;
  }
  const double chi_square_critical = 11.345;  // df = 3, p = 0.01

  std::ostringstream os;
  os << "tv " << tv << " (< 0.05), position chi-square " << chi_square << " (< "
     << chi_square_critical << ")";
  detail = os.str();
  return tv < 0.05 && chi_square < chi_square_critical;
}

// ---------------------------------------------------------------- criterion 9

struct PipelineArtifacts {
  std::string checkpoint_bytes;
  std::string report;
  double probe_before = 0.0;
  double probe_after = 0.0;
};

PipelineArtifacts run_pipeline(const TempDir& dir, const std::string& tag) {
  const DirectionCorpus corpus = direction_corpus(2, 1);
  const Vocabulary vocab = build_vocabulary(corpus.background, 64);
  const std::vector<Session> training = encode_sessions(corpus.background, vocab, 2);
  const std::vector<Session> validation = encode_sessions(corpus.validation, vocab, 2);

  Hyper hyper;
  hyper.query_dim = 8;
  hyper.session_dim = 10;
  hyper.embed_dim = 6;
  hyper.vocab_size = vocab.size();
  TrainConfig config;
  config.max_epochs = 4;
  config.seed = 4242;

  const Checkpoint ckpt = fit(training, validation, hyper, config);
  const std::string path = dir.file("ckpt_" + tag + ".bin");
  checkpoint_save(ckpt, path);

  PipelineArtifacts artifacts;
  artifacts.checkpoint_bytes = read_bytes(path);
  artifacts.probe_before = mean_session_log_likelihood(ckpt.params, validation);
  const Checkpoint reloaded = checkpoint_load(path);
  artifacts.probe_after = mean_session_log_likelihood(reloaded.params, validation);

  const AdjIndex adj = build_adj(corpus.background);
  const QvmmTree qvmm = build_qvmm(corpus.background, 3);
  const auto instances = build_next_query_scenario(corpus.held_out, adj);

  std::vector<RankedExample> examples;
  for (const auto& instance : instances) {
    examples.push_back(featurize_instance(instance, adj, qvmm));
  }
  RankerConfig ranker_config;
  ranker_config.seed = config.seed;
  const RankerModel ranker = train_ranker(examples, ranker_config);

  std::vector<std::vector<std::size_t>> by_adj, by_ranker, by_rescore;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    by_adj.push_back(rank_by_adj(adj, instances[i]));
    by_ranker.push_back(rank_candidates(ranker, examples[i]));
    by_rescore.push_back(rank_by_rescore(reloaded.params, vocab, instances[i]));
  }

  ScenarioEvaluation evaluation;
  evaluation.scenario = "next";
  evaluation.config_echo = {{"seed", std::to_string(config.seed)}};
  evaluation.systems = {
      {"adj", bucketed_report(instances, by_adj)},
      {"ranker", bucketed_report(instances, by_ranker)},
      {"hred_rescore", bucketed_report(instances, by_rescore)},
  };
  evaluation.truncation = context_truncation_curve(reloaded.params, vocab, instances);
  artifacts.report = format_report(evaluation);
  return artifacts;
}

bool determinism_and_persistence(std::string& detail) {
  TempDir dir("acceptance9");
  const PipelineArtifacts first = run_pipeline(dir, "first");
  const PipelineArtifacts second = run_pipeline(dir, "second");

  if (first.checkpoint_bytes.empty() ||
      first.checkpoint_bytes != second.checkpoint_bytes) {
    detail = "checkpoint files differ between identically seeded runs";
    return false;
  }
  if (first.report != second.report) {
    detail = "evaluation reports differ between identically seeded runs";
    return false;
  }
  if (first.probe_before != first.probe_after) {
    detail = "probe log-likelihood changed across the checkpoint round-trip";
    return false;
  }
  std::ostringstream os;
  os << first.checkpoint_bytes.size() << "-byte checkpoints bit-identical; reports identical; "
     << "probe log-likelihood " << first.probe_after << " preserved bit-for-bit";
  detail = os.str();
  return true;
}

// --------------------------------------------------------------- criterion 10

bool state_boundedness(std::string& detail) {
  const Hyper hyper = tiny_hyper(12, 6, 7, 5);
  std::size_t passes = 0;
  bool bounded = true;

  const auto check_steps = [&](const std::vector<GruActivations>& steps) {
    for (const auto& step : steps) {
      for (double h : step.h) bounded = bounded && h > -1.0 && h < 1.0;
      for (double c : step.cand) bounded = bounded && c > -1.0 && c < 1.0;
      for (double r : step.reset) bounded = bounded && r > 0.0 && r < 1.0;
      for (double u : step.update) bounded = bounded && u > 0.0 && u < 1.0;
    }
  };

  for (std::uint64_t model_seed = 0; model_seed < 250 && bounded; ++model_seed) {
    Prng prng(60000 + model_seed);
    const ModelParams params = init_model(hyper, prng);
    for (int trial = 0; trial < 4 && bounded; ++trial) {
      const Session session = random_session(hyper.vocab_size, 1 + prng.next_below(3), 4, prng);
      const ForwardTrace trace = forward_trace(params, session);
      check_steps(trace.session_steps);
      for (const auto& query : trace.queries) {
        check_steps(query.enc_steps);
        check_steps(query.dec_steps);
      }
      ++passes;
    }
  }
  std::ostringstream os;
  os << passes << " forward passes, states in (-1,1), gates in (0,1)";
  detail = os.str();
  return bounded && passes == 1000;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* label;
    bool (*check)(std::string&);
  };
  const std::vector<Criterion> criteria{
      {1, "gradients match central finite differences", gradient_correctness},
      {2, "saturated beam equals exhaustive search", beam_optimality},
      {3, "complete plus frontier mass is one", probability_conservation},
      {4, "context rescoring beats adjacency and is noise-robust", context_sensitivity},
      {5, "markov tree matches the recount oracle exactly", qvmm_equivalence},
      {6, "mrr harness and instance shape", mrr_harness},
      {7, "gradient clipping and patience rule", clipping_and_patience},
      {8, "corruption noise and position distributions", robust_builder_statistics},
      {9, "determinism and checkpoint persistence", determinism_and_persistence},
      {10, "recurrent states and gates stay strictly bounded", state_boundedness},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    failures += ok ? 0 : 1;
    std::printf("criterion %2d  %-55s : %s  (%s)\n", criterion.number, criterion.label,
                ok ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
