#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "hred/eval.hpp"
#include "test_support.hpp"

using namespace hred;
using test::TempDir;
using test::random_model;
using test::text_session;
using test::tiny_hyper;

namespace {

// Background where "hub" is followed by cand00..cand24 with strictly
// decreasing counts (25, 24, ..., 1), so the top-20 list is cand00..cand19.
std::vector<TextSession> hub_background() {
  std::vector<TextSession> sessions;
  for (int i = 0; i < 25; ++i) {
    char name[16];
    std::snprintf(name, sizeof name, "cand%02d", i);
    for (int r = 0; r < 25 - i; ++r) {
      sessions.push_back(text_session({"hub", name}));
    }
  }
  return sessions;
}

}  // namespace

TEST_CASE("reciprocal-rank arithmetic") {
  CHECK(mrr_from_ranks({1, 1, 1}) == 1.0);
  CHECK(mrr_from_ranks({2, 4}) == 0.375);
  CHECK(mrr_from_ranks({20}) == 1.0 / 20.0);
  CHECK_THROWS_AS(mrr_from_ranks({}), std::invalid_argument);
  CHECK_THROWS_AS(mrr_from_ranks({0}), std::invalid_argument);

  std::vector<std::size_t> ranking{4, 2, 0, 1, 3};
  CHECK(relevant_rank(ranking, 0) == 3);
  CHECK(relevant_rank(ranking, 4) == 1);
  CHECK_THROWS_AS(relevant_rank(ranking, 9), std::invalid_argument);

  // candidate 0 leads the first ranking (rank 1); candidate 1 trails the
  // second (rank 2): (1 + 1/2) / 2
  CHECK(mrr({{0, 1}, {0, 1}}, {0, 1}) == 0.75);
}

TEST_CASE("next-query scenario places the target at its adjacency slot") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);

  // target is the anchor's 3rd most frequent successor
  const std::vector<TextSession> test_sessions{text_session({"hub", "cand02"})};
  const auto instances = build_next_query_scenario(test_sessions, adj);
  REQUIRE(instances.size() == 1);
  const ScenarioInstance& inst = instances[0];
  CHECK(inst.context == std::vector<std::string>{"hub"});
  CHECK(inst.target == "cand02");
  CHECK(inst.candidates.size() == 20);
  CHECK(inst.relevant == 2);
  CHECK(inst.candidates[2] == "cand02");
  CHECK(inst.adj_key == "hub");
  CHECK_NOTHROW(validate_instance(inst));
}

TEST_CASE("next-query scenario skips thin anchors and missing targets") {
  // anchor with only 5 successors
  std::vector<TextSession> small;
  for (int i = 0; i < 5; ++i) {
    small.push_back(text_session({"thin", "s" + std::to_string(i)}));
  }
  const AdjIndex small_adj = build_adj(small);
  CHECK(build_next_query_scenario({text_session({"thin", "s0"})}, small_adj).empty());

  // target outside the top-20
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  CHECK(build_next_query_scenario({text_session({"hub", "cand24"})}, adj).empty());

  // sessions with fewer than two queries yield nothing
  CHECK(build_next_query_scenario({text_session({"hub"})}, adj).empty());
}

TEST_CASE("instance validation catches tampering") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  auto instances = build_next_query_scenario({text_session({"hub", "cand01"})}, adj);
  REQUIRE(instances.size() == 1);

  ScenarioInstance broken = instances[0];
  broken.candidates.pop_back();
  CHECK_THROWS_AS(validate_instance(broken), std::invalid_argument);

  broken = instances[0];
  broken.relevant = (broken.relevant + 1) % 20;
  CHECK_THROWS_AS(validate_instance(broken), std::invalid_argument);

  broken = instances[0];
  broken.context.clear();
  CHECK_THROWS_AS(validate_instance(broken), std::invalid_argument);

  broken = instances[0];
  broken.candidates[(broken.relevant + 3) % 20] = broken.target;  // duplicate relevant
  CHECK_THROWS_AS(validate_instance(broken), std::invalid_argument);
}

TEST_CASE("robust corruption inserts exactly one noisy query") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const auto instances =
      build_next_query_scenario({text_session({"hub", "cand00"})}, adj);
  REQUIRE(instances.size() == 1);

  Prng prng(7);
  std::vector<ScenarioInstance> many(50, instances[0]);
  const auto corrupted = build_robust_scenario(many, adj, prng);
  REQUIRE(corrupted.size() == 50);

  bool anchor_displaced = false;
  for (const auto& inst : corrupted) {
    CHECK(inst.context.size() == 2);  // one query inserted
    CHECK(inst.target == "cand00");
    CHECK(inst.relevant == instances[0].relevant);
    CHECK(inst.candidates == instances[0].candidates);
    CHECK(inst.adj_key == inst.context.back());
    CHECK_NOTHROW(validate_instance(inst));
    // the original anchor is still somewhere in the context
    CHECK(std::count(inst.context.begin(), inst.context.end(), "hub") >= 1);
    if (inst.context.back() != "hub") anchor_displaced = true;
  }
  CHECK(anchor_displaced);  // with 50 draws the anchor slot is hit w.h.p.

  // determinism: same seed, same corruption
  Prng again(7);
  const auto repeat = build_robust_scenario(many, adj, again);
  for (std::size_t i = 0; i < repeat.size(); ++i) {
    CHECK(repeat[i].context == corrupted[i].context);
  }
}

TEST_CASE("long-tail scenario shortens the anchor until a prefix is known") {
  std::vector<TextSession> background = hub_background();
  for (auto& session : background) {
    session.queries[0] = "rare query";  // anchor prefix that is known
  }
  const AdjIndex adj = build_adj(background);

  // "rare query xyz" never occurs in the background, but "rare query" does
  const std::vector<TextSession> sessions{text_session({"rare query xyz", "cand01"})};
  const auto instances = build_longtail_scenario(sessions, adj);
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].adj_key == "rare query");
  CHECK(instances[0].context == std::vector<std::string>{"rare query xyz"});
  CHECK(instances[0].target == "cand01");
  CHECK_NOTHROW(validate_instance(instances[0]));

  // anchors present in the background are excluded from this scenario
  CHECK(build_longtail_scenario({text_session({"rare query", "cand01"})}, adj).empty());

  // no prefix ever matches -> skipped
  CHECK(build_longtail_scenario({text_session({"zz yy xx", "cand01"})}, adj).empty());
}

TEST_CASE("adjacency ranking orders by the instance scoring key") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const auto instances =
      build_next_query_scenario({text_session({"hub", "cand04"})}, adj);
  REQUIRE(instances.size() == 1);

  const auto order = rank_by_adj(adj, instances[0]);
  REQUIRE(order.size() == 20);
  // counts strictly decrease with the candidate index, so the order is identity
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(instances[0].candidates[order[i]] ==
          ("cand" + std::string(i < 10 ? "0" : "") + std::to_string(i)));
  }
  CHECK(relevant_rank(order, instances[0].relevant) == 5);
}

TEST_CASE("model reranking improves when the model knows the answer") {
  // tiny vocabulary; the model is random, so this only checks mechanics:
  // rankings are permutations and the truncation identity holds
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const Vocabulary vocab = build_vocabulary(background, 30);
  const Hyper hyper = tiny_hyper(vocab.size(), 4, 5, 3);
  const ModelParams params = random_model(hyper, 3);

  const auto instances =
      build_next_query_scenario({text_session({"hub", "cand03"})}, adj);
  REQUIRE(instances.size() == 1);

  const auto full = rank_by_rescore(params, vocab, instances[0]);
  REQUIRE(full.size() == 20);
  std::set<std::size_t> unique(full.begin(), full.end());
  CHECK(unique.size() == 20);

  const auto deep = rank_by_rescore(params, vocab, instances[0], 99);
  CHECK(deep == full);
  const auto depth1 = rank_by_rescore(params, vocab, instances[0], 1);
  CHECK(depth1 == full);  // context has exactly one query
}

TEST_CASE("bucketed reports split by session length and skip empty buckets") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const std::vector<TextSession> sessions{
      text_session({"hub", "cand00"}),                                  // length 2: short
      text_session({"cand05", "hub", "cand01"}),                        // length 3: medium
      text_session({"cand05", "cand06", "cand07", "hub", "cand02"}),    // length 5: long
  };
  const auto instances = build_next_query_scenario(sessions, adj);
  REQUIRE(instances.size() == 3);

  std::vector<std::vector<std::size_t>> rankings;
  for (const auto& inst : instances) rankings.push_back(rank_by_adj(adj, inst));
  const EvalReport report = bucketed_report(instances, rankings);

  CHECK(report.instances == 3);
  REQUIRE(report.short_sessions.has_value());
  REQUIRE(report.medium_sessions.has_value());
  REQUIRE(report.long_sessions.has_value());
  CHECK(report.short_sessions->count == 1);
  CHECK(report.medium_sessions->count == 1);
  CHECK(report.long_sessions->count == 1);
  CHECK(report.short_sessions->mrr == 1.0);        // target cand00 ranks first
  CHECK(report.medium_sessions->mrr == 0.5);       // cand01 ranks second
  CHECK(report.long_sessions->mrr == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const double weighted = (report.short_sessions->mrr + report.medium_sessions->mrr +
                           report.long_sessions->mrr) /
                          3.0;
  CHECK(report.overall_mrr == doctest::Approx(weighted).epsilon(1e-15));

  // only short instances -> other buckets absent
  const EvalReport only_short = bucketed_report({instances[0]}, {rankings[0]});
  CHECK(only_short.short_sessions.has_value());
  CHECK_FALSE(only_short.medium_sessions.has_value());
  CHECK_FALSE(only_short.long_sessions.has_value());
}

TEST_CASE("truncation at full depth equals the untruncated reranking") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const Vocabulary vocab = build_vocabulary(background, 30);
  const Hyper hyper = tiny_hyper(vocab.size(), 4, 5, 3);
  const ModelParams params = random_model(hyper, 13);

  const std::vector<TextSession> sessions{
      text_session({"cand05", "cand06", "hub", "cand01"}),
      text_session({"cand07", "hub", "cand02"}),
  };
  const auto instances = build_next_query_scenario(sessions, adj);
  REQUIRE(instances.size() == 2);

  const auto curve = context_truncation_curve(params, vocab, instances);
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].depth == 1);
  CHECK(curve[1].depth == 2);
  CHECK(curve[2].depth == 3);
  CHECK(curve[3].depth == 0);  // whole context

  std::vector<std::vector<std::size_t>> untruncated;
  for (const auto& inst : instances) {
    untruncated.push_back(rank_by_rescore(params, vocab, inst, 0));
  }
  std::vector<std::size_t> relevant;
  for (const auto& inst : instances) relevant.push_back(inst.relevant);
  CHECK(curve[3].mrr == mrr(untruncated, relevant));

  // depth 3 covers every context here, so it matches the full ranking too
  CHECK(curve[2].mrr == curve[3].mrr);
}

TEST_CASE("report formatting is stable and six-decimal") {
  ScenarioEvaluation evaluation;
  evaluation.scenario = "next";
  evaluation.config_echo = {{"seed", "7"}, {"qvmm_order", "3"}};

  EvalReport report;
  report.instances = 2;
  report.overall_mrr = 0.375;
  BucketStats stats;
  stats.count = 2;
  stats.mrr = 0.375;
  report.short_sessions = stats;
  evaluation.systems = {{"adj", report}};
  evaluation.truncation = {{1, 0.25}, {0, 0.375}};

  const std::string text = format_report(evaluation);
  const std::string again = format_report(evaluation);
  CHECK(text == again);

  CHECK(text.find("hred evaluation report") == 0);
  CHECK(text.find("scenario next") != std::string::npos);
  CHECK(text.find("config seed 7") != std::string::npos);
  CHECK(text.find("config qvmm_order 3") != std::string::npos);
  CHECK(text.find("system adj") != std::string::npos);
  CHECK(text.find("instances 2") != std::string::npos);
  CHECK(text.find("mrr 0.375000") != std::string::npos);
  CHECK(text.find("bucket short count 2 mrr 0.375000") != std::string::npos);
  CHECK(text.find("bucket medium absent") != std::string::npos);
  CHECK(text.find("bucket long absent") != std::string::npos);
  CHECK(text.find("truncation 1 mrr 0.250000") != std::string::npos);
  CHECK(text.find("truncation all mrr 0.375000") != std::string::npos);

  // key order is fixed: scenario, config, then systems
  CHECK(text.find("scenario next") < text.find("config seed 7"));
  CHECK(text.find("config seed 7") < text.find("system adj"));
  CHECK(text.find("system adj") < text.find("truncation 1"));
}

TEST_CASE("instance files hold context, target and twenty candidates per line") {
  TempDir dir("instances");
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const auto instances = build_next_query_scenario(
      {text_session({"cand06", "hub", "cand01"})}, adj);
  REQUIRE(instances.size() == 1);

  const std::string path = dir.file("instances.tsv");
  write_instances(path, instances);

  std::ifstream in(path);
  std::string line;
  REQUIRE(std::getline(in, line));
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  // context(2) | target | 20 candidates with two separator tokens
  REQUIRE(fields.size() == 2 + 1 + 1 + 1 + 20);
  CHECK(fields[0] == "cand06");
  CHECK(fields[1] == "hub");
  CHECK(fields[2] == "|");
  CHECK(fields[3] == "cand01");
  CHECK(fields[4] == "|");
  CHECK(fields[5 + instances[0].relevant] == "cand01");
  CHECK_FALSE(std::getline(in, line));
}

TEST_CASE("featurized instances carry the model score only when asked") {
  const auto background = hub_background();
  const AdjIndex adj = build_adj(background);
  const QvmmTree qvmm = build_qvmm(background, 2);
  const Vocabulary vocab = build_vocabulary(background, 30);
  const Hyper hyper = tiny_hyper(vocab.size(), 3, 4, 2);
  const ModelParams params = random_model(hyper, 21);

  const auto instances =
      build_next_query_scenario({text_session({"hub", "cand01"})}, adj);
  REQUIRE(instances.size() == 1);

  const RankedExample plain = featurize_instance(instances[0], adj, qvmm);
  REQUIRE(plain.candidate_features.size() == 20);
  CHECK(plain.candidate_features[0].dim() == kNumBaseFeatures);
  CHECK(plain.relevant == instances[0].relevant);
  CHECK(plain.candidate_texts == instances[0].candidates);

  const RankedExample scored = featurize_instance(instances[0], adj, qvmm, &params, &vocab);
  CHECK(scored.candidate_features[0].dim() == kNumBaseFeatures + 1);

  CHECK_THROWS_AS(featurize_instance(instances[0], adj, qvmm, &params, nullptr),
                  std::invalid_argument);
}
