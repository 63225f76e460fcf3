#include "hred/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hred/binio.hpp"

namespace hred {

// ---------------------------------------------------------------- adjacency

std::int64_t AdjIndex::successor_count(const std::string& anchor, const std::string& next) const {
  const auto row = successors.find(anchor);
  if (row == successors.end()) return 0;
  const auto cell = row->second.find(next);
  return cell == row->second.end() ? 0 : cell->second;
}

std::int64_t AdjIndex::query_frequency(const std::string& query) const {
  const auto it = frequency.find(query);
  return it == frequency.end() ? 0 : it->second;
}

AdjIndex build_adj(const std::vector<TextSession>& background) {
  if (background.empty()) throw std::invalid_argument("build_adj: background is empty");
  AdjIndex index;
  for (const auto& session : background) {
    for (std::size_t i = 0; i < session.queries.size(); ++i) {
      ++index.frequency[session.queries[i]];
      if (i + 1 < session.queries.size()) {
        ++index.successors[session.queries[i]][session.queries[i + 1]];
      }
    }
  }
  return index;
}

std::vector<AdjCandidate> adj_candidates(const AdjIndex& index, const std::string& anchor,
                                         std::size_t limit) {
  std::vector<AdjCandidate> out;
  const auto row = index.successors.find(anchor);
  if (row == index.successors.end()) return out;
  out.reserve(row->second.size());
  for (const auto& [query, count] : row->second) out.push_back({query, count});
  std::stable_sort(out.begin(), out.end(), [](const AdjCandidate& a, const AdjCandidate& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.query < b.query;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

namespace {
constexpr char kAdjMagic[9] = "HREDADJI";
constexpr char kQvmmMagic[9] = "HREDQVMM";
constexpr char kVersionNote[] = "version 1\n";
constexpr std::uint32_t kIndexVersion = 1;
}  // namespace

void adj_save(const AdjIndex& index, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("adj_save: cannot open " + path);
  binio::HashingWriter w(file);
  w.bytes(kAdjMagic, 8);
  w.u32(kIndexVersion);
  w.u64(index.successors.size());
  std::int64_t total_pairs = 0;
  for (const auto& [anchor, row] : index.successors) {
    w.str(anchor);
    w.u64(row.size());
    for (const auto& [next, count] : row) {
      w.str(next);
      w.i64(count);
      total_pairs += count;
    }
  }
  w.u64(index.frequency.size());
  for (const auto& [query, count] : index.frequency) {
    w.str(query);
    w.i64(count);
  }
  const std::uint64_t checksum = w.hash();
  w.finish();
  if (!file) throw std::runtime_error("adj_save: write failed for " + path);

  std::ofstream manifest(path + ".manifest", std::ios::trunc);
  manifest << "hred adjacency index manifest\n" << kVersionNote;
  manifest << "anchors " << index.successors.size() << "\n";
  manifest << "distinct_queries " << index.frequency.size() << "\n";
  manifest << "successor_pairs " << total_pairs << "\n";
  manifest << "checksum " << binio::to_hex(checksum) << "\n";
  if (!manifest) throw std::runtime_error("adj_save: manifest write failed");
}

AdjIndex adj_load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("adj_load: cannot open " + path);
  binio::HashingReader r(file, "adjacency index " + path);
  binio::expect_magic(r, kAdjMagic);
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion) {
    throw std::runtime_error("adj_load: unsupported version " + std::to_string(version));
  }
  AdjIndex index;
  const std::uint64_t anchors = r.u64();
  for (std::uint64_t i = 0; i < anchors; ++i) {
    std::string anchor = r.str();
    auto& row = index.successors[anchor];
    const std::uint64_t entries = r.u64();
    for (std::uint64_t j = 0; j < entries; ++j) {
      std::string next = r.str();
      row[std::move(next)] = r.i64();
    }
  }
  const std::uint64_t frequencies = r.u64();
  for (std::uint64_t i = 0; i < frequencies; ++i) {
    std::string query = r.str();
    index.frequency[std::move(query)] = r.i64();
  }
  r.finish();
  return index;
}

// ---------------------------------------------------------------- QVMM

QvmmTree build_qvmm(const std::vector<TextSession>& background, std::size_t max_order) {
  if (max_order < 1) throw std::invalid_argument("build_qvmm: order must be >= 1");
  QvmmTree tree;
  tree.max_order_ = max_order;
  std::set<std::string> distinct;
  for (const auto& session : background) {
    const auto& queries = session.queries;
    for (std::size_t target = 0; target < queries.size(); ++target) {
      distinct.insert(queries[target]);
      std::size_t node = 0;
      for (std::size_t order = 0;; ++order) {
        ++tree.nodes_[node].next_counts[queries[target]];
        ++tree.nodes_[node].total;
        if (order == max_order || order > target) break;
        if (order + 1 > target) break;  // context would cross the session start
        const std::string& older = queries[target - order - 1];
        auto [it, inserted] =
            tree.nodes_[node].children.try_emplace(older, tree.nodes_.size());
        if (inserted) {
          tree.nodes_.push_back(QvmmTree::Node{});
          tree.nodes_.back().parent = node;
        }
        node = it->second;
      }
    }
  }
  tree.distinct_queries_ = static_cast<std::int64_t>(distinct.size());
  if (tree.distinct_queries_ == 0) {
    throw std::invalid_argument("build_qvmm: background holds no queries");
  }
  return tree;
}

std::size_t QvmmTree::walk(const std::vector<std::string>& context) const {
  std::size_t node = 0;
  const std::size_t depth_limit = std::min(max_order_, context.size());
  for (std::size_t j = 1; j <= depth_limit; ++j) {
    const auto it = nodes_[node].children.find(context[context.size() - j]);
    if (it == nodes_[node].children.end()) break;
    node = it->second;
  }
  return node;
}

std::int64_t QvmmTree::total_observations() const { return nodes_.front().total; }

const std::map<std::string, std::int64_t>& QvmmTree::successors_at(
    const std::vector<std::string>& context) const {
  return nodes_[walk(context)].next_counts;
}

double QvmmTree::log_prob(const std::vector<std::string>& context,
                          const std::string& candidate) const {
  std::size_t node = walk(context);
  for (;;) {
    const Node& n = nodes_[node];
    const auto it = n.next_counts.find(candidate);
    if (it != n.next_counts.end() && it->second > 0) {
      return std::log(static_cast<double>(it->second) / static_cast<double>(n.total));
    }
    if (node == 0) break;
    node = n.parent;
  }
  return std::log(1.0 / static_cast<double>(distinct_queries_));
}

void qvmm_save(const QvmmTree& tree, const std::string& path) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("qvmm_save: cannot open " + path);
  binio::HashingWriter w(file);
  w.bytes(kQvmmMagic, 8);
  w.u32(kIndexVersion);
  w.u64(tree.max_order_);
  w.i64(tree.distinct_queries_);
  w.u64(tree.nodes_.size());
  for (const auto& node : tree.nodes_) {
    w.u64(node.parent);
    w.i64(node.total);
    w.u64(node.next_counts.size());
    for (const auto& [query, count] : node.next_counts) {
      w.str(query);
      w.i64(count);
    }
    w.u64(node.children.size());
    for (const auto& [query, child] : node.children) {
      w.str(query);
      w.u64(child);
    }
  }
  const std::uint64_t checksum = w.hash();
  w.finish();
  if (!file) throw std::runtime_error("qvmm_save: write failed for " + path);

  std::ofstream manifest(path + ".manifest", std::ios::trunc);
  manifest << "hred qvmm manifest\n" << kVersionNote;
  manifest << "max_order " << tree.max_order_ << "\n";
  manifest << "nodes " << tree.nodes_.size() << "\n";
  manifest << "distinct_queries " << tree.distinct_queries_ << "\n";
  manifest << "observations " << tree.total_observations() << "\n";
  manifest << "checksum " << binio::to_hex(checksum) << "\n";
  if (!manifest) throw std::runtime_error("qvmm_save: manifest write failed");
}

QvmmTree qvmm_load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("qvmm_load: cannot open " + path);
  binio::HashingReader r(file, "qvmm " + path);
  binio::expect_magic(r, kQvmmMagic);
  const std::uint32_t version = r.u32();
  if (version != kIndexVersion) {
    throw std::runtime_error("qvmm_load: unsupported version " + std::to_string(version));
  }
  QvmmTree tree;
  tree.max_order_ = r.u64();
  tree.distinct_queries_ = r.i64();
  const std::uint64_t node_count = r.u64();
  if (node_count == 0) throw std::runtime_error("qvmm_load: corrupt node table");
  tree.nodes_.assign(node_count, QvmmTree::Node{});
  for (std::uint64_t i = 0; i < node_count; ++i) {
    auto& node = tree.nodes_[i];
    node.parent = r.u64();
    node.total = r.i64();
    const std::uint64_t entries = r.u64();
    for (std::uint64_t j = 0; j < entries; ++j) {
      std::string query = r.str();
      node.next_counts[std::move(query)] = r.i64();
    }
    const std::uint64_t kids = r.u64();
    for (std::uint64_t j = 0; j < kids; ++j) {
      std::string query = r.str();
      const std::uint64_t child = r.u64();
      if (child >= node_count) throw std::runtime_error("qvmm_load: corrupt child index");
      node.children[std::move(query)] = child;
    }
  }
  r.finish();
  return tree;
}

// ---------------------------------------------------------------- strings

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
  for (std::size_t j = 1; j <= b.size(); ++j) {
    std::size_t diagonal = row[0];
    row[0] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      diagonal = row[i];
      row[i] = std::min({row[i] + 1, row[i - 1] + 1, substitution});
    }
  }
  return row[a.size()];
}

namespace {

std::set<std::string> padded_trigrams(std::string_view s) {
  std::set<std::string> grams;
  std::string padded = "^";
  padded += s;
  padded += "$";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) grams.insert(padded.substr(i, 3));
  return grams;
}

}  // namespace

double char_ngram_similarity(std::string_view a, std::string_view b) {
  const std::set<std::string> ga = padded_trigrams(a);
  const std::set<std::string> gb = padded_trigrams(b);
  if (ga.empty() && gb.empty()) return 0.0;
  std::size_t shared = 0;
  for (const auto& gram : ga) shared += gb.count(gram);
  const std::size_t unioned = ga.size() + gb.size() - shared;
  return static_cast<double>(shared) / static_cast<double>(unioned);
}

// ---------------------------------------------------------------- features

const char* const kFeatureNames[kNumBaseFeatures + 1] = {
    "follows_anchor_count",
    "anchor_frequency",
    "anchor_levenshtein",
    "candidate_chars",
    "candidate_words",
    "candidate_frequency",
    "trigram_sim_1",
    "trigram_sim_2",
    "trigram_sim_3",
    "trigram_sim_4",
    "trigram_sim_5",
    "trigram_sim_6",
    "trigram_sim_7",
    "trigram_sim_8",
    "trigram_sim_9",
    "trigram_sim_10",
    "mean_context_levenshtein",
    "qvmm_log_prob",
    "hred_score",
};

Vector extract_features(const std::vector<std::string>& context, const std::string& candidate,
                        const AdjIndex& adj, const QvmmTree& qvmm,
                        std::optional<double> hred_score) {
  if (context.empty()) throw std::invalid_argument("extract_features: context is empty");
  const std::string& anchor = context.back();
  Vector features(kNumBaseFeatures + (hred_score.has_value() ? 1 : 0));
  features[0] = static_cast<double>(adj.successor_count(anchor, candidate));
  features[1] = static_cast<double>(adj.query_frequency(anchor));
  features[2] = static_cast<double>(levenshtein(anchor, candidate));
  features[3] = static_cast<double>(candidate.size());
  std::size_t words = 0;
  {
    std::istringstream stream(candidate);
    std::string word;
    while (stream >> word) ++words;
  }
  features[4] = static_cast<double>(words);
  features[5] = static_cast<double>(adj.query_frequency(candidate));
  for (std::size_t i = 0; i < 10; ++i) {
    features[6 + i] = i < context.size()
                          ? char_ngram_similarity(candidate, context[context.size() - 1 - i])
                          : 0.0;
  }
  double distance_sum = 0.0;
  for (const auto& query : context) {
    distance_sum += static_cast<double>(levenshtein(candidate, query));
  }
  features[16] = distance_sum / static_cast<double>(context.size());
  features[17] = qvmm.log_prob(context, candidate);
  if (hred_score.has_value()) features[18] = *hred_score;
  return features;
}

// ---------------------------------------------------------------- ranker

namespace {

// log(1+x) conditioning applies to the raw count slots of the ledger, and
// only when every observed value is a valid count.
std::vector<bool> choose_log_slots(const std::vector<RankedExample>& examples,
                                   std::size_t arity) {
  std::vector<bool> log_slot(arity, false);
  for (std::size_t slot : {std::size_t{0}, std::size_t{1}, std::size_t{5}}) {
    if (slot >= arity) continue;
    bool nonnegative = true;
    for (const auto& ex : examples) {
      for (const auto& row : ex.candidate_features) {
        if (row[slot] < 0.0) {
          nonnegative = false;
          break;
        }
      }
      if (!nonnegative) break;
    }
    log_slot[slot] = nonnegative;
  }
  return log_slot;
}

double conditioned(const RankerModel& model, const Vector& features, std::size_t slot) {
  const double raw = features[slot];
  const double value = model.log_transformed[slot] ? std::log1p(raw) : raw;
  return (value - model.feature_shift[slot]) / model.feature_scale[slot];
}

}  // namespace

RankerModel train_ranker(const std::vector<RankedExample>& examples, const RankerConfig& config) {
  if (examples.empty()) throw std::invalid_argument("train_ranker: no examples");
  const std::size_t arity = examples.front().candidate_features.empty()
                                ? 0
                                : examples.front().candidate_features.front().dim();
  if (arity == 0) throw std::invalid_argument("train_ranker: empty feature vectors");
  for (const auto& ex : examples) {
    if (ex.candidate_features.size() != 20 || ex.candidate_texts.size() != 20) {
      throw std::invalid_argument("train_ranker: every example needs exactly 20 candidates");
    }
    if (ex.relevant >= ex.candidate_features.size()) {
      throw std::invalid_argument("train_ranker: relevant index out of range");
    }
    for (const auto& row : ex.candidate_features) {
      if (row.dim() != arity) {
        throw std::invalid_argument("train_ranker: inconsistent feature arity");
      }
    }
  }

  RankerModel model;
  model.feature_names.assign(kFeatureNames, kFeatureNames + std::min<std::size_t>(
                                                arity, kNumBaseFeatures + 1));
  while (model.feature_names.size() < arity) {
    model.feature_names.push_back("feature_" + std::to_string(model.feature_names.size()));
  }
  model.log_transformed = choose_log_slots(examples, arity);
  model.feature_shift.assign(arity, 0.0);
  model.feature_scale.assign(arity, 1.0);
  model.weights = Vector(arity);

  // conditioning statistics over every candidate row
  std::size_t rows = 0;
  std::vector<double> mean(arity, 0.0), square(arity, 0.0);
  for (const auto& ex : examples) {
    for (const auto& row : ex.candidate_features) {
      ++rows;
      for (std::size_t j = 0; j < arity; ++j) {
        const double v = model.log_transformed[j] ? std::log1p(row[j]) : row[j];
        mean[j] += v;
        square[j] += v * v;
      }
    }
  }
  for (std::size_t j = 0; j < arity; ++j) {
    mean[j] /= static_cast<double>(rows);
    const double variance = square[j] / static_cast<double>(rows) - mean[j] * mean[j];
    model.feature_shift[j] = mean[j];
    model.feature_scale[j] = variance > 1e-12 ? std::sqrt(variance) : 1.0;
  }

  // pairwise differences, relevant minus non-relevant
  std::vector<Vector> diffs;
  bool informative = false;
  for (const auto& ex : examples) {
    Vector relevant_row(arity);
    for (std::size_t j = 0; j < arity; ++j) {
      relevant_row[j] = conditioned(model, ex.candidate_features[ex.relevant], j);
    }
    for (std::size_t c = 0; c < ex.candidate_features.size(); ++c) {
      if (c == ex.relevant) continue;
      Vector diff(arity);
      for (std::size_t j = 0; j < arity; ++j) {
        diff[j] = relevant_row[j] - conditioned(model, ex.candidate_features[c], j);
        if (diff[j] != 0.0) informative = true;
      }
      diffs.push_back(std::move(diff));
    }
  }
  model.training_pairs = diffs.size();

  if (!informative) {
    std::cerr << "train_ranker: all candidate features are identical; returning zero weights\n";
    model.degenerate = true;
    return model;
  }

  const double inv_pairs = 1.0 / static_cast<double>(diffs.size());
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Vector grad(arity);
    double grad_bias = 0.0;
    for (const auto& diff : diffs) {
      double score = model.bias;
      for (std::size_t j = 0; j < arity; ++j) score += model.weights[j] * diff[j];
      const double residual = 1.0 - sigmoid(score);
      for (std::size_t j = 0; j < arity; ++j) grad[j] += residual * diff[j];
      grad_bias += residual;
    }
    for (std::size_t j = 0; j < arity; ++j) {
      model.weights[j] += config.learning_rate * grad[j] * inv_pairs;
    }
    model.bias += config.learning_rate * grad_bias * inv_pairs;
  }
  return model;
}

double ranker_score(const RankerModel& model, const Vector& features) {
  if (features.dim() != model.weights.dim()) {
    throw std::invalid_argument("ranker_score: feature arity mismatch");
  }
  double score = model.bias;
  for (std::size_t j = 0; j < features.dim(); ++j) {
    score += model.weights[j] * conditioned(model, features, j);
  }
  return score;
}

std::vector<std::size_t> rank_candidates(const RankerModel& model, const RankedExample& example) {
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(example.candidate_features.size());
  for (std::size_t c = 0; c < example.candidate_features.size(); ++c) {
    scored.emplace_back(ranker_score(model, example.candidate_features[c]), c);
  }
  std::sort(scored.begin(), scored.end(), [&example](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return example.candidate_texts[a.second] < example.candidate_texts[b.second];
  });
  std::vector<std::size_t> order;
  order.reserve(scored.size());
  for (const auto& [score, index] : scored) order.push_back(index);
  return order;
}

}  // namespace hred
