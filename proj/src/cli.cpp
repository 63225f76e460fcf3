#include "hred/cli.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "hred/baselines.hpp"
#include "hred/corpus.hpp"
#include "hred/decoding.hpp"
#include "hred/eval.hpp"
#include "hred/model.hpp"
#include "hred/training.hpp"

namespace hred {

namespace {

// A wrong invocation discovered after flag parsing (missing required
// combination, bad enum value, ...): exit code 1, like a parse error.
struct UsageFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed6(double value) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << value;
  return out.str();
}

std::vector<std::string> split_on(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : text) {
    if (c == sep) {
      parts.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  parts.push_back(current);
  return parts;
}

std::string trim(const std::string& s) {
  std::size_t lo = 0, hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

// Flat key=value settings; command-line flags override these, and the
// effective values are echoed into output artifacts.
struct Settings {
  std::size_t query_dim = 64;
  std::size_t session_dim = 96;
  std::size_t embed_dim = 32;
  std::size_t vocab_size = 1000;  // content words kept (two ids are reserved)
  TrainConfig train;
  std::string train_split = "background";
  int checkpoint_bits = 64;
  std::size_t k = 10;
  std::size_t max_length = 12;
  std::size_t qvmm_order = 3;
  std::string scenario = "next";
  bool seed_from_config = false;
};

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long parsed = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key " + key + " needs an unsigned integer, got '" +
                             value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double parsed = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return parsed;
  } catch (const std::exception&) {
    throw std::runtime_error("config: key " + key + " needs a number, got '" + value + "'");
  }
}

void apply_setting(Settings& s, const std::string& key, const std::string& value) {
  if (key == "query_dim") {
    s.query_dim = parse_u64(key, value);
  } else if (key == "session_dim") {
    s.session_dim = parse_u64(key, value);
  } else if (key == "embed_dim") {
    s.embed_dim = parse_u64(key, value);
  } else if (key == "vocab_size") {
    s.vocab_size = parse_u64(key, value);
  } else if (key == "learning_rate") {
    s.train.learning_rate = parse_real(key, value);
  } else if (key == "rmsprop_decay") {
    s.train.rmsprop_decay = parse_real(key, value);
  } else if (key == "epsilon") {
    s.train.epsilon = parse_real(key, value);
  } else if (key == "clip_threshold") {
    s.train.clip_threshold = parse_real(key, value);
  } else if (key == "batch_size") {
    s.train.batch_size = parse_u64(key, value);
  } else if (key == "patience") {
    s.train.patience = parse_u64(key, value);
  } else if (key == "max_epochs") {
    s.train.max_epochs = parse_u64(key, value);
  } else if (key == "seed") {
    s.train.seed = parse_u64(key, value);
    s.seed_from_config = true;
  } else if (key == "train_split") {
    s.train_split = value;
  } else if (key == "checkpoint_bits") {
    const auto bits = parse_u64(key, value);
    if (bits != 32 && bits != 64) throw std::runtime_error("config: checkpoint_bits is 32 or 64");
    s.checkpoint_bits = static_cast<int>(bits);
  } else if (key == "k") {
    s.k = parse_u64(key, value);
  } else if (key == "max_length") {
    s.max_length = parse_u64(key, value);
  } else if (key == "qvmm_order") {
    s.qvmm_order = parse_u64(key, value);
  } else if (key == "scenario") {
    s.scenario = value;
  } else {
    throw std::runtime_error("config: unknown key '" + key + "'");
  }
}

void load_config_file(Settings& s, const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("config: cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(file, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: line " + std::to_string(line_no) +
                               " is not key=value: " + stripped);
    }
    apply_setting(s, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

// Seed precedence: --seed flag > HRED_SEED > config file > default 1234.
void resolve_seed(Settings& s, const std::optional<std::uint64_t>& flag_seed) {
  if (flag_seed.has_value()) {
    s.train.seed = *flag_seed;
    return;
  }
  if (const char* env = std::getenv("HRED_SEED"); env != nullptr && *env != '\0') {
    s.train.seed = parse_u64("HRED_SEED", env);
    return;
  }
  // config value (if any) is already in place; otherwise the default stands
}

std::vector<TextSession> load_sessions_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("sessions file not found: " + path);
  }
  return read_sessions(path);
}

Vocabulary load_vocab_file(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error("vocabulary file not found: " + path);
  }
  return read_vocabulary(path);
}

Checkpoint load_checkpoint_checked(const std::string& ckpt_path, const std::string& vocab_path,
                                   const Vocabulary& vocab) {
  if (!std::filesystem::exists(ckpt_path)) {
    throw std::runtime_error("checkpoint not found: " + ckpt_path);
  }
  Checkpoint ckpt = checkpoint_load(ckpt_path);
  if (ckpt.vocab_digest != 0) verify_vocab_digest(ckpt, vocab_path);
  if (ckpt.hyper.vocab_size != vocab.size()) {
    throw std::runtime_error("checkpoint vocabulary size " +
                             std::to_string(ckpt.hyper.vocab_size) + " != vocabulary file size " +
                             std::to_string(vocab.size()));
  }
  return ckpt;
}

// Sink for subcommand data output: --out file or stdout.
class OutputTarget {
 public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path, std::ios::trunc);
      if (!file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void close() {
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw std::runtime_error("write to output file failed");
    }
  }

 private:
  std::ofstream file_;
};

std::vector<std::string> context_from_inline(const std::string& text) {
  std::vector<std::string> queries;
  for (const auto& part : split_on(text, '\t')) {
    const std::string cleaned = normalize_query(part);
    if (!cleaned.empty()) queries.push_back(cleaned);
  }
  if (queries.empty()) throw UsageFailure("--context has no usable queries");
  return queries;
}

// ------------------------------------------------------------- subcommands

struct PreprocessArgs {
  std::string log_path;
  std::string out;
  std::string cutoffs;
};

int cmd_preprocess(const PreprocessArgs& args) {
  const LogParseResult parsed = read_query_log(args.log_path);
  const std::vector<TextSession> sessions = segment_sessions(parsed.records);
  if (args.cutoffs.empty()) {
    write_sessions(args.out, sessions);
    std::cerr << "wrote " << sessions.size() << " sessions to " << args.out << " ("
              << parsed.malformed_lines << " malformed lines skipped)\n";
    return 0;
  }
  const std::vector<std::string> parts = split_on(args.cutoffs, ',');
  if (parts.size() != 3) throw UsageFailure("--cutoffs needs three comma-separated timestamps");
  std::array<std::int64_t, 3> cutoffs{};
  for (std::size_t i = 0; i < 3; ++i) {
    cutoffs[i] = static_cast<std::int64_t>(parse_u64("cutoffs", trim(parts[i])));
  }
  const DatasetSplits splits = split_by_time(sessions, cutoffs);
  write_sessions(args.out + ".background", splits.background);
  write_sessions(args.out + ".training", splits.training);
  write_sessions(args.out + ".validation", splits.validation);
  write_sessions(args.out + ".test", splits.test);
  std::cerr << "wrote splits: background " << splits.background.size() << ", training "
            << splits.training.size() << ", validation " << splits.validation.size()
            << ", test " << splits.test.size() << " (" << parsed.malformed_lines
            << " malformed lines skipped)\n";
  return 0;
}

struct VocabArgs {
  std::string sessions;
  std::size_t vocab_size = 0;
  std::string out;
};

int cmd_vocab(const VocabArgs& args, const Settings& settings) {
  const std::size_t keep = args.vocab_size > 0 ? args.vocab_size : settings.vocab_size;
  const std::vector<TextSession> sessions = load_sessions_file(args.sessions);
  const Vocabulary vocab = build_vocabulary(sessions, keep);
  write_vocabulary(args.out, vocab);
  std::cerr << "wrote " << vocab.size() << " entries (" << (vocab.size() - kNumReservedIds)
            << " words plus " << kNumReservedIds << " reserved) to " << args.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string sessions;
  std::string validation;
  std::string vocab;
  std::string checkpoint;
};

int cmd_train(const TrainArgs& args, const Settings& settings) {
  std::string train_path = args.sessions;
  std::string valid_path = args.validation;
  if (!std::filesystem::exists(train_path)) {
    // treat --sessions as a preprocess prefix
    const std::string prefixed = args.sessions + "." + settings.train_split;
    if (std::filesystem::exists(prefixed)) {
      train_path = prefixed;
      if (valid_path.empty()) valid_path = args.sessions + ".validation";
    } else {
      throw std::runtime_error("sessions file not found: " + train_path + " (also tried " +
                               prefixed + ")");
    }
  }
  if (valid_path.empty()) {
    throw UsageFailure("train needs --validation when --sessions names a single file");
  }

  const Vocabulary vocab = load_vocab_file(args.vocab);
  // sessions reduced below two queries carry no context signal; drop them
  const std::vector<Session> train_sessions =
      encode_sessions(load_sessions_file(train_path), vocab, 2);
  const std::vector<Session> valid_sessions =
      encode_sessions(load_sessions_file(valid_path), vocab, 2);

  Hyper hyper;
  hyper.query_dim = settings.query_dim;
  hyper.session_dim = settings.session_dim;
  hyper.embed_dim = settings.embed_dim;
  hyper.vocab_size = vocab.size();

  std::cerr << "training on " << train_sessions.size() << " sessions, validating on "
            << valid_sessions.size() << " (seed " << settings.train.seed << ")\n";
  const Checkpoint ckpt = fit(train_sessions, valid_sessions, hyper, settings.train,
                              fnv1a64_file(args.vocab), &std::cerr);
  checkpoint_save(ckpt, args.checkpoint, settings.checkpoint_bits / 8);
  std::cerr << "checkpoint written to " << args.checkpoint << " (best validation "
            << fixed6(ckpt.history.empty()
                          ? -std::numeric_limits<double>::infinity()
                          : *std::max_element(ckpt.history.begin(), ckpt.history.end()))
            << ")\n";
  if (ckpt.diverged) std::cerr << "warning: training diverged; checkpoint is pre-divergence\n";
  return 0;
}

struct SuggestArgs {
  std::string checkpoint;
  std::string vocab;
  std::string context;
  std::string out;
  bool interactive = false;
};

void print_suggestions(std::ostream& os, const ModelParams& params, const Vocabulary& vocab,
                       const std::vector<std::string>& context, const Settings& settings) {
  BeamConfig config;
  config.max_length = settings.max_length;
  const std::vector<ScoredText> results = suggest(params, vocab, context, settings.k, config);
  std::size_t rank = 1;
  for (const auto& result : results) {
    os << rank << "\t" << result.text << "\t" << fixed6(result.log_prob) << "\n";
    ++rank;
  }
}

int cmd_suggest(const SuggestArgs& args, const Settings& settings) {
  const Vocabulary vocab = load_vocab_file(args.vocab);
  const Checkpoint ckpt = load_checkpoint_checked(args.checkpoint, args.vocab, vocab);
  OutputTarget target(args.out);
  std::ostream& os = target.stream();
  os << "# checkpoint " << args.checkpoint << "\n";
  os << "# seed " << settings.train.seed << "\n";
  os << "# k " << settings.k << "\n";
  os << "# max_length " << settings.max_length << "\n";

  if (args.interactive) {
    std::string line;
    std::cerr << "context> " << std::flush;
    while (std::getline(std::cin, line)) {
      try {
        if (!trim(line).empty()) {
          print_suggestions(os, ckpt.params, vocab, context_from_inline(line), settings);
          os << std::flush;
        }
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
      }
      std::cerr << "context> " << std::flush;
    }
    std::cerr << "\n";
  } else {
    if (args.context.empty()) {
      throw UsageFailure("suggest needs --context (or --interactive)");
    }
    print_suggestions(os, ckpt.params, vocab, context_from_inline(args.context), settings);
  }
  target.close();
  return 0;
}

struct RescoreArgs {
  std::string checkpoint;
  std::string vocab;
  std::string context;
  std::string candidates;  // file; stdin when empty
  std::string out;
};

int cmd_rescore(const RescoreArgs& args, const Settings& settings) {
  const Vocabulary vocab = load_vocab_file(args.vocab);
  const Checkpoint ckpt = load_checkpoint_checked(args.checkpoint, args.vocab, vocab);
  if (args.context.empty()) throw UsageFailure("rescore needs --context");
  const std::vector<std::string> context_texts = context_from_inline(args.context);
  std::vector<std::vector<int>> context;
  for (const auto& text : context_texts) {
    std::vector<int> tokens = encode_query_text(vocab, text);
    if (!tokens.empty()) context.push_back(std::move(tokens));
  }

  std::ifstream file;
  if (!args.candidates.empty()) {
    file.open(args.candidates);
    if (!file) throw std::runtime_error("cannot open candidates file " + args.candidates);
  }
  std::istream& in = args.candidates.empty() ? std::cin : file;

  OutputTarget target(args.out);
  std::ostream& os = target.stream();
  os << "# checkpoint " << args.checkpoint << "\n";
  os << "# seed " << settings.train.seed << "\n";
  std::string line;
  while (std::getline(in, line)) {
    const std::string cleaned = normalize_query(line);
    if (cleaned.empty()) continue;
    const std::vector<int> tokens = encode_query_text(vocab, cleaned);
    os << fixed6(rescore(ckpt.params, context, tokens)) << "\t" << cleaned << "\n";
  }
  target.close();
  return 0;
}

struct EvalArgs {
  std::string sessions;  // preprocess prefix
  std::string checkpoint;
  std::string vocab;
  std::string out;
  std::string dump_instances;
};

int cmd_eval(const EvalArgs& args, const Settings& settings) {
  if (settings.scenario != "next" && settings.scenario != "robust" &&
      settings.scenario != "longtail") {
    throw UsageFailure("--scenario must be next, robust or longtail");
  }
  const Vocabulary vocab = load_vocab_file(args.vocab);
  const Checkpoint ckpt = load_checkpoint_checked(args.checkpoint, args.vocab, vocab);
  const std::vector<TextSession> background = load_sessions_file(args.sessions + ".background");
  const std::vector<TextSession> training = load_sessions_file(args.sessions + ".training");
  const std::vector<TextSession> test = load_sessions_file(args.sessions + ".test");

  const AdjIndex adj = build_adj(background);
  const QvmmTree qvmm = build_qvmm(background, settings.qvmm_order);

  auto scenario_instances = [&](const std::vector<TextSession>& sessions,
                                std::uint64_t corruption_stream) {
    std::vector<ScenarioInstance> instances;
    if (settings.scenario == "longtail") {
      instances = build_longtail_scenario(sessions, adj);
    } else {
      instances = build_next_query_scenario(sessions, adj);
      if (settings.scenario == "robust") {
        Prng prng = Prng(settings.train.seed).fork(corruption_stream);
        instances = build_robust_scenario(instances, adj, prng);
      }
    }
    return instances;
  };
  const std::vector<ScenarioInstance> train_instances = scenario_instances(training, 1);
  const std::vector<ScenarioInstance> test_instances = scenario_instances(test, 2);
  if (test_instances.empty()) {
    throw std::runtime_error("eval: the " + settings.scenario +
                             " scenario produced no test instances");
  }
  if (train_instances.empty()) {
    throw std::runtime_error("eval: the " + settings.scenario +
                             " scenario produced no ranker-training instances");
  }
  if (!args.dump_instances.empty()) write_instances(args.dump_instances, test_instances);

  auto featurize_all = [&](const std::vector<ScenarioInstance>& instances, bool with_model) {
    std::vector<RankedExample> examples;
    examples.reserve(instances.size());
    for (const auto& instance : instances) {
      examples.push_back(featurize_instance(instance, adj, qvmm,
                                            with_model ? &ckpt.params : nullptr,
                                            with_model ? &vocab : nullptr));
    }
    return examples;
  };

  RankerConfig ranker_config;
  ranker_config.seed = settings.train.seed;
  const RankerModel ranker_plain = train_ranker(featurize_all(train_instances, false),
                                                ranker_config);
  const RankerModel ranker_hred = train_ranker(featurize_all(train_instances, true),
                                               ranker_config);

  std::vector<std::vector<std::size_t>> adj_rankings, plain_rankings, hred_rankings,
      rescore_rankings;
  const std::vector<RankedExample> test_plain = featurize_all(test_instances, false);
  const std::vector<RankedExample> test_hred = featurize_all(test_instances, true);
  for (std::size_t i = 0; i < test_instances.size(); ++i) {
    adj_rankings.push_back(rank_by_adj(adj, test_instances[i]));
    plain_rankings.push_back(rank_candidates(ranker_plain, test_plain[i]));
    hred_rankings.push_back(rank_candidates(ranker_hred, test_hred[i]));
    rescore_rankings.push_back(rank_by_rescore(ckpt.params, vocab, test_instances[i]));
  }

  ScenarioEvaluation evaluation;
  evaluation.scenario = settings.scenario;
  evaluation.config_echo = {
      {"seed", std::to_string(settings.train.seed)},
      {"qvmm_order", std::to_string(settings.qvmm_order)},
      {"background_sessions", std::to_string(background.size())},
      {"training_instances", std::to_string(train_instances.size())},
      {"checkpoint", args.checkpoint},
      {"vocab_digest", std::to_string(fnv1a64_file(args.vocab))},
      {"ranker", "pairwise logistic regression (LambdaMART substitute)"},
  };
  evaluation.systems = {
      {"adj", bucketed_report(test_instances, adj_rankings)},
      {"ranker", bucketed_report(test_instances, plain_rankings)},
      {"ranker_hred", bucketed_report(test_instances, hred_rankings)},
      {"hred_rescore", bucketed_report(test_instances, rescore_rankings)},
  };
  evaluation.truncation = context_truncation_curve(ckpt.params, vocab, test_instances);

  OutputTarget target(args.out);
  target.stream() << format_report(evaluation);
  target.close();
  return 0;
}

struct DumpEmbeddingsArgs {
  std::string checkpoint;
  std::string vocab;
  std::string sessions;
  std::string out;
};

int cmd_dump_embeddings(const DumpEmbeddingsArgs& args) {
  const Vocabulary vocab = load_vocab_file(args.vocab);
  const Checkpoint ckpt = load_checkpoint_checked(args.checkpoint, args.vocab, vocab);
  std::vector<TextSession> sessions;
  if (!args.sessions.empty()) sessions = load_sessions_file(args.sessions);
  const EmbeddingExport exported = export_embeddings(ckpt.params, vocab, sessions);

  OutputTarget target(args.out);
  std::ostream& os = target.stream();
  os << "# checkpoint " << args.checkpoint << "\n";
  auto write_row = [&os](const char* kind, const std::string& name, const Vector& values) {
    os << kind << "\t" << name << "\t";
    for (std::size_t i = 0; i < values.dim(); ++i) {
      if (i > 0) os << " ";
      os << fixed6(values[i]);
    }
    os << "\n";
  };
  for (const auto& [word, row] : exported.words) write_row("word", word, row);
  for (const auto& [query, vec] : exported.queries) write_row("query", query, vec);
  target.close();
  return 0;
}

struct DumpGatesArgs {
  std::string checkpoint;
  std::string vocab;
  std::string context;
  std::string sessions;
  std::string out;
};

int cmd_dump_gates(const DumpGatesArgs& args) {
  const Vocabulary vocab = load_vocab_file(args.vocab);
  const Checkpoint ckpt = load_checkpoint_checked(args.checkpoint, args.vocab, vocab);
  std::vector<std::pair<std::string, Session>> sessions;
  if (!args.context.empty()) {
    const std::vector<std::string> texts = context_from_inline(args.context);
    Session session;
    for (const auto& text : texts) {
      std::vector<int> tokens = encode_query_text(vocab, text);
      if (!tokens.empty()) session.queries.push_back(std::move(tokens));
    }
    if (session.queries.empty()) throw UsageFailure("--context has no encodable queries");
    sessions.emplace_back("context", std::move(session));
  } else if (!args.sessions.empty()) {
    const std::vector<TextSession> text_sessions = load_sessions_file(args.sessions);
    std::size_t index = 0;
    for (const auto& ts : text_sessions) {
      Session encoded = encode_session(ts, vocab);
      if (!encoded.queries.empty()) {
        sessions.emplace_back("session_" + std::to_string(index), std::move(encoded));
      }
      ++index;
    }
  } else {
    throw UsageFailure("dump-gates needs --context or --sessions");
  }

  OutputTarget target(args.out);
  std::ostream& os = target.stream();
  os << "# checkpoint " << args.checkpoint << "\n";
  for (const auto& [label, session] : sessions) {
    const std::vector<Vector> gates = update_gate_trace(ckpt.params, session);
    for (std::size_t m = 0; m < gates.size(); ++m) {
      double mean = 0.0, peak = 0.0;
      for (double g : gates[m]) {
        mean += g;
        peak = std::max(peak, g);
      }
      mean /= static_cast<double>(gates[m].dim());
      os << label << "\t" << m + 1 << "\t" << fixed6(mean) << "\t" << fixed6(peak) << "\n";
    }
  }
  target.close();
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"hierarchical recurrent encoder-decoder query suggestion toolkit"};
  app.require_subcommand(1);

  Settings settings;
  std::string config_path;
  std::optional<std::uint64_t> flag_seed;

  // shared flags registered on every subcommand
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value settings file");
    cmd->add_option("--seed", flag_seed, "random seed (overrides HRED_SEED and config)");
  };

  PreprocessArgs pre;
  CLI::App* preprocess = app.add_subcommand("preprocess", "segment a raw query log");
  preprocess->add_option("--log", pre.log_path, "tab-separated log: user, query, timestamp")
      ->required();
  preprocess->add_option("--out", pre.out, "output sessions file (or prefix with --cutoffs)")
      ->required();
  preprocess->add_option("--cutoffs", pre.cutoffs,
                         "three comma-separated timestamps for the time splits");
  add_common(preprocess);

  VocabArgs voc;
  CLI::App* vocab_cmd = app.add_subcommand("vocab", "build a vocabulary from sessions");
  vocab_cmd->add_option("--sessions", voc.sessions, "sessions file")->required();
  vocab_cmd->add_option("--vocab-size", voc.vocab_size, "content words to keep");
  vocab_cmd->add_option("--out", voc.out, "output vocabulary file")->required();
  add_common(vocab_cmd);

  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--sessions", tr.sessions, "sessions file or preprocess prefix")
      ->required();
  train_cmd->add_option("--validation", tr.validation, "validation sessions file");
  train_cmd->add_option("--vocab", tr.vocab, "vocabulary file")->required();
  train_cmd->add_option("--checkpoint", tr.checkpoint, "output checkpoint path")->required();
  add_common(train_cmd);

  SuggestArgs sug;
  CLI::App* suggest_cmd = app.add_subcommand("suggest", "generate next-query suggestions");
  suggest_cmd->add_option("--checkpoint", sug.checkpoint, "model checkpoint")->required();
  suggest_cmd->add_option("--vocab", sug.vocab, "vocabulary file")->required();
  suggest_cmd->add_option("--context", sug.context, "tab-separated context queries");
  suggest_cmd->add_option("--out", sug.out, "output file (default stdout)");
  suggest_cmd->add_flag("--interactive", sug.interactive, "read context lines from stdin");
  suggest_cmd->add_option("--k", settings.k, "suggestions to return");
  suggest_cmd->add_option("--max-length", settings.max_length, "maximum words per suggestion");
  add_common(suggest_cmd);

  RescoreArgs rs;
  CLI::App* rescore_cmd = app.add_subcommand("rescore", "score candidate queries in context");
  rescore_cmd->add_option("--checkpoint", rs.checkpoint, "model checkpoint")->required();
  rescore_cmd->add_option("--vocab", rs.vocab, "vocabulary file")->required();
  rescore_cmd->add_option("--context", rs.context, "tab-separated context queries");
  rescore_cmd->add_option("--candidates", rs.candidates,
                          "file of candidate queries, one per line (default stdin)");
  rescore_cmd->add_option("--out", rs.out, "output file (default stdout)");
  add_common(rescore_cmd);

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "run a reranking evaluation scenario");
  eval_cmd->add_option("--sessions", ev.sessions, "preprocess output prefix")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("--vocab", ev.vocab, "vocabulary file")->required();
  eval_cmd->add_option("--scenario", settings.scenario, "next | robust | longtail");
  eval_cmd->add_option("--qvmm-order", settings.qvmm_order, "Markov model maximum order");
  eval_cmd->add_option("--out", ev.out, "report file (default stdout)");
  eval_cmd->add_option("--dump-instances", ev.dump_instances, "also write the test instances");
  add_common(eval_cmd);

  DumpEmbeddingsArgs de;
  CLI::App* dump_emb = app.add_subcommand("dump-embeddings", "write word and query vectors");
  dump_emb->add_option("--checkpoint", de.checkpoint, "model checkpoint")->required();
  dump_emb->add_option("--vocab", de.vocab, "vocabulary file")->required();
  dump_emb->add_option("--sessions", de.sessions, "optional sessions to embed");
  dump_emb->add_option("--out", de.out, "output file (default stdout)");
  add_common(dump_emb);

  DumpGatesArgs dg;
  CLI::App* dump_gates = app.add_subcommand("dump-gates", "session update-gate magnitudes");
  dump_gates->add_option("--checkpoint", dg.checkpoint, "model checkpoint")->required();
  dump_gates->add_option("--vocab", dg.vocab, "vocabulary file")->required();
  dump_gates->add_option("--context", dg.context, "tab-separated context queries");
  dump_gates->add_option("--sessions", dg.sessions, "sessions file to trace");
  dump_gates->add_option("--out", dg.out, "output file (default stdout)");
  add_common(dump_gates);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) load_config_file(settings, config_path);
    // re-apply flag values that config keys would otherwise shadow
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError&) {
      return 1;  // unreachable: the first parse succeeded
    }
    resolve_seed(settings, flag_seed);

    if (preprocess->parsed()) return cmd_preprocess(pre);
    if (vocab_cmd->parsed()) return cmd_vocab(voc, settings);
    if (train_cmd->parsed()) return cmd_train(tr, settings);
    if (suggest_cmd->parsed()) return cmd_suggest(sug, settings);
    if (rescore_cmd->parsed()) return cmd_rescore(rs, settings);
    if (eval_cmd->parsed()) return cmd_eval(ev, settings);
    if (dump_emb->parsed()) return cmd_dump_embeddings(de);
    if (dump_gates->parsed()) return cmd_dump_gates(dg);
    throw UsageFailure("no subcommand selected");
  } catch (const UsageFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("hredqs");
  for (const auto& a : args) argv_storage.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(argv_storage.size());
  for (const auto& a : argv_storage) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hred
