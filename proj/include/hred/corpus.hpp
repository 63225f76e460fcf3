#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

// Query-log preprocessing: normalization, session segmentation, vocabulary
// construction, time-based splits, and the text file formats.

namespace hred {

inline constexpr int kUnknownId = 0;
inline constexpr int kEndOfQueryId = 1;
inline constexpr int kNumReservedIds = 2;
inline constexpr std::int64_t kSessionGapSeconds = 30 * 60;

struct RawLogRecord {
  std::string user_id;
  std::string query_text;
  std::int64_t timestamp = 0;  // seconds since epoch
};

// A segmented session in text form, one normalized query per entry.
struct TextSession {
  std::string user_id;
  std::vector<std::string> queries;
  std::vector<std::int64_t> timestamps;  // one per query; not serialized

  std::int64_t start_time() const { return timestamps.empty() ? 0 : timestamps.front(); }
  std::int64_t end_time() const { return timestamps.empty() ? 0 : timestamps.back(); }
};

// A vocabulary-encoded session. Queries hold content token ids only; the
// end-of-query id is appended by model code, never stored here.
struct Session {
  std::vector<std::vector<int>> queries;
  std::int64_t start_time = 0;
  std::int64_t end_time = 0;
};

// word <-> id table. Ids 0 and 1 are reserved (unknown, end-of-query);
// content words occupy dense ids starting at 2, in frequency-rank order.
class Vocabulary {
 public:
  Vocabulary() = default;

  // ranked_words: content words in rank order (id = index + 2).
  explicit Vocabulary(std::vector<std::string> ranked_words);

  int size() const { return static_cast<int>(id_to_word_.size()); }
  int word_to_id(std::string_view word) const;
  const std::string& id_to_word(int id) const { return id_to_word_.at(id); }
  bool contains(std::string_view word) const;

  // All words in id order, including the two reserved entries.
  const std::vector<std::string>& words() const { return id_to_word_; }

 private:
  std::vector<std::string> id_to_word_;
  std::unordered_map<std::string, int> word_to_id_;
};

// Lowercases, replaces every character outside [a-z0-9] by a space,
// collapses space runs and trims. May return an empty string.
std::string normalize_query(std::string_view text);

// Groups records by user, orders them by timestamp, and cuts a new session
// whenever the idle gap exceeds `gap_seconds`. Queries are normalized; empty
// ones are dropped. Output is ordered by (start_time, user_id).
std::vector<TextSession> segment_sessions(const std::vector<RawLogRecord>& records,
                                          std::int64_t gap_seconds = kSessionGapSeconds);

// Top `max_size` words by frequency (ties broken lexicographically).
// Throws std::runtime_error on an empty corpus.
Vocabulary build_vocabulary(const std::vector<TextSession>& sessions, std::size_t max_size);

// Encodes each query, dropping queries with no words. The result may hold
// fewer queries than the input; callers filter by minimum query count.
Session encode_session(const TextSession& session, const Vocabulary& vocab);

// Encode a batch, keeping only sessions with at least `min_queries` queries.
std::vector<Session> encode_sessions(const std::vector<TextSession>& sessions,
                                     const Vocabulary& vocab, std::size_t min_queries);

std::string decode_tokens(const Vocabulary& vocab, const std::vector<int>& tokens);

// Normalizes free text and maps each word to its id (unknown for words
// outside the vocabulary). May return an empty vector.
std::vector<int> encode_query_text(const Vocabulary& vocab, std::string_view text);

struct DatasetSplits {
  std::vector<TextSession> background;
  std::vector<TextSession> training;
  std::vector<TextSession> validation;
  std::vector<TextSession> test;
  std::array<std::int64_t, 3> cutoffs{};
};

// Assigns sessions to ranges by start_time. A session whose start_time
// equals a cutoff goes to the later split. Cutoffs must be strictly
// increasing. Empty splits produce a warning on stderr, not an error.
DatasetSplits split_by_time(const std::vector<TextSession>& sessions,
                            const std::array<std::int64_t, 3>& cutoffs);

// Throws std::invalid_argument if a session violates its type invariants.
void validate_session(const Session& session, int vocab_size, bool for_training);

// --- file formats ---

struct LogParseResult {
  std::vector<RawLogRecord> records;
  std::size_t malformed_lines = 0;
};

// One record per line: user_id TAB query_text TAB epoch_seconds.
// Malformed lines are skipped and counted.
LogParseResult read_query_log(const std::string& path);

// One session per line: start_time TAB query TAB query ...
void write_sessions(const std::string& path, const std::vector<TextSession>& sessions);
std::vector<TextSession> read_sessions(const std::string& path);

// One content word per line in rank order (line number + 2 = token id).
void write_vocabulary(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::string& path);

// FNV-1a 64-bit digest, used for vocabulary and tensor fingerprints.
std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace hred
