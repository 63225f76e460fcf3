#include "hred/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hred {

namespace {

const std::string kUnknownWord = "<unk>";
const std::string kEndOfQueryWord = "<eoq>";

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t j = text.find(' ', i);
    if (j == std::string_view::npos) j = text.size();
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j + 1;
  }
  return words;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> ranked_words) {
  id_to_word_.reserve(ranked_words.size() + kNumReservedIds);
  id_to_word_.push_back(kUnknownWord);
  id_to_word_.push_back(kEndOfQueryWord);
  for (auto& w : ranked_words) id_to_word_.push_back(std::move(w));
  for (int id = kNumReservedIds; id < size(); ++id) {
    word_to_id_.emplace(id_to_word_[id], id);
  }
}

int Vocabulary::word_to_id(std::string_view word) const {
  auto it = word_to_id_.find(std::string(word));
  return it == word_to_id_.end() ? kUnknownId : it->second;
}

bool Vocabulary::contains(std::string_view word) const {
  return word_to_id_.count(std::string(word)) > 0;
}

std::string normalize_query(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    char lower = static_cast<char>(std::tolower(u));
    if ((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9')) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(lower);
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::vector<TextSession> segment_sessions(const std::vector<RawLogRecord>& records,
                                          std::int64_t gap_seconds) {
  // Group by user, keeping input order within a user for equal timestamps.
  std::unordered_map<std::string, std::vector<const RawLogRecord*>> by_user;
  for (const auto& rec : records) by_user[rec.user_id].push_back(&rec);

  std::vector<TextSession> sessions;
  for (auto& [user, recs] : by_user) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const RawLogRecord* a, const RawLogRecord* b) {
                       return a->timestamp < b->timestamp;
                     });
    TextSession current;
    std::int64_t last_ts = 0;
    for (const RawLogRecord* rec : recs) {
      std::string query = normalize_query(rec->query_text);
      if (query.empty()) continue;
      if (!current.queries.empty() && rec->timestamp - last_ts > gap_seconds) {
        sessions.push_back(std::move(current));
        current = TextSession{};
      }
      if (current.queries.empty()) current.user_id = user;
      current.queries.push_back(std::move(query));
      current.timestamps.push_back(rec->timestamp);
      last_ts = rec->timestamp;
    }
    if (!current.queries.empty()) sessions.push_back(std::move(current));
  }
  std::sort(sessions.begin(), sessions.end(), [](const TextSession& a, const TextSession& b) {
    if (a.start_time() != b.start_time()) return a.start_time() < b.start_time();
    return a.user_id < b.user_id;
  });
  return sessions;
}

Vocabulary build_vocabulary(const std::vector<TextSession>& sessions, std::size_t max_size) {
  if (max_size < 1) throw std::invalid_argument("build_vocabulary: max_size must be >= 1");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& session : sessions) {
    for (const auto& query : session.queries) {
      for (auto& word : split_words(query)) counts[std::move(word)] += 1;
    }
  }
  if (counts.empty()) throw std::runtime_error("build_vocabulary: empty corpus");

  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);

  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto& [word, count] : ranked) words.push_back(std::move(word));
  return Vocabulary(std::move(words));
}

Session encode_session(const TextSession& session, const Vocabulary& vocab) {
  Session out;
  out.start_time = session.start_time();
  out.end_time = session.end_time();
  for (const auto& query : session.queries) {
    std::vector<int> ids;
    for (const auto& word : split_words(query)) ids.push_back(vocab.word_to_id(word));
    if (!ids.empty()) out.queries.push_back(std::move(ids));
  }
  return out;
}

std::vector<Session> encode_sessions(const std::vector<TextSession>& sessions,
                                     const Vocabulary& vocab, std::size_t min_queries) {
  std::vector<Session> out;
  for (const auto& session : sessions) {
    Session enc = encode_session(session, vocab);
    if (enc.queries.size() >= min_queries) out.push_back(std::move(enc));
  }
  return out;
}

std::vector<int> encode_query_text(const Vocabulary& vocab, std::string_view text) {
  std::vector<int> ids;
  for (const auto& word : split_words(normalize_query(text))) {
    ids.push_back(vocab.word_to_id(word));
  }
  return ids;
}

std::string decode_tokens(const Vocabulary& vocab, const std::vector<int>& tokens) {
  std::string out;
  for (int id : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += vocab.id_to_word(id);
  }
  return out;
}

DatasetSplits split_by_time(const std::vector<TextSession>& sessions,
                            const std::array<std::int64_t, 3>& cutoffs) {
  if (!(cutoffs[0] < cutoffs[1] && cutoffs[1] < cutoffs[2])) {
    throw std::invalid_argument("split_by_time: cutoffs must be strictly increasing");
  }
  DatasetSplits splits;
  splits.cutoffs = cutoffs;
  for (const auto& session : sessions) {
    const std::int64_t t = session.start_time();
    if (t < cutoffs[0]) {
      splits.background.push_back(session);
    } else if (t < cutoffs[1]) {
      splits.training.push_back(session);
    } else if (t < cutoffs[2]) {
      splits.validation.push_back(session);
    } else {
      splits.test.push_back(session);
    }
  }
  auto warn_if_empty = [](const std::vector<TextSession>& split, const char* name) {
    if (split.empty()) std::cerr << "warning: split '" << name << "' is empty\n";
  };
  warn_if_empty(splits.background, "background");
  warn_if_empty(splits.training, "training");
  warn_if_empty(splits.validation, "validation");
  warn_if_empty(splits.test, "test");
  return splits;
}

void validate_session(const Session& session, int vocab_size, bool for_training) {
  if (for_training && session.queries.size() < 2) {
    throw std::invalid_argument("session: training use requires >= 2 queries, got " +
                                std::to_string(session.queries.size()));
  }
  if (session.start_time > session.end_time) {
    throw std::invalid_argument("session: start_time after end_time");
  }
  for (const auto& query : session.queries) {
    if (query.empty()) throw std::invalid_argument("session: empty query");
    for (int id : query) {
      if (id < 0 || id >= vocab_size) {
        throw std::invalid_argument("session: token id " + std::to_string(id) +
                                    " outside vocabulary of size " + std::to_string(vocab_size));
      }
    }
  }
}

LogParseResult read_query_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_query_log: cannot open " + path);
  LogParseResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::size_t t1 = line.find('\t');
    const std::size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      ++result.malformed_lines;
      continue;
    }
    RawLogRecord rec;
    rec.user_id = line.substr(0, t1);
    rec.query_text = line.substr(t1 + 1, t2 - t1 - 1);
    const std::string ts = line.substr(t2 + 1);
    try {
      std::size_t pos = 0;
      rec.timestamp = std::stoll(ts, &pos);
      if (pos != ts.size() || rec.timestamp < 0 || rec.user_id.empty()) {
        ++result.malformed_lines;
        continue;
      }
    } catch (const std::exception&) {
      ++result.malformed_lines;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_sessions(const std::string& path, const std::vector<TextSession>& sessions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_sessions: cannot open " + path);
  for (const auto& session : sessions) {
    out << session.start_time();
    for (const auto& query : session.queries) out << '\t' << query;
    out << '\n';
  }
}

std::vector<TextSession> read_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_sessions: cannot open " + path);
  std::vector<TextSession> sessions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    if (!std::getline(ss, field, '\t')) continue;
    TextSession session;
    std::int64_t start = 0;
    try {
      start = std::stoll(field);
    } catch (const std::exception&) {
      throw std::runtime_error("read_sessions: bad start_time at " + path + ":" +
                               std::to_string(lineno));
    }
    while (std::getline(ss, field, '\t')) {
      if (field.empty()) continue;
      session.queries.push_back(field);
      session.timestamps.push_back(start);  // per-query times are not serialized
    }
    if (!session.queries.empty()) sessions.push_back(std::move(session));
  }
  return sessions;
}

void write_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_vocabulary: cannot open " + path);
  for (int id = kNumReservedIds; id < vocab.size(); ++id) {
    out << vocab.id_to_word(id) << '\n';
  }
}

Vocabulary read_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_vocabulary: cannot open " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) words.push_back(line);
  }
  return Vocabulary(std::move(words));
}

std::uint64_t fnv1a64(const void* bytes, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

}  // namespace hred
