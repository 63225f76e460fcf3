#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <stdexcept>

#include "hred/baselines.hpp"
#include "hred/corpus.hpp"
#include "hred/decoding.hpp"
#include "hred/model.hpp"
#include "hred/training.hpp"

namespace py = pybind11;

namespace {

// Queries-as-text is the natural python surface; timestamps only matter for
// session segmentation, which stays on the C++/CLI side.
std::vector<hred::TextSession> to_text_sessions(const std::vector<std::vector<std::string>>& raw) {
  std::vector<hred::TextSession> sessions;
  sessions.reserve(raw.size());
  for (const auto& queries : raw) {
    hred::TextSession session;
    session.queries = queries;
    session.timestamps.assign(queries.size(), 0);
    sessions.push_back(std::move(session));
  }
  return sessions;
}

std::vector<hred::Session> encode_all(const std::vector<std::vector<std::string>>& raw,
                                      const hred::Vocabulary& vocab) {
  return hred::encode_sessions(to_text_sessions(raw), vocab, 2);
}

std::vector<std::vector<int>> encode_context(const hred::Vocabulary& vocab,
                                             const std::vector<std::string>& context) {
  std::vector<std::vector<int>> encoded;
  for (const auto& text : context) {
    std::vector<int> tokens = hred::encode_query_text(vocab, text);
    if (tokens.empty()) throw std::invalid_argument("context query '" + text + "' has no words");
    encoded.push_back(std::move(tokens));
  }
  if (encoded.empty()) throw std::invalid_argument("context is empty");
  return encoded;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hierarchical recurrent encoder-decoder query suggestion core";

  py::class_<hred::Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::vector<std::string>>& sessions, std::size_t max_size) {
            return hred::build_vocabulary(to_text_sessions(sessions), max_size);
          },
          py::arg("sessions"), py::arg("max_size"))
      .def_static("load", &hred::read_vocabulary, py::arg("path"))
      .def("save",
           [](const hred::Vocabulary& vocab, const std::string& path) {
             hred::write_vocabulary(path, vocab);
           },
           py::arg("path"))
      .def("__len__", &hred::Vocabulary::size)
      .def("__contains__",
           [](const hred::Vocabulary& vocab, const std::string& word) {
             return vocab.contains(word);
           })
      .def("words", &hred::Vocabulary::words);

  py::class_<hred::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &hred::TrainConfig::learning_rate)
      .def_readwrite("rmsprop_decay", &hred::TrainConfig::rmsprop_decay)
      .def_readwrite("epsilon", &hred::TrainConfig::epsilon)
      .def_readwrite("clip_threshold", &hred::TrainConfig::clip_threshold)
      .def_readwrite("batch_size", &hred::TrainConfig::batch_size)
      .def_readwrite("patience", &hred::TrainConfig::patience)
      .def_readwrite("max_epochs", &hred::TrainConfig::max_epochs)
      .def_readwrite("seed", &hred::TrainConfig::seed);

  py::class_<hred::Checkpoint>(m, "Checkpoint")
      .def_readonly("history", &hred::Checkpoint::history)
      .def_readonly("diverged", &hred::Checkpoint::diverged)
      .def_property_readonly("query_dim",
                             [](const hred::Checkpoint& c) { return c.hyper.query_dim; })
      .def_property_readonly("session_dim",
                             [](const hred::Checkpoint& c) { return c.hyper.session_dim; })
      .def_property_readonly("embed_dim",
                             [](const hred::Checkpoint& c) { return c.hyper.embed_dim; })
      .def_property_readonly("vocab_size",
                             [](const hred::Checkpoint& c) { return c.hyper.vocab_size; })
      .def("save",
           [](const hred::Checkpoint& ckpt, const std::string& path, int scalar_bytes) {
             hred::checkpoint_save(ckpt, path, scalar_bytes);
           },
           py::arg("path"), py::arg("scalar_bytes") = 8)
      .def_static("load", &hred::checkpoint_load, py::arg("path"));

  m.def("normalize_query", &hred::normalize_query, py::arg("text"));

  m.def(
      "train",
      [](const std::vector<std::vector<std::string>>& training,
         const std::vector<std::vector<std::string>>& validation, const hred::Vocabulary& vocab,
         std::size_t query_dim, std::size_t session_dim, std::size_t embed_dim,
         const hred::TrainConfig& config) {
        hred::Hyper hyper;
        hyper.query_dim = query_dim;
        hyper.session_dim = session_dim;
        hyper.embed_dim = embed_dim;
        hyper.vocab_size = vocab.size();
        return hred::fit(encode_all(training, vocab), encode_all(validation, vocab), hyper,
                         config);
      },
      py::arg("training"), py::arg("validation"), py::arg("vocab"), py::arg("query_dim") = 64,
      py::arg("session_dim") = 96, py::arg("embed_dim") = 32,
      py::arg("config") = hred::TrainConfig{});

  m.def(
      "suggest",
      [](const hred::Checkpoint& ckpt, const hred::Vocabulary& vocab,
         const std::vector<std::string>& context, std::size_t k, std::size_t max_length) {
        hred::BeamConfig config;
        config.max_length = max_length;
        std::vector<std::pair<std::string, double>> out;
        for (const auto& scored : hred::suggest(ckpt.params, vocab, context, k, config)) {
          out.emplace_back(scored.text, scored.log_prob);
        }
        return out;
      },
      py::arg("checkpoint"), py::arg("vocab"), py::arg("context"), py::arg("k") = 10,
      py::arg("max_length") = 12);

  m.def(
      "rescore",
      [](const hred::Checkpoint& ckpt, const hred::Vocabulary& vocab,
         const std::vector<std::string>& context, const std::string& candidate) {
        const std::vector<int> tokens = hred::encode_query_text(vocab, candidate);
        if (tokens.empty()) throw std::invalid_argument("candidate has no words");
        return hred::rescore(ckpt.params, encode_context(vocab, context), tokens);
      },
      py::arg("checkpoint"), py::arg("vocab"), py::arg("context"), py::arg("candidate"));

  m.def(
      "session_log_likelihood",
      [](const hred::Checkpoint& ckpt, const hred::Vocabulary& vocab,
         const std::vector<std::string>& queries) {
        hred::Session session;
        session.queries = encode_context(vocab, queries);
        return hred::session_log_likelihood(ckpt.params, session);
      },
      py::arg("checkpoint"), py::arg("vocab"), py::arg("queries"));

  m.def("levenshtein",
        [](const std::string& a, const std::string& b) { return hred::levenshtein(a, b); },
        py::arg("a"), py::arg("b"));
}
