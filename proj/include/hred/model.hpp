#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hred/corpus.hpp"
#include "hred/numerics.hpp"

// The hierarchical recurrent encoder-decoder: a token-level GRU encoder that
// turns each query into a vector, a session-level GRU over those vectors, and
// a GRU decoder that predicts the next query one word at a time.

namespace hred {

// Marker for "no previous word" when predicting the first word of a query.
inline constexpr int kNoPrevWord = -1;

struct Hyper {
  std::size_t query_dim = 0;    // token-level recurrent state size
  std::size_t session_dim = 0;  // session-level recurrent state size
  std::size_t embed_dim = 0;    // output word embedding size
  int vocab_size = 0;
};

struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  // hidden_dim x input_dim; for one-hot token input, column lookup.
  Matrix in_reset, in_update, in_cand;
  // hidden_dim x hidden_dim
  Matrix rec_reset, rec_update, rec_cand;
};

struct ModelParams {
  Hyper hyper;
  GruParams enc;  // tokens -> query vector
  GruParams ses;  // query vectors -> session state
  GruParams dec;  // tokens -> decoder state
  Matrix dec_init_w;  // query_dim x session_dim
  Vector dec_init_b;  // query_dim
  Matrix out_state;   // embed_dim x query_dim
  Matrix out_prev;    // embed_dim x vocab_size
  Vector out_bias;    // embed_dim
  Matrix out_embed;   // vocab_size x embed_dim, one row per word
};

// Input/output/projection matrices uniform-scaled, recurrent matrices
// orthogonal, biases zero. Draw order is fixed, so equal seeds give
// bit-identical parameters.
ModelParams init_model(const Hyper& hyper, Prng& prng);

// All tensors allocated to the right shapes and filled with zeros; used for
// gradient buffers and deserialization targets.
ModelParams zero_model(const Hyper& hyper);

void check_shapes(const ModelParams& params);

struct GruActivations {
  Vector h;     // new state
  Vector reset;
  Vector update;
  Vector cand;  // tanh candidate state
};

// One gated recurrence step:
//   r = sigmoid(Wr x + Ur h_prev), u = sigmoid(Wu x + Uu h_prev)
//   c = tanh(Wc x + Uc (r * h_prev)),  h = (1 - u) * h_prev + u * c
GruActivations gru_step(const GruParams& p, const Vector& h_prev, const Vector& x);
// One-hot input form; selects column `token` of each input matrix.
GruActivations gru_step(const GruParams& p, const Vector& h_prev, int token);

// Folds the encoder over tokens plus the end-of-query id; returns the final
// state. Throws on an empty token list.
Vector encode_query(const GruParams& enc, const std::vector<int>& tokens);

// Session-level states s_1..s_M (s_0 = 0), one per query.
std::vector<Vector> encode_session(const ModelParams& params, const Session& session);

// Initial decoder state from the previous session state.
Vector decoder_init(const ModelParams& params, const Vector& session_state);

// Distribution over the next word given the decoder state and the previously
// consumed word (kNoPrevWord before the first word of a query).
Vector next_word_distribution(const ModelParams& params, const Vector& dec_state,
                              int prev_word);
Vector next_word_log_distribution(const ModelParams& params, const Vector& dec_state,
                                  int prev_word);

// Teacher-forced log-probability of `tokens` followed by the end-of-query
// token, conditioned on the session state that precedes the query.
double query_log_prob(const ModelParams& params, const Vector& session_state,
                      const std::vector<int>& tokens);

// Sum of query_log_prob over all queries of the session, each conditioned on
// the states before it (the first query is scored from the zero state).
double session_log_likelihood(const ModelParams& params, const Session& session);

// Everything the backward pass needs, cached per step.
struct QueryTrace {
  std::vector<int> tokens;                  // content tokens + end-of-query
  std::vector<GruActivations> enc_steps;    // one per token
  Vector dec_init_state;
  std::vector<GruActivations> dec_steps;    // advances on all but the last token
  std::vector<Vector> omegas;               // pre-logit combination per step
  std::vector<Vector> probs;                // softmax per step
  std::vector<double> token_log_probs;
  double log_prob = 0.0;
};

struct ForwardTrace {
  std::vector<QueryTrace> queries;
  std::vector<GruActivations> session_steps;  // one per query
  double log_likelihood = 0.0;
};

ForwardTrace forward_trace(const ModelParams& params, const Session& session);

// Session-level update-gate magnitudes, one vector per query.
std::vector<Vector> update_gate_trace(const ModelParams& params, const Session& session);

struct EmbeddingExport {
  std::vector<std::pair<std::string, Vector>> words;    // all vocab ids in order
  std::vector<std::pair<std::string, Vector>> queries;  // one per supplied query
};

EmbeddingExport export_embeddings(const ModelParams& params, const Vocabulary& vocab,
                                  const std::vector<TextSession>& sessions = {});

}  // namespace hred
