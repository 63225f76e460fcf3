#include "hred/model.hpp"

#include <cmath>
#include <stdexcept>

namespace hred {

namespace {

std::vector<int> with_end_of_query(const std::vector<int>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("model: query has no tokens");
  std::vector<int> out = tokens;
  out.push_back(kEndOfQueryId);
  return out;
}

void check_dims(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("model: shape mismatch in " + what);
}

GruActivations gru_core(const GruParams& p, const Vector& h_prev, const Vector* dense_x,
                        int token) {
  check_dims(h_prev.dim() == p.hidden_dim, "gru_step h_prev");
  Vector pre_reset(p.hidden_dim), pre_update(p.hidden_dim), pre_cand(p.hidden_dim);
  if (dense_x != nullptr) {
    check_dims(dense_x->dim() == p.input_dim, "gru_step input");
    accumulate_matvec(p.in_reset, *dense_x, pre_reset);
    accumulate_matvec(p.in_update, *dense_x, pre_update);
    accumulate_matvec(p.in_cand, *dense_x, pre_cand);
  } else {
    if (token < 0 || static_cast<std::size_t>(token) >= p.input_dim) {
      throw std::invalid_argument("gru_step: token id " + std::to_string(token) +
                                  " outside input dimension " + std::to_string(p.input_dim));
    }
    accumulate_column(pre_reset, p.in_reset, static_cast<std::size_t>(token));
    accumulate_column(pre_update, p.in_update, static_cast<std::size_t>(token));
    accumulate_column(pre_cand, p.in_cand, static_cast<std::size_t>(token));
  }
  accumulate_matvec(p.rec_reset, h_prev, pre_reset);
  accumulate_matvec(p.rec_update, h_prev, pre_update);

  GruActivations act;
  act.reset = Vector(p.hidden_dim);
  act.update = Vector(p.hidden_dim);
  for (std::size_t i = 0; i < p.hidden_dim; ++i) {
    act.reset[i] = sigmoid(pre_reset[i]);
    act.update[i] = sigmoid(pre_update[i]);
  }
  Vector gated(p.hidden_dim);
  for (std::size_t i = 0; i < p.hidden_dim; ++i) gated[i] = act.reset[i] * h_prev[i];
  accumulate_matvec(p.rec_cand, gated, pre_cand);
  act.cand = Vector(p.hidden_dim);
  act.h = Vector(p.hidden_dim);
  for (std::size_t i = 0; i < p.hidden_dim; ++i) {
    act.cand[i] = std::tanh(pre_cand[i]);
    act.h[i] = (1.0 - act.update[i]) * h_prev[i] + act.update[i] * act.cand[i];
  }
  return act;
}

Vector run_encoder(const GruParams& enc, const std::vector<int>& tokens,
                   std::vector<GruActivations>* trace) {
  Vector h(enc.hidden_dim);
  for (int token : tokens) {
    GruActivations act = gru_step(enc, h, token);
    h = act.h;
    if (trace != nullptr) trace->push_back(std::move(act));
  }
  return h;
}

Vector output_combination(const ModelParams& p, const Vector& dec_state, int prev_word) {
  Vector omega = affine(p.out_state, dec_state, p.out_bias);
  if (prev_word != kNoPrevWord) {
    if (prev_word < 0 || prev_word >= p.hyper.vocab_size) {
      throw std::invalid_argument("model: previous word id " + std::to_string(prev_word) +
                                  " outside vocabulary");
    }
    accumulate_column(omega, p.out_prev, static_cast<std::size_t>(prev_word));
  }
  return omega;
}

Vector output_logits(const ModelParams& p, const Vector& omega) {
  Vector z(static_cast<std::size_t>(p.hyper.vocab_size));
  accumulate_matvec(p.out_embed, omega, z);
  return z;
}

// Teacher-forced scoring of one query (tokens already include end-of-query).
double score_query(const ModelParams& p, const Vector& dec_init_state,
                   const std::vector<int>& tokens, QueryTrace* trace) {
  Vector d = dec_init_state;
  double total = 0.0;
  int prev = kNoPrevWord;
  const std::size_t steps = tokens.size();
  for (std::size_t n = 0; n < steps; ++n) {
    Vector omega = output_combination(p, d, prev);
    Vector logits = output_logits(p, omega);
    Vector log_probs = log_softmax_stable(logits);
    total += log_probs[static_cast<std::size_t>(tokens[n])];
    if (trace != nullptr) {
      Vector probs(log_probs.dim());
      for (std::size_t i = 0; i < probs.dim(); ++i) probs[i] = std::exp(log_probs[i]);
      trace->omegas.push_back(std::move(omega));
      trace->probs.push_back(std::move(probs));
      trace->token_log_probs.push_back(log_probs[static_cast<std::size_t>(tokens[n])]);
    }
    if (n + 1 < steps) {
      GruActivations act = gru_step(p.dec, d, tokens[n]);
      d = act.h;
      if (trace != nullptr) trace->dec_steps.push_back(std::move(act));
    }
    prev = tokens[n];
  }
  return total;
}

double session_forward(const ModelParams& p, const Session& session, ForwardTrace* trace) {
  Vector s(p.hyper.session_dim);
  double total = 0.0;
  for (const auto& query : session.queries) {
    std::vector<int> tokens = with_end_of_query(query);
    QueryTrace qt;
    QueryTrace* qtp = trace != nullptr ? &qt : nullptr;
    Vector q = run_encoder(p.enc, tokens, qtp != nullptr ? &qt.enc_steps : nullptr);
    Vector d0 = decoder_init(p, s);
    const double lp = score_query(p, d0, tokens, qtp);
    total += lp;
    GruActivations ses_act = gru_step(p.ses, s, q);
    s = ses_act.h;
    if (trace != nullptr) {
      qt.tokens = std::move(tokens);
      qt.dec_init_state = std::move(d0);
      qt.log_prob = lp;
      trace->queries.push_back(std::move(qt));
      trace->session_steps.push_back(std::move(ses_act));
    }
  }
  if (trace != nullptr) trace->log_likelihood = total;
  return total;
}

}  // namespace

ModelParams init_model(const Hyper& hyper, Prng& prng) {
  if (hyper.query_dim < 1 || hyper.session_dim < 1 || hyper.embed_dim < 1 ||
      hyper.vocab_size < 1) {
    throw std::invalid_argument("init_model: all dimensions must be >= 1");
  }
  const auto vocab = static_cast<std::size_t>(hyper.vocab_size);
  ModelParams p;
  p.hyper = hyper;
  auto init_gru = [&prng](GruParams& g, std::size_t input_dim, std::size_t hidden_dim) {
    g.input_dim = input_dim;
    g.hidden_dim = hidden_dim;
    g.in_reset = init_params(hidden_dim, input_dim, InitScheme::kUniformScaled, prng);
    g.in_update = init_params(hidden_dim, input_dim, InitScheme::kUniformScaled, prng);
    g.in_cand = init_params(hidden_dim, input_dim, InitScheme::kUniformScaled, prng);
    g.rec_reset = init_params(hidden_dim, hidden_dim, InitScheme::kOrthogonalRecurrent, prng);
    g.rec_update = init_params(hidden_dim, hidden_dim, InitScheme::kOrthogonalRecurrent, prng);
    g.rec_cand = init_params(hidden_dim, hidden_dim, InitScheme::kOrthogonalRecurrent, prng);
  };
  init_gru(p.enc, vocab, hyper.query_dim);
  init_gru(p.ses, hyper.query_dim, hyper.session_dim);
  init_gru(p.dec, vocab, hyper.query_dim);
  p.dec_init_w = init_params(hyper.query_dim, hyper.session_dim, InitScheme::kUniformScaled, prng);
  p.dec_init_b = Vector(hyper.query_dim);
  p.out_state = init_params(hyper.embed_dim, hyper.query_dim, InitScheme::kUniformScaled, prng);
  p.out_prev = init_params(hyper.embed_dim, vocab, InitScheme::kUniformScaled, prng);
  p.out_bias = Vector(hyper.embed_dim);
  p.out_embed = init_params(vocab, hyper.embed_dim, InitScheme::kUniformScaled, prng);
  return p;
}

ModelParams zero_model(const Hyper& hyper) {
  if (hyper.query_dim < 1 || hyper.session_dim < 1 || hyper.embed_dim < 1 ||
      hyper.vocab_size < 1) {
    throw std::invalid_argument("zero_model: all dimensions must be >= 1");
  }
  const auto vocab = static_cast<std::size_t>(hyper.vocab_size);
  ModelParams p;
  p.hyper = hyper;
  auto zero_gru = [](GruParams& g, std::size_t input_dim, std::size_t hidden_dim) {
    g.input_dim = input_dim;
    g.hidden_dim = hidden_dim;
    g.in_reset = Matrix(hidden_dim, input_dim);
    g.in_update = Matrix(hidden_dim, input_dim);
    g.in_cand = Matrix(hidden_dim, input_dim);
    g.rec_reset = Matrix(hidden_dim, hidden_dim);
    g.rec_update = Matrix(hidden_dim, hidden_dim);
    g.rec_cand = Matrix(hidden_dim, hidden_dim);
  };
  zero_gru(p.enc, vocab, hyper.query_dim);
  zero_gru(p.ses, hyper.query_dim, hyper.session_dim);
  zero_gru(p.dec, vocab, hyper.query_dim);
  p.dec_init_w = Matrix(hyper.query_dim, hyper.session_dim);
  p.dec_init_b = Vector(hyper.query_dim);
  p.out_state = Matrix(hyper.embed_dim, hyper.query_dim);
  p.out_prev = Matrix(hyper.embed_dim, vocab);
  p.out_bias = Vector(hyper.embed_dim);
  p.out_embed = Matrix(vocab, hyper.embed_dim);
  return p;
}

void check_shapes(const ModelParams& p) {
  const auto vocab = static_cast<std::size_t>(p.hyper.vocab_size);
  auto check_gru = [](const GruParams& g, std::size_t in, std::size_t hid,
                      const std::string& name) {
    check_dims(g.input_dim == in && g.hidden_dim == hid, name + " dims");
    check_dims(g.in_reset.rows() == hid && g.in_reset.cols() == in, name + ".in_reset");
    check_dims(g.in_update.rows() == hid && g.in_update.cols() == in, name + ".in_update");
    check_dims(g.in_cand.rows() == hid && g.in_cand.cols() == in, name + ".in_cand");
    check_dims(g.rec_reset.rows() == hid && g.rec_reset.cols() == hid, name + ".rec_reset");
    check_dims(g.rec_update.rows() == hid && g.rec_update.cols() == hid, name + ".rec_update");
    check_dims(g.rec_cand.rows() == hid && g.rec_cand.cols() == hid, name + ".rec_cand");
  };
  check_gru(p.enc, vocab, p.hyper.query_dim, "enc");
  check_gru(p.ses, p.hyper.query_dim, p.hyper.session_dim, "ses");
  check_gru(p.dec, vocab, p.hyper.query_dim, "dec");
  check_dims(p.dec_init_w.rows() == p.hyper.query_dim &&
                 p.dec_init_w.cols() == p.hyper.session_dim, "dec_init_w");
  check_dims(p.dec_init_b.dim() == p.hyper.query_dim, "dec_init_b");
  check_dims(p.out_state.rows() == p.hyper.embed_dim &&
                 p.out_state.cols() == p.hyper.query_dim, "out_state");
  check_dims(p.out_prev.rows() == p.hyper.embed_dim && p.out_prev.cols() == vocab, "out_prev");
  check_dims(p.out_bias.dim() == p.hyper.embed_dim, "out_bias");
  check_dims(p.out_embed.rows() == vocab && p.out_embed.cols() == p.hyper.embed_dim,
             "out_embed");
}

GruActivations gru_step(const GruParams& p, const Vector& h_prev, const Vector& x) {
  return gru_core(p, h_prev, &x, -1);
}

GruActivations gru_step(const GruParams& p, const Vector& h_prev, int token) {
  return gru_core(p, h_prev, nullptr, token);
}

Vector encode_query(const GruParams& enc, const std::vector<int>& tokens) {
  return run_encoder(enc, with_end_of_query(tokens), nullptr);
}

std::vector<Vector> encode_session(const ModelParams& params, const Session& session) {
  std::vector<Vector> states;
  states.reserve(session.queries.size());
  Vector s(params.hyper.session_dim);
  for (const auto& query : session.queries) {
    Vector q = encode_query(params.enc, query);
    GruActivations act = gru_step(params.ses, s, q);
    s = act.h;
    states.push_back(s);
  }
  return states;
}

Vector decoder_init(const ModelParams& params, const Vector& session_state) {
  Vector d = affine(params.dec_init_w, session_state, params.dec_init_b);
  for (std::size_t i = 0; i < d.dim(); ++i) d[i] = std::tanh(d[i]);
  return d;
}

Vector next_word_distribution(const ModelParams& params, const Vector& dec_state,
                              int prev_word) {
  return softmax_stable(output_logits(params, output_combination(params, dec_state, prev_word)));
}

Vector next_word_log_distribution(const ModelParams& params, const Vector& dec_state,
                                  int prev_word) {
  return log_softmax_stable(
      output_logits(params, output_combination(params, dec_state, prev_word)));
}

double query_log_prob(const ModelParams& params, const Vector& session_state,
                      const std::vector<int>& tokens) {
  Vector d0 = decoder_init(params, session_state);
  return score_query(params, d0, with_end_of_query(tokens), nullptr);
}

double session_log_likelihood(const ModelParams& params, const Session& session) {
  return session_forward(params, session, nullptr);
}

ForwardTrace forward_trace(const ModelParams& params, const Session& session) {
  ForwardTrace trace;
  session_forward(params, session, &trace);
  return trace;
}

std::vector<Vector> update_gate_trace(const ModelParams& params, const Session& session) {
  std::vector<Vector> gates;
  gates.reserve(session.queries.size());
  Vector s(params.hyper.session_dim);
  for (const auto& query : session.queries) {
    Vector q = encode_query(params.enc, query);
    GruActivations act = gru_step(params.ses, s, q);
    s = act.h;
    Vector magnitude(act.update.dim());
    for (std::size_t i = 0; i < magnitude.dim(); ++i) magnitude[i] = std::fabs(act.update[i]);
    gates.push_back(std::move(magnitude));
  }
  return gates;
}

EmbeddingExport export_embeddings(const ModelParams& params, const Vocabulary& vocab,
                                  const std::vector<TextSession>& sessions) {
  EmbeddingExport out;
  const auto embed_dim = params.out_embed.cols();
  for (int id = 0; id < vocab.size(); ++id) {
    Vector row(embed_dim);
    for (std::size_t j = 0; j < embed_dim; ++j) row[j] = params.out_embed(id, j);
    out.words.emplace_back(vocab.id_to_word(id), std::move(row));
  }
  for (const auto& session : sessions) {
    for (const auto& text : session.queries) {
      const std::vector<int> tokens = encode_query_text(vocab, text);
      if (tokens.empty()) continue;  // nothing left to encode
      out.queries.emplace_back(text, encode_query(params.enc, tokens));
    }
  }
  return out;
}

}  // namespace hred
