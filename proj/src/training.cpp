#include "hred/training.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "hred/binio.hpp"

namespace hred {

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace {

template <class Params, class Fn>
void visit_params(Params& p, Fn&& fn) {
  auto mat = [&fn](const std::string& name, auto& m) {
    fn(ParamView{name, m.rows(), m.cols(), const_cast<double*>(m.data()), m.size()});
  };
  auto vec = [&fn](const std::string& name, auto& v) {
    fn(ParamView{name, v.dim(), 1, const_cast<double*>(v.data()), v.dim()});
  };
  auto gru = [&mat](const std::string& prefix, auto& g) {
    mat(prefix + ".in_reset", g.in_reset);
    mat(prefix + ".in_update", g.in_update);
    mat(prefix + ".in_cand", g.in_cand);
    mat(prefix + ".rec_reset", g.rec_reset);
    mat(prefix + ".rec_update", g.rec_update);
    mat(prefix + ".rec_cand", g.rec_cand);
  };
  gru("enc", p.enc);
  gru("ses", p.ses);
  gru("dec", p.dec);
  mat("dec_init_w", p.dec_init_w);
  vec("dec_init_b", p.dec_init_b);
  mat("out_state", p.out_state);
  mat("out_prev", p.out_prev);
  vec("out_bias", p.out_bias);
  mat("out_embed", p.out_embed);
}

// One GRU step backward. `upstream` is dL/dh for the step's output state;
// parameter gradients accumulate into `grads`, the state gradient into
// `grad_h_prev`, and (for dense inputs) the input gradient into `grad_x`.
void gru_backward(const GruParams& p, GruParams& grads, const GruActivations& act,
                  const Vector& h_prev, const Vector* dense_x, int token,
                  const Vector& upstream, Vector& grad_h_prev, Vector* grad_x) {
  const std::size_t n = p.hidden_dim;
  Vector d_pre_update(n), d_pre_cand(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_update = upstream[i] * (act.cand[i] - h_prev[i]);
    const double d_cand = upstream[i] * act.update[i];
    d_pre_update[i] = d_update * act.update[i] * (1.0 - act.update[i]);
    d_pre_cand[i] = d_cand * (1.0 - act.cand[i] * act.cand[i]);
    grad_h_prev[i] += upstream[i] * (1.0 - act.update[i]);
  }

  // candidate pre-activation saw (reset * h_prev) through the recurrent matrix
  Vector gated(n);
  for (std::size_t i = 0; i < n; ++i) gated[i] = act.reset[i] * h_prev[i];
  accumulate_outer(grads.rec_cand, d_pre_cand, gated);
  Vector through_cand(n);
  accumulate_matvec_transposed(p.rec_cand, d_pre_cand, through_cand);

  Vector d_pre_reset(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d_reset = through_cand[i] * h_prev[i];
    d_pre_reset[i] = d_reset * act.reset[i] * (1.0 - act.reset[i]);
    grad_h_prev[i] += through_cand[i] * act.reset[i];
  }

  accumulate_outer(grads.rec_reset, d_pre_reset, h_prev);
  accumulate_matvec_transposed(p.rec_reset, d_pre_reset, grad_h_prev);
  accumulate_outer(grads.rec_update, d_pre_update, h_prev);
  accumulate_matvec_transposed(p.rec_update, d_pre_update, grad_h_prev);

  if (dense_x != nullptr) {
    accumulate_outer(grads.in_cand, d_pre_cand, *dense_x);
    accumulate_outer(grads.in_reset, d_pre_reset, *dense_x);
    accumulate_outer(grads.in_update, d_pre_update, *dense_x);
  } else {
    const auto col = static_cast<std::size_t>(token);
    accumulate_into_column(grads.in_cand, col, d_pre_cand);
    accumulate_into_column(grads.in_reset, col, d_pre_reset);
    accumulate_into_column(grads.in_update, col, d_pre_update);
  }
  if (grad_x != nullptr) {
    accumulate_matvec_transposed(p.in_cand, d_pre_cand, *grad_x);
    accumulate_matvec_transposed(p.in_reset, d_pre_reset, *grad_x);
    accumulate_matvec_transposed(p.in_update, d_pre_update, *grad_x);
  }
}

// Adds the gradients of one session's log-likelihood into `g`.
void session_backward(const ModelParams& p, const ForwardTrace& trace, Gradients& g) {
  const std::size_t num_queries = trace.queries.size();
  const Vector zero_session(p.hyper.session_dim);
  const Vector zero_query(p.hyper.query_dim);
  Vector d_session(p.hyper.session_dim);  // dL/ds_m; zero at m = M (s_M is unused)

  for (std::size_t m = num_queries; m >= 1; --m) {
    const QueryTrace& qt = trace.queries[m - 1];
    const std::size_t steps = qt.tokens.size();
    const Vector& s_prev = (m >= 2) ? trace.session_steps[m - 2].h : zero_session;

    // dL/dz at output step n flows into the output layer and the decoder state
    auto output_backward = [&](std::size_t n, Vector& grad_state) {
      const int tok = qt.tokens[n - 1];
      const int prev = (n >= 2) ? qt.tokens[n - 2] : kNoPrevWord;
      const Vector& probs = qt.probs[n - 1];
      const Vector& omega = qt.omegas[n - 1];
      const Vector& d_state = (n >= 2) ? qt.dec_steps[n - 2].h : qt.dec_init_state;
      Vector d_logits(probs.dim());
      for (std::size_t i = 0; i < probs.dim(); ++i) d_logits[i] = -probs[i];
      d_logits[static_cast<std::size_t>(tok)] += 1.0;
      accumulate_outer(g.out_embed, d_logits, omega);
      Vector d_omega(omega.dim());
      accumulate_matvec_transposed(p.out_embed, d_logits, d_omega);
      accumulate_outer(g.out_state, d_omega, d_state);
      for (std::size_t i = 0; i < d_omega.dim(); ++i) g.out_bias[i] += d_omega[i];
      if (prev != kNoPrevWord) {
        accumulate_into_column(g.out_prev, static_cast<std::size_t>(prev), d_omega);
      }
      accumulate_matvec_transposed(p.out_state, d_omega, grad_state);
    };

    Vector grad_dec(p.hyper.query_dim);
    output_backward(steps, grad_dec);
    for (std::size_t j = steps - 1; j >= 1; --j) {
      const Vector& d_prev = (j >= 2) ? qt.dec_steps[j - 2].h : qt.dec_init_state;
      Vector grad_prev(p.hyper.query_dim);
      gru_backward(p.dec, g.dec, qt.dec_steps[j - 1], d_prev, nullptr, qt.tokens[j - 1],
                   grad_dec, grad_prev, nullptr);
      output_backward(j, grad_prev);
      grad_dec = std::move(grad_prev);
    }

    // decoder initialization d_0 = tanh(W s_prev + b)
    Vector d_pre_init(p.hyper.query_dim);
    for (std::size_t i = 0; i < d_pre_init.dim(); ++i) {
      const double t = qt.dec_init_state[i];
      d_pre_init[i] = grad_dec[i] * (1.0 - t * t);
    }
    accumulate_outer(g.dec_init_w, d_pre_init, s_prev);
    for (std::size_t i = 0; i < d_pre_init.dim(); ++i) g.dec_init_b[i] += d_pre_init[i];
    Vector d_session_prev(p.hyper.session_dim);
    accumulate_matvec_transposed(p.dec_init_w, d_pre_init, d_session_prev);

    // session recurrence s_m = GRU(s_prev, q_m)
    const Vector& query_vec = qt.enc_steps.back().h;
    Vector d_query(p.hyper.query_dim);
    gru_backward(p.ses, g.ses, trace.session_steps[m - 1], s_prev, &query_vec, -1, d_session,
                 d_session_prev, &d_query);

    // encoder over the query's tokens
    Vector grad_h = std::move(d_query);
    for (std::size_t t = steps; t >= 1; --t) {
      const Vector& h_prev = (t >= 2) ? qt.enc_steps[t - 2].h : zero_query;
      Vector grad_prev(p.hyper.query_dim);
      gru_backward(p.enc, g.enc, qt.enc_steps[t - 1], h_prev, nullptr, qt.tokens[t - 1],
                   grad_h, grad_prev, nullptr);
      grad_h = std::move(grad_prev);
    }

    d_session = std::move(d_session_prev);
  }
}

}  // namespace

void for_each_param(ModelParams& params, const std::function<void(const ParamView&)>& visit) {
  visit_params(params, visit);
}

void for_each_param(const ModelParams& params,
                    const std::function<void(const ParamView&)>& visit) {
  visit_params(params, visit);
}

BatchGradients backward_bptt(const ModelParams& params, const std::vector<Session>& batch) {
  if (batch.empty()) throw std::invalid_argument("backward_bptt: batch is empty");
  BatchGradients out{zero_model(params.hyper), 0.0};
  double total = 0.0;
  for (const Session& session : batch) {
    if (session.queries.empty()) {
      throw std::invalid_argument("backward_bptt: session without queries");
    }
    const ForwardTrace trace = forward_trace(params, session);
    total += trace.log_likelihood;
    session_backward(params, trace, out.grads);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for_each_param(out.grads, [inv](const ParamView& v) {
    for (std::size_t i = 0; i < v.count; ++i) v.data[i] *= inv;
  });
  for_each_param(static_cast<const Gradients&>(out.grads), [](const ParamView& v) {
    for (std::size_t i = 0; i < v.count; ++i) {
      if (!std::isfinite(v.data[i])) throw NonFiniteGradientError(v.name);
    }
  });
  out.mean_log_likelihood = total * inv;
  return out;
}

Gradients finite_diff_oracle(const ModelParams& params, const Session& session, double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_oracle: step must be positive");
  ModelParams probe = params;
  Gradients grads = zero_model(params.hyper);
  std::vector<ParamView> probe_views, grad_views;
  for_each_param(probe, [&probe_views](const ParamView& v) { probe_views.push_back(v); });
  for_each_param(grads, [&grad_views](const ParamView& v) { grad_views.push_back(v); });
  for (std::size_t k = 0; k < probe_views.size(); ++k) {
    for (std::size_t i = 0; i < probe_views[k].count; ++i) {
      double& theta = probe_views[k].data[i];
      const double saved = theta;
      theta = saved + step;
      const double up = session_log_likelihood(probe, session);
      theta = saved - step;
      const double down = session_log_likelihood(probe, session);
      theta = saved;
      grad_views[k].data[i] = (up - down) / (2.0 * step);
    }
  }
  return grads;
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double clip_gradient_norm(Gradients& grads, double max_norm) {
  if (max_norm <= 0.0) throw std::invalid_argument("clip_gradient_norm: threshold must be > 0");
  double sum_squares = 0.0;
  for_each_param(static_cast<const Gradients&>(grads), [&sum_squares](const ParamView& v) {
    for (std::size_t i = 0; i < v.count; ++i) sum_squares += v.data[i] * v.data[i];
  });
  const double norm = std::sqrt(sum_squares);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for_each_param(grads, [scale](const ParamView& v) {
      for (std::size_t i = 0; i < v.count; ++i) v.data[i] *= scale;
    });
  }
  return norm;
}

OptimizerState init_optimizer(const Hyper& hyper) { return {zero_model(hyper), 0}; }

void rmsprop_step(ModelParams& params, const Gradients& descent_grads, OptimizerState& state,
                  const TrainConfig& config) {
  std::vector<ParamView> thetas, grads, accs;
  for_each_param(params, [&thetas](const ParamView& v) { thetas.push_back(v); });
  for_each_param(descent_grads, [&grads](const ParamView& v) { grads.push_back(v); });
  for_each_param(state.acc, [&accs](const ParamView& v) { accs.push_back(v); });
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    if (grads[k].count != thetas[k].count || accs[k].count != thetas[k].count) {
      throw std::invalid_argument("rmsprop_step: shape mismatch in " + thetas[k].name);
    }
    for (std::size_t i = 0; i < thetas[k].count; ++i) {
      const double g = grads[k].data[i];
      const double acc =
          config.rmsprop_decay * accs[k].data[i] + (1.0 - config.rmsprop_decay) * g * g;
      accs[k].data[i] = acc;
      thetas[k].data[i] -= config.learning_rate * g / (std::sqrt(acc) + config.epsilon);
    }
  }
  ++state.step;
}

bool EarlyStopping::observe(double score) {
  ++epoch_;
  if (score > best_score_) {
    best_score_ = score;
    best_epoch_ = epoch_;
    epochs_since_best_ = 0;
    return true;
  }
  ++epochs_since_best_;
  return false;
}

double mean_session_log_likelihood(const ModelParams& params,
                                   const std::vector<Session>& sessions) {
  if (sessions.empty()) {
    throw std::invalid_argument("mean_session_log_likelihood: no sessions");
  }
  double total = 0.0;
  for (const Session& session : sessions) total += session_log_likelihood(params, session);
  return total / static_cast<double>(sessions.size());
}

Checkpoint fit(const std::vector<Session>& training, const std::vector<Session>& validation,
               const Hyper& hyper, const TrainConfig& config, std::uint64_t vocab_digest,
               std::ostream* log) {
  if (training.empty() || validation.empty()) {
    throw std::invalid_argument("fit: training and validation splits must be non-empty");
  }
  if (config.batch_size < 1 || config.patience < 1 || config.max_epochs < 1) {
    throw std::invalid_argument("fit: batch_size, patience and max_epochs must be >= 1");
  }
  if (config.learning_rate <= 0.0 || config.clip_threshold <= 0.0 ||
      !(config.rmsprop_decay > 0.0 && config.rmsprop_decay < 1.0)) {
    throw std::invalid_argument("fit: bad optimizer configuration");
  }

  Prng master(config.seed);
  ModelParams params = init_model(hyper, master);
  OptimizerState optimizer = init_optimizer(hyper);
  EarlyStopping stopper(config.patience);

  Checkpoint best;
  best.hyper = hyper;
  best.vocab_digest = vocab_digest;
  best.config = config;
  best.params = params;  // fallback when training diverges immediately
  best.optimizer = optimizer;

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Prng perm = master.fork(epoch);
    shuffle(order, perm);
    bool diverged = false;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<Session> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(training[order[i]]);
      try {
        BatchGradients bg = backward_bptt(params, batch);
        if (!std::isfinite(bg.mean_log_likelihood)) throw NonFiniteGradientError("objective");
        for_each_param(bg.grads, [](const ParamView& v) {
          for (std::size_t i = 0; i < v.count; ++i) v.data[i] = -v.data[i];
        });
        clip_gradient_norm(bg.grads, config.clip_threshold);
        rmsprop_step(params, bg.grads, optimizer, config);
      } catch (const NonFiniteGradientError& e) {
        if (log != nullptr) {
          *log << "training diverged at epoch " << epoch << " (" << e.what()
               << "); keeping the best checkpoint so far\n";
        }
        diverged = true;
        break;
      }
    }
    if (diverged) {
      best.diverged = true;
      break;
    }
    const double validation_ll = mean_session_log_likelihood(params, validation);
    if (!std::isfinite(validation_ll)) {
      if (log != nullptr) {
        *log << "validation likelihood became non-finite at epoch " << epoch
             << "; keeping the best checkpoint so far\n";
      }
      best.diverged = true;
      break;
    }
    best.history.push_back(validation_ll);
    if (stopper.observe(validation_ll)) {
      best.params = params;
      best.optimizer = optimizer;
    }
    if (log != nullptr) {
      *log << "epoch " << epoch << " validation mean log-likelihood " << std::fixed
           << std::setprecision(6) << validation_ll << "\n";
    }
    if (stopper.should_stop()) break;
  }
  return best;
}

namespace {

using binio::to_hex;

constexpr char kMagic[9] = "HREDCKPT";
constexpr std::uint32_t kVersion = 1;

// Serializes one tensor payload (count header plus scalars at the configured
// width); returns the FNV digest of the payload for the manifest.
std::uint64_t write_tensor(binio::HashingWriter& w, const ParamView& view, int scalar_bytes) {
  std::vector<unsigned char> buf;
  buf.reserve(8 + view.count * static_cast<std::size_t>(scalar_bytes));
  const std::uint64_t count = view.count;
  const auto* count_bytes = reinterpret_cast<const unsigned char*>(&count);
  buf.insert(buf.end(), count_bytes, count_bytes + 8);
  for (std::size_t i = 0; i < view.count; ++i) {
    if (scalar_bytes == 8) {
      const double v = view.data[i];
      const auto* p = reinterpret_cast<const unsigned char*>(&v);
      buf.insert(buf.end(), p, p + 8);
    } else {
      const float v = static_cast<float>(view.data[i]);
      const auto* p = reinterpret_cast<const unsigned char*>(&v);
      buf.insert(buf.end(), p, p + 4);
    }
  }
  w.bytes(buf.data(), buf.size());
  return fnv1a64(buf.data(), buf.size());
}

void read_tensor(binio::HashingReader& r, const ParamView& view, int scalar_bytes) {
  const std::uint64_t count = r.u64();
  if (count != view.count) {
    throw std::runtime_error("checkpoint: tensor " + view.name + " has " +
                             std::to_string(count) + " entries, expected " +
                             std::to_string(view.count));
  }
  for (std::size_t i = 0; i < view.count; ++i) {
    if (scalar_bytes == 8) {
      view.data[i] = r.f64();
    } else {
      float v;
      r.bytes(&v, 4);
      view.data[i] = static_cast<double>(v);
    }
  }
}

}  // namespace

void checkpoint_save(const Checkpoint& ckpt, const std::string& path, int scalar_bytes) {
  if (scalar_bytes != 4 && scalar_bytes != 8) {
    throw std::invalid_argument("checkpoint_save: scalar width must be 4 or 8 bytes");
  }
  check_shapes(ckpt.params);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("checkpoint_save: cannot open " + path);
  binio::HashingWriter w(file);
  w.bytes(kMagic, 8);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(scalar_bytes));
  w.u8(ckpt.diverged ? 1 : 0);
  w.u8(ckpt.optimizer.has_value() ? 1 : 0);
  w.u64(ckpt.hyper.query_dim);
  w.u64(ckpt.hyper.session_dim);
  w.u64(ckpt.hyper.embed_dim);
  w.u64(static_cast<std::uint64_t>(ckpt.hyper.vocab_size));
  w.u64(ckpt.vocab_digest);
  w.f64(ckpt.config.learning_rate);
  w.f64(ckpt.config.rmsprop_decay);
  w.f64(ckpt.config.epsilon);
  w.f64(ckpt.config.clip_threshold);
  w.u64(ckpt.config.batch_size);
  w.u64(ckpt.config.patience);
  w.u64(ckpt.config.max_epochs);
  w.u64(ckpt.config.seed);
  w.u64(ckpt.history.size());
  for (double v : ckpt.history) w.f64(v);

  std::vector<std::pair<ParamView, std::uint64_t>> manifest_rows;
  for_each_param(ckpt.params, [&](const ParamView& v) {
    manifest_rows.emplace_back(v, write_tensor(w, v, scalar_bytes));
  });
  if (ckpt.optimizer.has_value()) {
    w.u64(ckpt.optimizer->step);
    for_each_param(ckpt.optimizer->acc,
                   [&](const ParamView& v) { write_tensor(w, v, scalar_bytes); });
  }
  const std::uint64_t checksum = w.hash();
  w.finish();
  if (!file) throw std::runtime_error("checkpoint_save: write failed for " + path);
  file.close();

  std::ofstream manifest(path + ".manifest", std::ios::trunc);
  if (!manifest) throw std::runtime_error("checkpoint_save: cannot open " + path + ".manifest");
  manifest << "hred checkpoint manifest\n";
  manifest << "version " << kVersion << "\n";
  manifest << "scalar_bytes " << scalar_bytes << "\n";
  manifest << "diverged " << (ckpt.diverged ? 1 : 0) << "\n";
  manifest << "query_dim " << ckpt.hyper.query_dim << "\n";
  manifest << "session_dim " << ckpt.hyper.session_dim << "\n";
  manifest << "embed_dim " << ckpt.hyper.embed_dim << "\n";
  manifest << "vocab_size " << ckpt.hyper.vocab_size << "\n";
  manifest << "vocab_digest " << to_hex(ckpt.vocab_digest) << "\n";
  manifest << std::fixed << std::setprecision(6);
  manifest << "learning_rate " << ckpt.config.learning_rate << "\n";
  manifest << "rmsprop_decay " << ckpt.config.rmsprop_decay << "\n";
  manifest << "epsilon " << std::setprecision(9) << ckpt.config.epsilon
           << std::setprecision(6) << "\n";
  manifest << "clip_threshold " << ckpt.config.clip_threshold << "\n";
  manifest << "batch_size " << ckpt.config.batch_size << "\n";
  manifest << "patience " << ckpt.config.patience << "\n";
  manifest << "max_epochs " << ckpt.config.max_epochs << "\n";
  manifest << "seed " << ckpt.config.seed << "\n";
  manifest << "epochs " << ckpt.history.size() << "\n";
  manifest << "optimizer_state " << (ckpt.optimizer.has_value() ? 1 : 0) << "\n";
  for (const auto& [view, digest] : manifest_rows) {
    manifest << "tensor " << view.name << " " << view.rows << "x" << view.cols << " fnv "
             << to_hex(digest) << "\n";
  }
  manifest << "checksum " << to_hex(checksum) << "\n";
  if (!manifest) throw std::runtime_error("checkpoint_save: manifest write failed");
}

Checkpoint checkpoint_load(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("checkpoint_load: cannot open " + path);
  binio::HashingReader r(file, "checkpoint " + path);
  binio::expect_magic(r, kMagic);
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw std::runtime_error("checkpoint_load: unsupported version " + std::to_string(version) +
                             " (expected " + std::to_string(kVersion) + ")");
  }
  const int scalar_bytes = r.u8();
  if (scalar_bytes != 4 && scalar_bytes != 8) {
    throw std::runtime_error("checkpoint_load: corrupt scalar width");
  }
  Checkpoint ckpt;
  ckpt.version = version;
  ckpt.diverged = r.u8() != 0;
  const bool has_optimizer = r.u8() != 0;
  ckpt.hyper.query_dim = r.u64();
  ckpt.hyper.session_dim = r.u64();
  ckpt.hyper.embed_dim = r.u64();
  ckpt.hyper.vocab_size = static_cast<int>(r.u64());
  ckpt.vocab_digest = r.u64();
  ckpt.config.learning_rate = r.f64();
  ckpt.config.rmsprop_decay = r.f64();
  ckpt.config.epsilon = r.f64();
  ckpt.config.clip_threshold = r.f64();
  ckpt.config.batch_size = r.u64();
  ckpt.config.patience = r.u64();
  ckpt.config.max_epochs = r.u64();
  ckpt.config.seed = r.u64();
  const std::uint64_t epochs = r.u64();
  ckpt.history.resize(epochs);
  for (std::uint64_t i = 0; i < epochs; ++i) ckpt.history[i] = r.f64();

  ckpt.params = zero_model(ckpt.hyper);
  for_each_param(ckpt.params, [&](const ParamView& v) { read_tensor(r, v, scalar_bytes); });
  if (has_optimizer) {
    OptimizerState opt = init_optimizer(ckpt.hyper);
    opt.step = r.u64();
    for_each_param(opt.acc, [&](const ParamView& v) { read_tensor(r, v, scalar_bytes); });
    ckpt.optimizer = std::move(opt);
  }
  r.finish();
  check_shapes(ckpt.params);
  return ckpt;
}

void verify_vocab_digest(const Checkpoint& ckpt, const std::string& vocab_path) {
  const std::uint64_t actual = fnv1a64_file(vocab_path);
  if (actual != ckpt.vocab_digest) {
    throw std::runtime_error("vocabulary digest mismatch: checkpoint has " +
                             to_hex(ckpt.vocab_digest) + " but " + vocab_path + " hashes to " +
                             to_hex(actual));
  }
}

}  // namespace hred
