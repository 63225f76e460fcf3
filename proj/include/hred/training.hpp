#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hred/model.hpp"

// Exact backpropagation through time, gradient clipping, RMSProp, early
// stopping, and checkpoint persistence.

namespace hred {

// Gradient buffers share the parameter layout; every tensor holds the partial
// derivative of the objective with respect to the matching parameter entry.
using Gradients = ModelParams;

struct ParamView {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;  // 1 for vectors
  double* data = nullptr;
  std::size_t count = 0;
};

// Visits every tensor in canonical order (also the serialization order):
// enc/ses/dec gates, decoder-init projection and bias, output layer.
void for_each_param(ModelParams& params, const std::function<void(const ParamView&)>& visit);
void for_each_param(const ModelParams& params,
                    const std::function<void(const ParamView&)>& visit);

class NonFiniteGradientError : public std::runtime_error {
 public:
  explicit NonFiniteGradientError(const std::string& param_name)
      : std::runtime_error("non-finite gradient in parameter " + param_name),
        param_name_(param_name) {}
  const std::string& param_name() const { return param_name_; }

 private:
  std::string param_name_;
};

struct BatchGradients {
  Gradients grads;  // d(mean per-session log-likelihood)/d(theta), ascent direction
  double mean_log_likelihood = 0.0;
};

// Exact gradients of the mean per-session log-likelihood over the batch.
// Sessions are accumulated by plain summation in batch order, then divided by
// the batch size, so results are bit-reproducible.
BatchGradients backward_bptt(const ModelParams& params, const std::vector<Session>& batch);

// Central finite differences of session_log_likelihood, one probe pair per
// scalar parameter. Validation oracle; O(#params) forward passes.
Gradients finite_diff_oracle(const ModelParams& params, const Session& session,
                             double step = 1e-4);

// Generic central difference (f(x+h) - f(x-h)) / (2h).
double central_difference(const std::function<double(double)>& f, double x, double h);

// Scales all entries by c/norm when the global l2 norm exceeds c.
// Returns the pre-clip norm.
double clip_gradient_norm(Gradients& grads, double max_norm);

struct TrainConfig {
  double learning_rate = 2e-3;
  double rmsprop_decay = 0.95;
  double epsilon = 1e-6;
  double clip_threshold = 1.0;
  std::size_t batch_size = 16;
  std::size_t patience = 5;
  std::size_t max_epochs = 50;
  std::uint64_t seed = 1234;
};

struct OptimizerState {
  Gradients acc;  // squared-gradient accumulators, same shapes as the params
  std::uint64_t step = 0;
};

OptimizerState init_optimizer(const Hyper& hyper);

// One RMSProp update with descent gradients (gradients of the loss):
//   acc <- decay * acc + (1 - decay) * g^2
//   theta <- theta - lr * g / (sqrt(acc) + epsilon)
void rmsprop_step(ModelParams& params, const Gradients& descent_grads, OptimizerState& state,
                  const TrainConfig& config);

// Patience rule over per-epoch validation scores (higher is better). Only a
// strictly greater score counts as an improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Record one epoch's score; returns true when it improves on the best.
  bool observe(double score);
  bool should_stop() const { return epochs_since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based
  double best_score() const { return best_score_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  std::size_t epochs_since_best_ = 0;
  double best_score_ = -std::numeric_limits<double>::infinity();
};

struct Checkpoint {
  std::uint32_t version = 1;
  Hyper hyper;
  std::uint64_t vocab_digest = 0;
  TrainConfig config;
  ModelParams params;
  std::optional<OptimizerState> optimizer;
  std::vector<double> history;  // validation mean log-likelihood per epoch
  bool diverged = false;
};

// Mean per-session log-likelihood over a split, summed in element order.
double mean_session_log_likelihood(const ModelParams& params,
                                   const std::vector<Session>& sessions);

// Full training loop: seeded init, shuffled mini-batches, clip + RMSProp,
// per-epoch validation, patience-based early stopping. Returns the
// best-validation parameters. Divergence stops training and returns the best
// checkpoint seen, flagged. Progress lines go to `log` when non-null.
Checkpoint fit(const std::vector<Session>& training, const std::vector<Session>& validation,
               const Hyper& hyper, const TrainConfig& config, std::uint64_t vocab_digest = 0,
               std::ostream* log = nullptr);

// Single-file versioned binary; a plain-text manifest is written next to it
// (path + ".manifest"). scalar_bytes is 8 (exact) or 4 (compact; parameters
// are rounded once, after which reload is a fixed point).
void checkpoint_save(const Checkpoint& ckpt, const std::string& path, int scalar_bytes = 8);
Checkpoint checkpoint_load(const std::string& path);

// Compares the checkpoint digest against the digest of the vocabulary file;
// throws std::runtime_error naming both digests on mismatch.
void verify_vocab_digest(const Checkpoint& ckpt, const std::string& vocab_path);

}  // namespace hred
