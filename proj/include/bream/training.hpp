#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bream/acquisition.hpp"
#include "bream/model.hpp"

namespace bream {

struct TrainConfig {
  double lambda = 0.1;        // loss/cost tradeoff
  int steps = 3;              // acquisition steps T
  int rep_dim = 20;           // representation dimension p
  int rollouts = 1;           // M episodes per gradient estimate
  double learning_rate = 0.05;
  int epochs = 100;
  int batch_size = 16;
  CellType cell_type = CellType::Gru;
  double epsilon_clamp = 1e-6;
  std::uint64_t seed = 0;
  bool baseline_enabled = false;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  bool shared_policy = false;
  double init_scale = 0.0;      // <= 0 selects 1/sqrt(fan-in)

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Least-square loss against the one-hot target; optionally fills the
/// gradient w.r.t. the scores (2 * (scores - onehot)).
double loss_delta(const Vec& scores, int label, Vec* grad_out = nullptr);

/// Per-rollout sample of the differentiable objective upper bound:
/// Delta + lambda * surrogate_cost.
double surrogate_objective(const AcquisitionTrace& trace, int label,
                           double lambda, const CostVector& costs);

/// Per-rollout scalar behind the gradient estimator:
///
///   S = w * sum_t log Pr(a_t | probs_t)                 (score term)
///     + Delta(scores, y)                                (pathwise loss)
///     + lambda * sum_t sum_i probs_{t,i} * c_i          (pathwise cost)
///
/// with the sampled masks and the weight w held constant. Returns S and,
/// when grad_out is given, its exact gradient by backpropagation through
/// the recurrence.
double rollout_scalar(const ModelParams& params, const Vec& x, int label,
                      const CostVector& costs, const std::vector<Vec>& masks,
                      double detach_weight, double lambda, double eps_clamp,
                      GradientEstimate* grad_out);

struct EpisodeDiagnostics {
  std::vector<double> rollout_deltas;
  double mean_surrogate_objective = 0.0;
  double score_term_norm = 0.0;     // gradient norm of the score term alone
  double pathwise_term_norm = 0.0;  // gradient norm of the pathwise terms
};

/// Hybrid score-function/pathwise gradient estimate averaged over M
/// sampled rollouts. `baseline` is subtracted from Delta in the score
/// weight (0 when the baseline is disabled). Throws DivergenceError on a
/// non-finite gradient.
GradientEstimate episode_gradient(const ModelParams& params, const Vec& x,
                                  int label, const CostVector& costs,
                                  const TrainConfig& cfg, Rng& rng,
                                  double baseline = 0.0,
                                  EpisodeDiagnostics* diag = nullptr);

/// Gradient step with optional global-norm clipping.
void sgd_step(ModelParams& params, const GradientEstimate& grad,
              const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double train_objective = 0.0;
  double valid_accuracy = 0.0;
  double valid_mean_cost = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochStats> history;
  bool diverged = false;
  std::string divergence_message;
};

/// Minibatch SGD over seeded-shuffled epochs. Per-example gradients inside
/// a batch may be computed on `threads` workers; the reduction order is
/// fixed by example index so thread count never changes results. On
/// divergence returns the last finite parameters with diverged = true.
TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const CostVector& costs, const TrainConfig& cfg,
                  int threads = 1);

void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path);

}  // namespace bream
