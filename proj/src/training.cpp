#include "bream/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "bream/evaluation.hpp"
#include "bream/parallel.hpp"

namespace bream {

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("lambda must be >= 0");
  if (steps < 1) throw ConfigError("T must be >= 1");
  if (rep_dim < 1) throw ConfigError("p must be >= 1");
  if (rollouts < 1) throw ConfigError("M must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(epsilon_clamp > 0.0) || epsilon_clamp >= 0.5)
    throw ConfigError("epsilon_clamp must be in (0, 0.5)");
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
  if (j.contains("T")) c.steps = j.at("T").get<int>();
  if (j.contains("p")) c.rep_dim = j.at("p").get<int>();
  if (j.contains("M")) c.rollouts = j.at("M").get<int>();
  if (j.contains("learning_rate"))
    c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("cell_type"))
    c.cell_type = cell_type_from_string(j.at("cell_type").get<std::string>());
  if (j.contains("epsilon_clamp"))
    c.epsilon_clamp = j.at("epsilon_clamp").get<double>();
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("baseline_enabled"))
    c.baseline_enabled = j.at("baseline_enabled").get<bool>();
  if (j.contains("grad_clip_norm")) {
    if (j.at("grad_clip_norm").is_null())
      c.grad_clip_norm = 0.0;
    else
      c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  }
  if (j.contains("shared_policy"))
    c.shared_policy = j.at("shared_policy").get<bool>();
  if (j.contains("init_scale")) c.init_scale = j.at("init_scale").get<double>();
  c.validate();
  return c;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["lambda"] = lambda;
  j["T"] = steps;
  j["p"] = rep_dim;
  j["M"] = rollouts;
  j["learning_rate"] = learning_rate;
  j["epochs"] = epochs;
  j["batch_size"] = batch_size;
  j["cell_type"] = to_string(cell_type);
  j["epsilon_clamp"] = epsilon_clamp;
  j["seed"] = seed;
  j["baseline_enabled"] = baseline_enabled;
  if (grad_clip_norm > 0.0)
    j["grad_clip_norm"] = grad_clip_norm;
  else
    j["grad_clip_norm"] = nullptr;
  j["shared_policy"] = shared_policy;
  j["init_scale"] = init_scale;
  return j;
}

double loss_delta(const Vec& scores, int label, Vec* grad_out) {
  if (label < 0 || label >= scores.size())
    throw ConfigError("loss_delta: label out of range");
  Vec residual = scores;
  residual[label] -= 1.0;
  if (grad_out) *grad_out = 2.0 * residual;
  return residual.squaredNorm();
}

double surrogate_objective(const AcquisitionTrace& trace, int label,
                           double lambda, const CostVector& costs) {
  (void)costs;
  return loss_delta(trace.scores, label) + lambda * trace.surrogate_cost;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Forward intermediates for one step, kept for backpropagation.
struct StepCache {
  Vec u;           // masked input, 2n
  Vec sig;         // raw sigmoid of policy logits, before clamping
  Vec probs;       // clamped probabilities
  Vec gru_r, gru_q, gru_h;  // gru gates and candidate
};

}  // namespace

double rollout_scalar(const ModelParams& params, const Vec& x, int label,
                      const CostVector& costs, const std::vector<Vec>& masks,
                      double detach_weight, double lambda, double eps_clamp,
                      GradientEstimate* grad_out) {
  if (static_cast<int>(masks.size()) != params.steps)
    throw ConfigError("rollout_scalar: expected T masks");
  const int T = params.steps;
  const int p = params.p;

  std::vector<Vec> z(T + 1);
  std::vector<StepCache> cache(T);
  z[0] = Vec::Zero(p);

  double score_term = 0.0;
  double cost_term = 0.0;
  for (int t = 0; t < T; ++t) {
    int idx = params.policy_index(t);
    Vec logits = params.policy_w[idx] * z[t] + params.policy_b[idx];
    StepCache& c = cache[t];
    c.sig = logits.unaryExpr([](double v) { return sigmoid(v); });
    c.probs = c.sig.unaryExpr([eps_clamp](double v) {
      return std::min(1.0 - eps_clamp, std::max(eps_clamp, v));
    });
    for (int i = 0; i < params.n; ++i) {
      score_term += masks[t][i] > 0.5 ? std::log(c.probs[i])
                                      : std::log(1.0 - c.probs[i]);
      cost_term += c.probs[i] * costs.c[i];
    }
    c.u = masked_input(x, masks[t]);
    if (params.cell_type == CellType::Rnn) {
      z[t + 1] =
          (params.rnn_wz * z[t] + params.rnn_wu * c.u + params.rnn_b)
              .array()
              .tanh();
    } else {
      c.gru_r = (params.gru_wr * c.u + params.gru_ur * z[t] + params.gru_br)
                    .unaryExpr([](double v) { return sigmoid(v); });
      c.gru_q = (params.gru_wq * c.u + params.gru_uq * z[t] + params.gru_bq)
                    .unaryExpr([](double v) { return sigmoid(v); });
      c.gru_h = (params.gru_wh * c.u +
                 params.gru_uh * c.gru_r.cwiseProduct(z[t]) + params.gru_bh)
                    .array()
                    .tanh();
      z[t + 1] = (Vec::Ones(p) - c.gru_q).cwiseProduct(z[t]) +
                 c.gru_q.cwiseProduct(c.gru_h);
    }
  }

  Vec scores = params.pred_w * z[T] + params.pred_b;
  Vec dscores;
  double delta = loss_delta(scores, label, &dscores);
  double value = detach_weight * score_term + delta + lambda * cost_term;

  if (!grad_out) return value;

  GradientEstimate& g = *grad_out;
  g = params.zeros_like();

  // predictor
  g.pred_w = dscores * z[T].transpose();
  g.pred_b = dscores;
  Vec dz = params.pred_w.transpose() * dscores;

  for (int t = T - 1; t >= 0; --t) {
    const StepCache& c = cache[t];
    Vec dz_prev;
    if (params.cell_type == CellType::Rnn) {
      Vec dpre = dz.cwiseProduct(
          z[t + 1].unaryExpr([](double v) { return 1.0 - v * v; }));
      g.rnn_wz += dpre * z[t].transpose();
      g.rnn_wu += dpre * c.u.transpose();
      g.rnn_b += dpre;
      dz_prev = params.rnn_wz.transpose() * dpre;
    } else {
      Vec dq = dz.cwiseProduct(c.gru_h - z[t]);
      Vec dh = dz.cwiseProduct(c.gru_q);
      dz_prev = dz.cwiseProduct(Vec::Ones(p) - c.gru_q);

      Vec dah = dh.cwiseProduct(
          c.gru_h.unaryExpr([](double v) { return 1.0 - v * v; }));
      Vec rz = c.gru_r.cwiseProduct(z[t]);
      g.gru_wh += dah * c.u.transpose();
      g.gru_uh += dah * rz.transpose();
      g.gru_bh += dah;
      Vec drz = params.gru_uh.transpose() * dah;
      Vec dr = drz.cwiseProduct(z[t]);
      dz_prev += drz.cwiseProduct(c.gru_r);

      Vec daq = dq.cwiseProduct(c.gru_q.cwiseProduct(Vec::Ones(p) - c.gru_q));
      g.gru_wq += daq * c.u.transpose();
      g.gru_uq += daq * z[t].transpose();
      g.gru_bq += daq;
      dz_prev += params.gru_uq.transpose() * daq;

      Vec dar = dr.cwiseProduct(c.gru_r.cwiseProduct(Vec::Ones(p) - c.gru_r));
      g.gru_wr += dar * c.u.transpose();
      g.gru_ur += dar * z[t].transpose();
      g.gru_br += dar;
      dz_prev += params.gru_ur.transpose() * dar;
    }

    // policy head at step t: score term + pathwise cost term
    Vec dprobs(params.n);
    for (int i = 0; i < params.n; ++i) {
      double pr = c.probs[i];
      double dscore = masks[t][i] > 0.5 ? 1.0 / pr : -1.0 / (1.0 - pr);
      dprobs[i] = detach_weight * dscore + lambda * costs.c[i];
    }
    Vec dlogits(params.n);
    for (int i = 0; i < params.n; ++i) {
      // clamp is flat outside (eps, 1-eps)
      bool clamped = c.sig[i] <= eps_clamp || c.sig[i] >= 1.0 - eps_clamp;
      dlogits[i] = clamped ? 0.0 : dprobs[i] * c.sig[i] * (1.0 - c.sig[i]);
    }
    int idx = params.policy_index(t);
    g.policy_w[idx] += dlogits * z[t].transpose();
    g.policy_b[idx] += dlogits;
    dz_prev += params.policy_w[idx].transpose() * dlogits;

    dz = std::move(dz_prev);
  }
  return value;
}

GradientEstimate episode_gradient(const ModelParams& params, const Vec& x,
                                  int label, const CostVector& costs,
                                  const TrainConfig& cfg, Rng& rng,
                                  double baseline,
                                  EpisodeDiagnostics* diag) {
  GradientEstimate total = params.zeros_like();
  double obj_sum = 0.0;
  GradientEstimate rollout_grad = params.zeros_like();
  for (int m = 0; m < cfg.rollouts; ++m) {
    AcquisitionTrace trace =
        run_episode(params, x, costs, cfg.epsilon_clamp, rng);
    double delta = loss_delta(trace.scores, label);
    double w = delta - (cfg.baseline_enabled ? baseline : 0.0);
    rollout_scalar(params, x, label, costs, trace.masks, w, cfg.lambda,
                   cfg.epsilon_clamp, &rollout_grad);
    total.axpy(1.0 / cfg.rollouts, rollout_grad);
    obj_sum += surrogate_objective(trace, label, cfg.lambda, costs);
    if (diag) {
      diag->rollout_deltas.push_back(delta);
      if (m == 0) {
        GradientEstimate pathwise = params.zeros_like();
        rollout_scalar(params, x, label, costs, trace.masks, 0.0, cfg.lambda,
                       cfg.epsilon_clamp, &pathwise);
        diag->pathwise_term_norm = std::sqrt(pathwise.squared_norm());
        pathwise.axpy(-1.0, rollout_grad);
        diag->score_term_norm = std::sqrt(pathwise.squared_norm());
      }
    }
  }
  if (diag) diag->mean_surrogate_objective = obj_sum / cfg.rollouts;
  if (!total.all_finite())
    throw DivergenceError("non-finite gradient estimate");
  return total;
}

void sgd_step(ModelParams& params, const GradientEstimate& grad,
              const TrainConfig& cfg) {
  double norm = std::sqrt(grad.squared_norm());
  double scale = 1.0;
  if (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm)
    scale = cfg.grad_clip_norm / norm;
  params.axpy(-cfg.learning_rate * scale, grad);
}

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const CostVector& costs, const TrainConfig& cfg,
                  int threads) {
  cfg.validate();
  train_set.validate();
  if (valid_set.n_features() != train_set.n_features())
    throw ConfigError("train/valid feature count mismatch");
  if (costs.size() != train_set.n_features())
    throw ConfigError("cost vector does not match feature count");

  const int rows = train_set.rows();
  ModelParams params =
      init_params(train_set.n_features(), train_set.n_classes, cfg.rep_dim,
                  cfg.steps, cfg.cell_type, cfg.seed, cfg.init_scale,
                  cfg.shared_policy);

  TrainResult result;
  ModelParams checkpoint = params;  // last finite state
  double baseline = 0.0;
  bool baseline_ready = false;

  std::vector<int> order(rows);
  for (int i = 0; i < rows; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng =
        Rng::derive(cfg.seed, 0x7368756600000000ULL + epoch);  // "shuf"
    for (int i = rows - 1; i > 0; --i) {
      int j = static_cast<int>(
          shuffle_rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double objective_sum = 0.0;
    try {
      for (int start = 0; start < rows; start += cfg.batch_size) {
        int count = std::min(cfg.batch_size, rows - start);
        std::vector<GradientEstimate> grads(count);
        std::vector<EpisodeDiagnostics> diags(count);
        double batch_baseline = baseline;
        parallel_for(count, threads, [&](int k) {
          int row = order[start + k];
          Rng ex_rng = Rng::derive(
              cfg.seed, 0x2000000000000000ULL +
                            (static_cast<std::uint64_t>(epoch) << 32) +
                            static_cast<std::uint64_t>(start + k));
          Vec x = train_set.features.row(row).transpose();
          grads[k] = episode_gradient(params, x, train_set.labels[row], costs,
                                      cfg, ex_rng, batch_baseline, &diags[k]);
        });
        GradientEstimate batch = params.zeros_like();
        for (int k = 0; k < count; ++k) {  // fixed reduction order
          batch.axpy(1.0 / count, grads[k]);
          objective_sum += diags[k].mean_surrogate_objective;
          for (double d : diags[k].rollout_deltas) {
            // running mean of Delta over recent rollouts
            baseline = baseline_ready ? 0.9 * baseline + 0.1 * d : d;
            baseline_ready = true;
          }
        }
        sgd_step(params, batch, cfg);
        if (!params.all_finite())
          throw DivergenceError("parameters diverged during epoch " +
                                std::to_string(epoch + 1));
      }
    } catch (const DivergenceError& e) {
      result.params = checkpoint;
      result.diverged = true;
      result.divergence_message = e.what();
      return result;
    }
    checkpoint = params;

    ParetoPoint valid =
        evaluate(params, valid_set, costs, cfg.epsilon_clamp,
                 Rng::mix(cfg.seed ^ 0x76616c6964ULL),  // "valid"
                 1, threads);
    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_objective = objective_sum / rows;
    stats.valid_accuracy = valid.accuracy;
    stats.valid_mean_cost = valid.mean_cost;
    result.history.push_back(stats);
  }

  result.params = params;
  return result;
}

void save_history_csv(const std::vector<EpochStats>& history,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write history file: " + path);
  out << "epoch,train_objective,valid_accuracy,valid_mean_cost\n";
  char buf[160];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", h.epoch,
                  h.train_objective, h.valid_accuracy, h.valid_mean_cost);
    out << buf;
  }
}

}  // namespace bream
