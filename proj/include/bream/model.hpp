#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bream/dataset.hpp"
#include "bream/rng.hpp"

namespace bream {

enum class CellType { Rnn, Gru };

CellType cell_type_from_string(const std::string& s);
std::string to_string(CellType c);

/// All learnable parameters: recurrent aggregator, per-step policy heads
/// and the linear predictor. Also reused as the gradient container, since
/// gradients are shaped exactly like the parameters.
///
/// The aggregator consumes a 2n input [x .* a ; a] and keeps a p-dim state.
/// Policy head t maps state -> n logits; the predictor maps state -> Y
/// scores. With shared_policy a single head serves every step.
struct ModelParams {
  CellType cell_type = CellType::Gru;
  int n = 0;          // feature count
  int n_classes = 0;  // Y
  int p = 0;          // representation dimension
  int steps = 0;      // T
  bool shared_policy = false;

  // rnn cell: z' = tanh(wz z + wu u + b)
  Mat rnn_wz, rnn_wu;
  Vec rnn_b;

  // gru cell: reset r, update q, candidate h
  Mat gru_wr, gru_ur, gru_wq, gru_uq, gru_wh, gru_uh;
  Vec gru_br, gru_bq, gru_bh;

  std::vector<Mat> policy_w;  // each n x p
  std::vector<Vec> policy_b;  // each n

  Mat pred_w;  // Y x p
  Vec pred_b;  // Y

  int policy_count() const { return shared_policy ? 1 : steps; }
  int policy_index(int t) const { return shared_policy ? 0 : t; }

  std::size_t param_count() const;
  bool all_finite() const;
  double squared_norm() const;

  ModelParams zeros_like() const;
  void set_zero();
  void axpy(double alpha, const ModelParams& other);  // this += alpha * other
  void scale(double s);

  /// Fixed flattening order: cell weights, policy heads, predictor.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);

  void validate() const;
};

using GradientEstimate = ModelParams;

/// Random initialization: weights i.i.d. uniform on [-scale, +scale] from
/// a seeded stream, biases zero. scale <= 0 selects the default
/// 1/sqrt(fan-in) per weight matrix.
ModelParams init_params(int n, int n_classes, int p, int steps,
                        CellType cell_type, std::uint64_t seed,
                        double scale = 0.0, bool shared_policy = false);

/// Concatenation [x .* a ; a]: observed values followed by the mask, so an
/// observed zero is distinguishable from an unobserved feature.
Vec masked_input(const Vec& x, const Vec& mask);

/// One aggregator step z -> z' on input u (dimension 2n).
Vec aggregate(const ModelParams& params, const Vec& z, const Vec& u);

/// Per-feature acquisition probabilities at step t (zero-based), clamped
/// into [eps, 1-eps].
Vec policy_probs(const ModelParams& params, int t, const Vec& z, double eps);

/// Linear class scores, no activation.
Vec predict_scores(const ModelParams& params, const Vec& z);

/// Argmax with ties broken by lowest class index; NaN scores are an error.
int predict_class(const Vec& scores);

/// Versioned text serialization; full-precision round trip.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace bream
