#pragma once

#include <utility>
#include <vector>

#include "bream/model.hpp"
#include "bream/rng.hpp"

namespace bream {

/// One sampled acquisition episode.
///
/// surrogate_cost counts every acquisition event (sum_t a_t'c); eval_cost
/// counts each acquired feature once (abar'c).
struct AcquisitionTrace {
  std::vector<Vec> masks;  // T vectors of n 0/1 entries
  std::vector<Vec> probs;  // T vectors, the policy outputs behind each mask
  std::vector<Vec> reps;   // T+1 representations, reps[0] = 0
  Vec abar;                // componentwise max of masks
  Vec scores;              // Y class scores from the final representation
  double surrogate_cost = 0.0;
  double eval_cost = 0.0;

  std::string debug_dump() const;
};

/// Independent Bernoulli draw per component; consumes exactly n uniforms
/// from rng in index order.
Vec sample_mask(const Vec& probs, Rng& rng);

/// Runs the full acquisition loop: for t = 1..T sample a mask from the
/// step-t policy, fold the masked observation into the representation,
/// then score the final representation. Throws DivergenceError if the
/// forward pass produces non-finite values.
AcquisitionTrace run_episode(const ModelParams& params, const Vec& x,
                             const CostVector& costs, double eps_clamp,
                             Rng& rng);

/// Episode followed by argmax prediction; returns (class id, eval cost).
std::pair<int, double> predict(const ModelParams& params, const Vec& x,
                               const CostVector& costs, double eps_clamp,
                               Rng& rng);

}  // namespace bream
