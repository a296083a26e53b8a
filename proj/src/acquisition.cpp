#include "bream/acquisition.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "bream/errors.hpp"

namespace bream {

std::string AcquisitionTrace::debug_dump() const {
  std::ostringstream out;
  char buf[64];
  for (std::size_t t = 0; t < masks.size(); ++t) {
    out << "step " << t + 1 << "\n  probs";
    for (int i = 0; i < probs[t].size(); ++i) {
      std::snprintf(buf, sizeof(buf), " %.6f", probs[t][i]);
      out << buf;
    }
    out << "\n  mask ";
    for (int i = 0; i < masks[t].size(); ++i)
      out << " " << static_cast<int>(masks[t][i]);
    out << "\n";
  }
  std::snprintf(buf, sizeof(buf), "surrogate_cost %.6f eval_cost %.6f\n",
                surrogate_cost, eval_cost);
  out << buf;
  return out.str();
}

Vec sample_mask(const Vec& probs, Rng& rng) {
  Vec mask(probs.size());
  for (int i = 0; i < probs.size(); ++i)
    mask[i] = rng.uniform() < probs[i] ? 1.0 : 0.0;
  return mask;
}

AcquisitionTrace run_episode(const ModelParams& params, const Vec& x,
                             const CostVector& costs, double eps_clamp,
                             Rng& rng) {
  if (x.size() != params.n || costs.size() != params.n)
    throw ConfigError("run_episode: dimension mismatch");

  AcquisitionTrace trace;
  trace.reps.push_back(Vec::Zero(params.p));
  trace.abar = Vec::Zero(params.n);
  for (int t = 0; t < params.steps; ++t) {
    Vec probs = policy_probs(params, t, trace.reps.back(), eps_clamp);
    Vec mask = sample_mask(probs, rng);
    Vec z = aggregate(params, trace.reps.back(), masked_input(x, mask));
    if (!z.allFinite())
      throw DivergenceError("non-finite representation at step " +
                            std::to_string(t + 1));
    trace.surrogate_cost += mask.dot(costs.c);
    trace.abar = trace.abar.cwiseMax(mask);
    trace.probs.push_back(std::move(probs));
    trace.masks.push_back(std::move(mask));
    trace.reps.push_back(std::move(z));
  }
  trace.eval_cost = trace.abar.dot(costs.c);
  trace.scores = predict_scores(params, trace.reps.back());
  if (!trace.scores.allFinite())
    throw DivergenceError("non-finite prediction scores");
  return trace;
}

std::pair<int, double> predict(const ModelParams& params, const Vec& x,
                               const CostVector& costs, double eps_clamp,
                               Rng& rng) {
  AcquisitionTrace trace = run_episode(params, x, costs, eps_clamp, rng);
  return {predict_class(trace.scores), trace.eval_cost};
}

}  // namespace bream
