#pragma once

#include <string>
#include <vector>

#include "bream/training.hpp"

namespace bream {

struct ParetoPoint {
  double mean_cost = 0.0;  // mean eval cost per episode
  double accuracy = 0.0;
  int model_id = 0;
};

/// Runs `k_samples` seeded episodes per example and aggregates accuracy
/// and mean evaluation cost. Episode rng streams are keyed by example
/// content, so results do not depend on row order or thread count.
ParetoPoint evaluate(const ModelParams& params, const Dataset& d,
                     const CostVector& costs, double eps_clamp,
                     std::uint64_t seed, int k_samples = 1, int threads = 1);

/// Non-dominated subset: A dominates B iff A.accuracy >= B.accuracy and
/// A.mean_cost <= B.mean_cost with at least one strict. Coordinate ties
/// keep the lowest model_id. Output sorted by cost.
std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points);

/// Piecewise-linear accuracy at a cost level, clamped to the first/last
/// point's accuracy outside the curve's cost range. Curve must be sorted
/// by cost.
double interpolate_accuracy(const std::vector<ParetoPoint>& curve,
                            double cost_level);

struct SweepEntry {
  int model_id = 0;
  TrainConfig config;
  bool diverged = false;
  double valid_accuracy = 0.0;
  double valid_mean_cost = 0.0;
  std::string params_path;  // empty when not persisted
};

struct SweepResult {
  std::vector<ParetoPoint> valid_front;  // validation Pareto front
  std::vector<ParetoPoint> test_curve;   // front models re-run on test
  std::vector<SweepEntry> entries;       // one per grid config
};

/// Full model-selection protocol: train every config on the train split,
/// evaluate on validation, keep the Pareto front, re-evaluate the front on
/// test. Diverged configs are excluded with a warning; throws only if all
/// configs diverge. When artifact_dir is non-empty every trained model is
/// saved there as model_<id>.params.
SweepResult sweep(const Dataset& train_set, const Dataset& valid_set,
                  const Dataset& test_set, const CostVector& costs,
                  const std::vector<TrainConfig>& grid, int threads = 1,
                  const std::string& artifact_dir = "",
                  std::uint64_t eval_seed = 1);

void save_curve_csv(const std::vector<ParetoPoint>& curve, double total_cost,
                    const std::string& path);
std::vector<ParetoPoint> load_curve_csv(const std::string& path,
                                        bool normalized_axis);

/// Minimal SVG line plot of an accuracy/cost curve.
void write_curve_svg(const std::vector<ParetoPoint>& curve,
                     const std::string& path);

}  // namespace bream
