#include "bream/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bream/parallel.hpp"

namespace bream {

ParetoPoint evaluate(const ModelParams& params, const Dataset& d,
                     const CostVector& costs, double eps_clamp,
                     std::uint64_t seed, int k_samples, int threads) {
  if (d.n_features() != params.n)
    throw ConfigError("evaluate: dataset has " +
                      std::to_string(d.n_features()) +
                      " features, model expects " + std::to_string(params.n));
  if (k_samples < 1) throw ConfigError("evaluate: K must be >= 1");

  const int rows = d.rows();
  std::vector<int> correct(rows, 0);
  std::vector<double> cost_sum(rows, 0.0);

  parallel_for(rows, threads, [&](int i) {
    Vec x = d.features.row(i).transpose();
    // stream keyed by example content, so results are independent of row
    // order and thread count
    std::uint64_t h = fnv1a(x.data(), sizeof(double) * x.size());
    h = fnv1a(&d.labels[i], sizeof(int), h);
    for (int rep = 0; rep < k_samples; ++rep) {
      Rng rng = Rng::derive(seed, Rng::mix(h + rep));
      auto [cls, cost] = predict(params, x, costs, eps_clamp, rng);
      if (cls == d.labels[i]) ++correct[i];
      cost_sum[i] += cost;
    }
  });

  double n_correct = 0.0, total_cost = 0.0;
  for (int i = 0; i < rows; ++i) {
    n_correct += correct[i];
    total_cost += cost_sum[i];
  }
  ParetoPoint pt;
  double episodes = static_cast<double>(rows) * k_samples;
  pt.accuracy = n_correct / episodes;
  pt.mean_cost = total_cost / episodes;
  return pt;
}

namespace {

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.accuracy >= b.accuracy && a.mean_cost <= b.mean_cost &&
         (a.accuracy > b.accuracy || a.mean_cost < b.mean_cost);
}

}  // namespace

std::vector<ParetoPoint> pareto_front(std::vector<ParetoPoint> points) {
  if (points.empty()) throw ConfigError("pareto_front: empty input");
  std::vector<ParetoPoint> front;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      if (dominates(q, p)) {
        dominated = true;
        break;
      }
      // identical coordinates keep the lowest model_id
      if (q.accuracy == p.accuracy && q.mean_cost == p.mean_cost &&
          q.model_id < p.model_id) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(p);
  }
  std::sort(front.begin(), front.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              if (a.mean_cost != b.mean_cost) return a.mean_cost < b.mean_cost;
              if (a.accuracy != b.accuracy) return a.accuracy < b.accuracy;
              return a.model_id < b.model_id;
            });
  return front;
}

double interpolate_accuracy(const std::vector<ParetoPoint>& curve,
                            double cost_level) {
  if (curve.empty()) throw ConfigError("interpolate_accuracy: empty curve");
  if (cost_level <= curve.front().mean_cost) return curve.front().accuracy;
  if (cost_level >= curve.back().mean_cost) return curve.back().accuracy;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (cost_level <= curve[i].mean_cost) {
      const auto& a = curve[i - 1];
      const auto& b = curve[i];
      if (b.mean_cost == a.mean_cost) return b.accuracy;
      double frac = (cost_level - a.mean_cost) / (b.mean_cost - a.mean_cost);
      return a.accuracy + frac * (b.accuracy - a.accuracy);
    }
  }
  return curve.back().accuracy;
}

SweepResult sweep(const Dataset& train_set, const Dataset& valid_set,
                  const Dataset& test_set, const CostVector& costs,
                  const std::vector<TrainConfig>& grid, int threads,
                  const std::string& artifact_dir, std::uint64_t eval_seed) {
  if (grid.empty()) throw ConfigError("sweep: empty config grid");

  SweepResult result;
  std::vector<ModelParams> models(grid.size());
  std::vector<ParetoPoint> valid_points;

  for (std::size_t i = 0; i < grid.size(); ++i) {
    SweepEntry entry;
    entry.model_id = static_cast<int>(i);
    entry.config = grid[i];
    TrainResult tr = train(train_set, valid_set, costs, grid[i], threads);
    if (tr.diverged) {
      std::cerr << "warning: config " << i
                << " diverged and is excluded: " << tr.divergence_message
                << "\n";
      entry.diverged = true;
      result.entries.push_back(entry);
      continue;
    }
    models[i] = tr.params;
    ParetoPoint pt = evaluate(tr.params, valid_set, costs,
                              grid[i].epsilon_clamp, eval_seed, 1, threads);
    pt.model_id = static_cast<int>(i);
    entry.valid_accuracy = pt.accuracy;
    entry.valid_mean_cost = pt.mean_cost;
    if (!artifact_dir.empty()) {
      std::filesystem::create_directories(artifact_dir);
      entry.params_path =
          artifact_dir + "/model_" + std::to_string(i) + ".params";
      save_params(tr.params, entry.params_path);
    }
    result.entries.push_back(entry);
    valid_points.push_back(pt);
  }

  if (valid_points.empty())
    throw DivergenceError("sweep: every config diverged");

  result.valid_front = pareto_front(valid_points);

  for (const auto& pt : result.valid_front) {
    ParetoPoint test_pt =
        evaluate(models[pt.model_id], test_set, costs,
                 grid[pt.model_id].epsilon_clamp, eval_seed, 1, threads);
    test_pt.model_id = pt.model_id;
    result.test_curve.push_back(test_pt);
  }
  std::sort(result.test_curve.begin(), result.test_curve.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              return a.mean_cost < b.mean_cost;
            });
  return result;
}

void save_curve_csv(const std::vector<ParetoPoint>& curve, double total_cost,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write curve file: " + path);
  out << "model_id,mean_cost,normalized_cost,accuracy\n";
  char buf[160];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", p.model_id,
                  p.mean_cost, p.mean_cost / total_cost, p.accuracy);
    out << buf;
  }
}

std::vector<ParetoPoint> load_curve_csv(const std::string& path,
                                        bool normalized_axis) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open curve file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty curve file: " + path);
  std::vector<ParetoPoint> curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    ParetoPoint p;
    double raw, norm;
    std::getline(ss, cell, ',');
    p.model_id = std::stoi(cell);
    std::getline(ss, cell, ',');
    raw = std::stod(cell);
    std::getline(ss, cell, ',');
    norm = std::stod(cell);
    std::getline(ss, cell, ',');
    p.accuracy = std::stod(cell);
    p.mean_cost = normalized_axis ? norm : raw;
    curve.push_back(p);
  }
  if (curve.empty()) throw DataError("curve file has no points: " + path);
  std::sort(curve.begin(), curve.end(),
            [](const ParetoPoint& a, const ParetoPoint& b) {
              return a.mean_cost < b.mean_cost;
            });
  return curve;
}

void write_curve_svg(const std::vector<ParetoPoint>& curve,
                     const std::string& path) {
  if (curve.empty()) throw ConfigError("write_curve_svg: empty curve");
  const int w = 640, h = 480, margin = 50;
  double cmin = curve.front().mean_cost, cmax = curve.back().mean_cost;
  if (cmax == cmin) cmax = cmin + 1.0;
  auto sx = [&](double c) {
    return margin + (c - cmin) / (cmax - cmin) * (w - 2 * margin);
  };
  auto sy = [&](double a) { return h - margin - a * (h - 2 * margin); };

  std::ofstream out(path);
  if (!out) throw DataError("cannot write svg file: " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\""
      << w - margin << "\" y2=\"" << h - margin
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\""
      << margin << "\" y2=\"" << h - margin << "\" stroke=\"black\"/>\n";
  out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" "
         "points=\"";
  for (const auto& p : curve)
    out << sx(p.mean_cost) << "," << sy(p.accuracy) << " ";
  out << "\"/>\n";
  for (const auto& p : curve)
    out << "<circle cx=\"" << sx(p.mean_cost) << "\" cy=\"" << sy(p.accuracy)
        << "\" r=\"3\" fill=\"steelblue\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"" << h - 10
      << "\" text-anchor=\"middle\">cost</text>\n";
  out << "<text x=\"15\" y=\"" << h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << h / 2
      << ")\">accuracy</text>\n";
  out << "</svg>\n";
}

}  // namespace bream
