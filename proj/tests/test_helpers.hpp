#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bream/dataset.hpp"
#include "bream/model.hpp"
#include "bream/rng.hpp"

namespace bream::testing {

/// Central finite differences of f over every flattened parameter.
inline std::vector<double> finite_diff(
    const ModelParams& params,
    const std::function<double(const ModelParams&)>& f, double h = 1e-6) {
  std::vector<double> flat = params.flatten();
  std::vector<double> grad(flat.size());
  ModelParams work = params;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    double orig = flat[i];
    flat[i] = orig + h;
    work.unflatten(flat);
    double fp = f(work);
    flat[i] = orig - h;
    work.unflatten(flat);
    double fm = f(work);
    flat[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Standard-normal draw via Box-Muller on the pinned rng.
inline double gaussian(Rng& rng) {
  double u1 = rng.uniform();
  double u2 = rng.uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Separable task: 10 standard-normal features, label = [x0 + x1 > 0].
/// Only features 0 and 1 carry signal.
inline Dataset make_separable(int rows, std::uint64_t seed, int n = 10) {
  Dataset d;
  d.features.resize(rows, n);
  d.labels.resize(rows);
  d.n_classes = 2;
  Rng rng = Rng::derive(seed, 0xda7aULL);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < n; ++j) d.features(i, j) = gaussian(rng);
    d.labels[i] = d.features(i, 0) + d.features(i, 1) > 0.0 ? 1 : 0;
  }
  return d;
}

/// Two redundant, equally informative features: both carry the class sign
/// plus small independent noise.
inline Dataset make_redundant_pair(int rows, std::uint64_t seed) {
  Dataset d;
  d.features.resize(rows, 2);
  d.labels.resize(rows);
  d.n_classes = 2;
  Rng rng = Rng::derive(seed, 0x2fea7ULL);
  for (int i = 0; i < rows; ++i) {
    int y = rng.uniform() < 0.5 ? 0 : 1;
    double s = y == 1 ? 1.0 : -1.0;
    d.features(i, 0) = s + 0.1 * gaussian(rng);
    d.features(i, 1) = s + 0.1 * gaussian(rng);
    d.labels[i] = y;
  }
  return d;
}

}  // namespace bream::testing
