#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "bream/errors.hpp"

namespace bream {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Tabular classification dataset: rows x features plus integer labels
/// re-encoded to 0..n_classes-1.
struct Dataset {
  Mat features;                           // rows x n
  std::vector<int> labels;                // rows, each in [0, n_classes)
  int n_classes = 0;
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;   // class id -> original token

  int rows() const { return static_cast<int>(features.rows()); }
  int n_features() const { return static_cast<int>(features.cols()); }

  /// 64-bit content fingerprint (features bytes + labels).
  std::uint64_t fingerprint() const;

  void validate() const;
};

/// Per-feature nonnegative acquisition costs.
struct CostVector {
  Vec c;
  double total = 0.0;

  explicit CostVector(Vec costs);
  CostVector() = default;

  int size() const { return static_cast<int>(c.size()); }

  static CostVector uniform(int n);
  /// c_i = (i+1)/n for zero-based i, so the last feature costs 1.
  static CostVector linear(int n);
  /// One nonnegative real per line, exactly n lines.
  static CostVector from_file(const std::string& path, int n);
  /// Parses a cost spec: "uniform", "linear" or "file:PATH".
  static CostVector from_spec(const std::string& spec, int n);
};

struct SplitSpec {
  std::uint64_t seed = 0;
  double ratios[3] = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  void validate() const;
};

/// Per-feature shift/scale record fitted on the train split. Columns with
/// zero train std map to constant 0.
struct Standardizer {
  Vec mean;
  Vec stddev;  // population formula; 0 marks a degenerate column

  void apply(Dataset& d) const;
  void save(const std::string& path) const;
  static Standardizer load(const std::string& path);
};

/// Loads a UTF-8 CSV with a header row. The label column is selected by
/// name, or by zero-based index when `label_column` parses as an integer
/// that is not a header name. Labels are encoded by first appearance.
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Writes a dataset back to CSV (header + rows, '.' decimal, full
/// precision) so that reloading round-trips features and labels.
void save_csv(const Dataset& d, const std::string& path);

struct SplitResult {
  Dataset train, valid, test;
  std::vector<int> train_idx, valid_idx, test_idx;  // original row indices
};

/// Seeded shuffle of row indices then contiguous partition by ratios;
/// remainder rows go to the last (test) split.
SplitResult split_thirds(const Dataset& d, const SplitSpec& spec);

/// Fits a standardizer on `train` and applies it in place to `train` and
/// every dataset in `others`.
Standardizer standardize(Dataset& train, std::vector<Dataset*> others);

}  // namespace bream
