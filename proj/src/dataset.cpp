#include "bream/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "bream/rng.hpp"

namespace bream {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

std::uint64_t Dataset::fingerprint() const {
  std::uint64_t h = fnv1a(features.data(),
                          sizeof(double) * features.size());
  h = fnv1a(labels.data(), sizeof(int) * labels.size(), h);
  return h;
}

void Dataset::validate() const {
  if (n_features() < 1) throw DataError("dataset has no feature columns");
  if (rows() < 3) throw DataError("dataset has fewer than 3 rows");
  if (n_classes < 2) throw DataError("dataset has fewer than 2 classes");
  if (static_cast<int>(labels.size()) != rows())
    throw DataError("label count does not match row count");
  for (int y : labels)
    if (y < 0 || y >= n_classes) throw DataError("label out of range");
  if (!features.allFinite())
    throw DataError("dataset contains non-finite features");
}

CostVector::CostVector(Vec costs) : c(std::move(costs)) {
  for (int i = 0; i < c.size(); ++i)
    if (!(c[i] >= 0.0))
      throw DataError("cost entry " + std::to_string(i) + " is negative");
  total = c.sum();
  if (!(total > 0.0)) throw DataError("total cost must be positive");
}

CostVector CostVector::uniform(int n) {
  return CostVector(Vec::Ones(n));
}

CostVector CostVector::linear(int n) {
  Vec c(n);
  for (int i = 0; i < n; ++i) c[i] = static_cast<double>(i + 1) / n;
  return CostVector(c);
}

CostVector CostVector::from_file(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cost file: " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    double v;
    if (!parse_double(line, v))
      throw DataError("unparseable cost on line " +
                      std::to_string(vals.size() + 1) + " of " + path);
    vals.push_back(v);
  }
  if (static_cast<int>(vals.size()) != n)
    throw DataError("cost file " + path + " holds " +
                    std::to_string(vals.size()) + " entries, expected " +
                    std::to_string(n));
  Vec c(n);
  for (int i = 0; i < n; ++i) c[i] = vals[i];
  return CostVector(c);
}

CostVector CostVector::from_spec(const std::string& spec, int n) {
  if (spec == "uniform") return uniform(n);
  if (spec == "linear") return linear(n);
  if (spec.rfind("file:", 0) == 0) return from_file(spec.substr(5), n);
  throw DataError("unknown cost spec: " + spec +
                  " (expected uniform, linear or file:PATH)");
}

void SplitSpec::validate() const {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("split ratios must sum to 1");
  for (double r : ratios)
    if (!(r > 0.0)) throw DataError("split ratios must be positive");
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);

  std::string header_line;
  if (!std::getline(in, header_line))
    throw DataError("empty dataset file: " + path);
  auto header = split_line(header_line);
  for (auto& h : header) h = trim(h);

  int label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == label_column) label_idx = static_cast<int>(i);
  if (label_idx < 0) {
    // fall back to a zero-based column index
    int idx;
    auto res = std::from_chars(label_column.data(),
                               label_column.data() + label_column.size(), idx);
    if (res.ec == std::errc() &&
        res.ptr == label_column.data() + label_column.size() && idx >= 0 &&
        idx < static_cast<int>(header.size()))
      label_idx = idx;
  }
  if (label_idx < 0)
    throw DataError("label column '" + label_column + "' not found in " + path);

  int n = static_cast<int>(header.size()) - 1;
  if (n < 1) throw DataError("dataset needs at least one feature column");

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::vector<std::string> label_names;
  std::unordered_map<std::string, int> label_ids;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError("row " + std::to_string(lineno) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    std::vector<double> row;
    row.reserve(n);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<int>(j) == label_idx) {
        std::string token = trim(cells[j]);
        if (token.empty())
          throw DataError("empty label at row " + std::to_string(lineno));
        auto [it, inserted] =
            label_ids.emplace(token, static_cast<int>(label_names.size()));
        if (inserted) label_names.push_back(token);
        labels.push_back(it->second);
      } else {
        double v;
        if (!parse_double(cells[j], v) || !std::isfinite(v))
          throw DataError("unparseable cell at row " + std::to_string(lineno) +
                          ", column '" + header[j] + "'");
        row.push_back(v);
      }
    }
    rows.push_back(std::move(row));
  }

  if (label_names.size() < 2)
    throw DataError("dataset has fewer than 2 distinct labels");

  Dataset d;
  d.features.resize(static_cast<int>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < n; ++j) d.features(static_cast<int>(i), j) = rows[i][j];
  d.labels = std::move(labels);
  d.n_classes = static_cast<int>(label_names.size());
  d.label_names = std::move(label_names);
  for (std::size_t j = 0; j < header.size(); ++j)
    if (static_cast<int>(j) != label_idx) d.feature_names.push_back(header[j]);
  d.validate();
  return d;
}

void save_csv(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (int j = 0; j < d.n_features(); ++j) {
    std::string name = j < static_cast<int>(d.feature_names.size())
                           ? d.feature_names[j]
                           : "f" + std::to_string(j);
    out << name << ",";
  }
  out << "label\n";
  char buf[64];
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.n_features(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", d.features(i, j));
      out << buf << ",";
    }
    int y = d.labels[i];
    if (y < static_cast<int>(d.label_names.size()))
      out << d.label_names[y];
    else
      out << y;
    out << "\n";
  }
}

namespace {

Dataset take_rows(const Dataset& d, const std::vector<int>& idx) {
  Dataset out;
  out.features.resize(static_cast<int>(idx.size()), d.n_features());
  out.labels.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<int>(i)) = d.features.row(idx[i]);
    out.labels.push_back(d.labels[idx[i]]);
  }
  out.n_classes = d.n_classes;
  out.feature_names = d.feature_names;
  out.label_names = d.label_names;
  return out;
}

}  // namespace

SplitResult split_thirds(const Dataset& d, const SplitSpec& spec) {
  spec.validate();
  int rows = d.rows();
  std::vector<int> idx(rows);
  for (int i = 0; i < rows; ++i) idx[i] = i;

  // Fisher-Yates with the library's pinned rng
  Rng rng = Rng::derive(spec.seed, 0x73706c6974ULL);  // "split"
  for (int i = rows - 1; i > 0; --i) {
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[i], idx[j]);
  }

  int n_train = static_cast<int>(rows * spec.ratios[0]);
  int n_valid = static_cast<int>(rows * spec.ratios[1]);
  int n_test = rows - n_train - n_valid;  // remainder to test
  if (n_train < 1 || n_valid < 1 || n_test < 1)
    throw DataError("split produces an empty subset (rows=" +
                    std::to_string(rows) + ")");

  SplitResult r;
  r.train_idx.assign(idx.begin(), idx.begin() + n_train);
  r.valid_idx.assign(idx.begin() + n_train, idx.begin() + n_train + n_valid);
  r.test_idx.assign(idx.begin() + n_train + n_valid, idx.end());
  r.train = take_rows(d, r.train_idx);
  r.valid = take_rows(d, r.valid_idx);
  r.test = take_rows(d, r.test_idx);
  return r;
}

void Standardizer::apply(Dataset& d) const {
  if (d.n_features() != mean.size())
    throw DataError("standardizer dimension mismatch");
  for (int j = 0; j < d.n_features(); ++j) {
    if (stddev[j] == 0.0)
      d.features.col(j).setZero();
    else
      d.features.col(j) =
          (d.features.col(j).array() - mean[j]) / stddev[j];
  }
}

void Standardizer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write standardizer file: " + path);
  out << "# feature mean std\n";
  char buf[160];
  for (int j = 0; j < mean.size(); ++j) {
    std::snprintf(buf, sizeof(buf), "%d %.17g %.17g\n", j, mean[j], stddev[j]);
    out << buf;
  }
}

Standardizer Standardizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open standardizer file: " + path);
  std::vector<double> means, stds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int j;
    double m, s;
    if (!(ss >> j >> m >> s))
      throw DataError("malformed standardizer line: " + line);
    means.push_back(m);
    stds.push_back(s);
  }
  Standardizer sc;
  sc.mean = Eigen::Map<Vec>(means.data(), static_cast<int>(means.size()));
  sc.stddev = Eigen::Map<Vec>(stds.data(), static_cast<int>(stds.size()));
  return sc;
}

Standardizer standardize(Dataset& train, std::vector<Dataset*> others) {
  if (train.rows() < 1) throw DataError("empty train split");
  int n = train.n_features();
  Standardizer sc;
  sc.mean.resize(n);
  sc.stddev.resize(n);
  for (int j = 0; j < n; ++j) {
    double m = train.features.col(j).mean();
    // population std
    double var = (train.features.col(j).array() - m).square().mean();
    sc.mean[j] = m;
    sc.stddev[j] = var > 0.0 ? std::sqrt(var) : 0.0;
  }
  sc.apply(train);
  for (Dataset* d : others) sc.apply(*d);
  return sc;
}

}  // namespace bream
