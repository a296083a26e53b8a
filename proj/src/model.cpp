#include "bream/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>

#include "bream/errors.hpp"

namespace bream {

CellType cell_type_from_string(const std::string& s) {
  if (s == "rnn") return CellType::Rnn;
  if (s == "gru") return CellType::Gru;
  throw ConfigError("unknown cell type: " + s);
}

std::string to_string(CellType c) {
  return c == CellType::Rnn ? "rnn" : "gru";
}

namespace {

template <typename F>
void for_each_tensor(ModelParams& m, F&& f) {
  if (m.cell_type == CellType::Rnn) {
    f(m.rnn_wz);
    f(m.rnn_wu);
    f(m.rnn_b);
  } else {
    f(m.gru_wr);
    f(m.gru_ur);
    f(m.gru_br);
    f(m.gru_wq);
    f(m.gru_uq);
    f(m.gru_bq);
    f(m.gru_wh);
    f(m.gru_uh);
    f(m.gru_bh);
  }
  for (auto& w : m.policy_w) f(w);
  for (auto& b : m.policy_b) f(b);
  f(m.pred_w);
  f(m.pred_b);
}

template <typename F>
void for_each_tensor(const ModelParams& m, F&& f) {
  for_each_tensor(const_cast<ModelParams&>(m),
                  [&](auto& t) { f(std::as_const(t)); });
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::size_t ModelParams::param_count() const {
  std::size_t count = 0;
  for_each_tensor(*this, [&](const auto& t) { count += t.size(); });
  return count;
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_tensor(*this, [&](const auto& t) { ok = ok && t.allFinite(); });
  return ok;
}

double ModelParams::squared_norm() const {
  double s = 0.0;
  for_each_tensor(*this, [&](const auto& t) { s += t.squaredNorm(); });
  return s;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.set_zero();
  return z;
}

void ModelParams::set_zero() {
  for_each_tensor(*this, [](auto& t) { t.setZero(); });
}

void ModelParams::axpy(double alpha, const ModelParams& other) {
  auto add = [&](auto& dst, const auto& src) { dst += alpha * src; };
  if (cell_type == CellType::Rnn) {
    add(rnn_wz, other.rnn_wz);
    add(rnn_wu, other.rnn_wu);
    add(rnn_b, other.rnn_b);
  } else {
    add(gru_wr, other.gru_wr);
    add(gru_ur, other.gru_ur);
    add(gru_br, other.gru_br);
    add(gru_wq, other.gru_wq);
    add(gru_uq, other.gru_uq);
    add(gru_bq, other.gru_bq);
    add(gru_wh, other.gru_wh);
    add(gru_uh, other.gru_uh);
    add(gru_bh, other.gru_bh);
  }
  for (std::size_t i = 0; i < policy_w.size(); ++i) {
    add(policy_w[i], other.policy_w[i]);
    add(policy_b[i], other.policy_b[i]);
  }
  add(pred_w, other.pred_w);
  add(pred_b, other.pred_b);
}

void ModelParams::scale(double s) {
  for_each_tensor(*this, [&](auto& t) { t *= s; });
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(param_count());
  for_each_tensor(*this, [&](const auto& t) {
    flat.insert(flat.end(), t.data(), t.data() + t.size());
  });
  return flat;
}

void ModelParams::unflatten(const std::vector<double>& flat) {
  if (flat.size() != param_count())
    throw ConfigError("flat parameter size mismatch");
  std::size_t pos = 0;
  for_each_tensor(*this, [&](auto& t) {
    std::copy(flat.data() + pos, flat.data() + pos + t.size(), t.data());
    pos += t.size();
  });
}

void ModelParams::validate() const {
  if (n < 1 || n_classes < 2 || p < 1 || steps < 1)
    throw ConfigError("invalid model dimensions");
  auto check = [&](const Mat& m, int r, int c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw ConfigError(std::string("bad shape for ") + name);
  };
  auto checkv = [&](const Vec& v, int r, const char* name) {
    if (v.size() != r)
      throw ConfigError(std::string("bad shape for ") + name);
  };
  if (cell_type == CellType::Rnn) {
    check(rnn_wz, p, p, "rnn_wz");
    check(rnn_wu, p, 2 * n, "rnn_wu");
    checkv(rnn_b, p, "rnn_b");
  } else {
    check(gru_wr, p, 2 * n, "gru_wr");
    check(gru_ur, p, p, "gru_ur");
    checkv(gru_br, p, "gru_br");
    check(gru_wq, p, 2 * n, "gru_wq");
    check(gru_uq, p, p, "gru_uq");
    checkv(gru_bq, p, "gru_bq");
    check(gru_wh, p, 2 * n, "gru_wh");
    check(gru_uh, p, p, "gru_uh");
    checkv(gru_bh, p, "gru_bh");
  }
  if (static_cast<int>(policy_w.size()) != policy_count() ||
      static_cast<int>(policy_b.size()) != policy_count())
    throw ConfigError("policy head count does not match step count");
  for (int t = 0; t < policy_count(); ++t) {
    check(policy_w[t], n, p, "policy_w");
    checkv(policy_b[t], n, "policy_b");
  }
  check(pred_w, n_classes, p, "pred_w");
  checkv(pred_b, n_classes, "pred_b");
  if (!all_finite()) throw ConfigError("non-finite parameter values");
}

ModelParams init_params(int n, int n_classes, int p, int steps,
                        CellType cell_type, std::uint64_t seed, double scale,
                        bool shared_policy) {
  if (n < 1 || n_classes < 2 || p < 1 || steps < 1)
    throw ConfigError("init_params: invalid dimensions");

  ModelParams m;
  m.cell_type = cell_type;
  m.n = n;
  m.n_classes = n_classes;
  m.p = p;
  m.steps = steps;
  m.shared_policy = shared_policy;

  Rng rng = Rng::derive(seed, 0x696e6974ULL);  // "init"
  // fan-in scale per matrix unless an explicit scale is given
  auto fill = [&](Mat& w, int rows, int cols) {
    w.resize(rows, cols);
    double s = scale > 0.0 ? scale : 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform_symmetric(s);
  };

  if (cell_type == CellType::Rnn) {
    fill(m.rnn_wz, p, p);
    fill(m.rnn_wu, p, 2 * n);
    m.rnn_b = Vec::Zero(p);
  } else {
    fill(m.gru_wr, p, 2 * n);
    fill(m.gru_ur, p, p);
    m.gru_br = Vec::Zero(p);
    fill(m.gru_wq, p, 2 * n);
    fill(m.gru_uq, p, p);
    m.gru_bq = Vec::Zero(p);
    fill(m.gru_wh, p, 2 * n);
    fill(m.gru_uh, p, p);
    m.gru_bh = Vec::Zero(p);
  }
  int heads = shared_policy ? 1 : steps;
  for (int t = 0; t < heads; ++t) {
    Mat w;
    fill(w, n, p);
    m.policy_w.push_back(std::move(w));
    m.policy_b.push_back(Vec::Zero(n));
  }
  fill(m.pred_w, n_classes, p);
  m.pred_b = Vec::Zero(n_classes);
  m.validate();
  return m;
}

Vec masked_input(const Vec& x, const Vec& mask) {
  if (x.size() != mask.size())
    throw ConfigError("masked_input: dimension mismatch");
  Vec u(2 * x.size());
  u.head(x.size()) = x.cwiseProduct(mask);
  u.tail(x.size()) = mask;
  return u;
}

Vec aggregate(const ModelParams& params, const Vec& z, const Vec& u) {
  if (z.size() != params.p || u.size() != 2 * params.n)
    throw ConfigError("aggregate: dimension mismatch");
  if (params.cell_type == CellType::Rnn) {
    return (params.rnn_wz * z + params.rnn_wu * u + params.rnn_b)
        .array()
        .tanh();
  }
  Vec r = (params.gru_wr * u + params.gru_ur * z + params.gru_br)
              .unaryExpr([](double v) { return sigmoid(v); });
  Vec q = (params.gru_wq * u + params.gru_uq * z + params.gru_bq)
              .unaryExpr([](double v) { return sigmoid(v); });
  Vec h = (params.gru_wh * u + params.gru_uh * r.cwiseProduct(z) +
           params.gru_bh)
              .array()
              .tanh();
  return (Vec::Ones(params.p) - q).cwiseProduct(z) + q.cwiseProduct(h);
}

Vec policy_probs(const ModelParams& params, int t, const Vec& z, double eps) {
  if (t < 0 || t >= params.steps)
    throw ConfigError("policy_probs: step index out of range");
  int idx = params.policy_index(t);
  Vec logits = params.policy_w[idx] * z + params.policy_b[idx];
  return logits.unaryExpr([eps](double v) {
    double s = sigmoid(v);
    return std::min(1.0 - eps, std::max(eps, s));
  });
}

Vec predict_scores(const ModelParams& params, const Vec& z) {
  if (z.size() != params.p)
    throw ConfigError("predict_scores: dimension mismatch");
  return params.pred_w * z + params.pred_b;
}

int predict_class(const Vec& scores) {
  if (scores.size() < 2) throw ConfigError("predict_class: need >= 2 scores");
  int best = 0;
  for (int k = 0; k < scores.size(); ++k) {
    if (std::isnan(scores[k]))
      throw DivergenceError("NaN score in predict_class");
    if (scores[k] > scores[best]) best = k;  // ties keep the lowest index
  }
  return best;
}

namespace {

void write_tensor(std::ofstream& out, const char* name,
                  const Eigen::Ref<const Mat>& t) {
  out << name << " " << t.rows() << " " << t.cols() << "\n";
  char buf[32];
  for (int i = 0; i < t.rows(); ++i) {
    for (int j = 0; j < t.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", t(i, j));
      out << buf << (j + 1 < t.cols() ? " " : "");
    }
    out << "\n";
  }
}

Mat read_tensor(std::ifstream& in, const std::string& expect_name) {
  std::string name;
  int rows, cols;
  if (!(in >> name >> rows >> cols) || name != expect_name)
    throw DataError("params file: expected tensor " + expect_name);
  Mat t(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      if (!(in >> t(i, j)))
        throw DataError("params file: truncated tensor " + expect_name);
  return t;
}

}  // namespace

void save_params(const ModelParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write params file: " + path);
  out << "BREAM-PARAMS 1\n";
  out << "cell " << to_string(params.cell_type) << "\n";
  out << "dims " << params.n << " " << params.n_classes << " " << params.p
      << " " << params.steps << " " << (params.shared_policy ? 1 : 0) << "\n";
  if (params.cell_type == CellType::Rnn) {
    write_tensor(out, "rnn_wz", params.rnn_wz);
    write_tensor(out, "rnn_wu", params.rnn_wu);
    write_tensor(out, "rnn_b", params.rnn_b);
  } else {
    write_tensor(out, "gru_wr", params.gru_wr);
    write_tensor(out, "gru_ur", params.gru_ur);
    write_tensor(out, "gru_br", params.gru_br);
    write_tensor(out, "gru_wq", params.gru_wq);
    write_tensor(out, "gru_uq", params.gru_uq);
    write_tensor(out, "gru_bq", params.gru_bq);
    write_tensor(out, "gru_wh", params.gru_wh);
    write_tensor(out, "gru_uh", params.gru_uh);
    write_tensor(out, "gru_bh", params.gru_bh);
  }
  for (int t = 0; t < params.policy_count(); ++t) {
    write_tensor(out, ("policy_w" + std::to_string(t)).c_str(),
                 params.policy_w[t]);
    write_tensor(out, ("policy_b" + std::to_string(t)).c_str(),
                 params.policy_b[t]);
  }
  write_tensor(out, "pred_w", params.pred_w);
  write_tensor(out, "pred_b", params.pred_b);
}

ModelParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open params file: " + path);
  std::string magic;
  int version;
  if (!(in >> magic >> version) || magic != "BREAM-PARAMS" || version != 1)
    throw DataError("unrecognized params file header: " + path);
  std::string key, cell;
  if (!(in >> key >> cell) || key != "cell")
    throw DataError("params file: missing cell type");
  ModelParams m;
  m.cell_type = cell_type_from_string(cell);
  int shared;
  if (!(in >> key >> m.n >> m.n_classes >> m.p >> m.steps >> shared) ||
      key != "dims")
    throw DataError("params file: missing dims");
  m.shared_policy = shared != 0;
  if (m.cell_type == CellType::Rnn) {
    m.rnn_wz = read_tensor(in, "rnn_wz");
    m.rnn_wu = read_tensor(in, "rnn_wu");
    m.rnn_b = read_tensor(in, "rnn_b");
  } else {
    m.gru_wr = read_tensor(in, "gru_wr");
    m.gru_ur = read_tensor(in, "gru_ur");
    m.gru_br = read_tensor(in, "gru_br");
    m.gru_wq = read_tensor(in, "gru_wq");
    m.gru_uq = read_tensor(in, "gru_uq");
    m.gru_bq = read_tensor(in, "gru_bq");
    m.gru_wh = read_tensor(in, "gru_wh");
    m.gru_uh = read_tensor(in, "gru_uh");
    m.gru_bh = read_tensor(in, "gru_bh");
  }
  for (int t = 0; t < (m.shared_policy ? 1 : m.steps); ++t) {
    m.policy_w.push_back(read_tensor(in, "policy_w" + std::to_string(t)));
    m.policy_b.push_back(read_tensor(in, "policy_b" + std::to_string(t)));
  }
  m.pred_w = read_tensor(in, "pred_w");
  m.pred_b = read_tensor(in, "pred_b");
  m.validate();
  return m;
}

}  // namespace bream
