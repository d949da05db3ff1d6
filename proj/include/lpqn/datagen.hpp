#pragma once

// Seeded instance generators. Every random draw comes from a named stream of
// a counter-based generator, so an instance depends only on (params, seed)
// and adding a new stream never shifts the draws of an existing one.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lpqn/errors.hpp"
#include "lpqn/linops.hpp"

namespace lpqn {

/// Counter-based 64-bit generator: output k of stream (seed, name) is
/// mix(key + k * golden), with key = mix(seed ^ fnv1a(name)). Uniform and
/// normal variates are produced here rather than by <random> distributions so
/// that instances are identical across standard libraries.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::string_view stream) : key_(mix(seed ^ fnv1a(stream))) {}

  std::uint64_t next() { return mix(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("CounterRng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r = next();
    while (r >= limit) r = next();
    return r % n;
  }

  /// Standard normal by Box-Muller (one variate per pair of uniforms).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double rademacher() { return (next() >> 63) != 0 ? 1.0 : -1.0; }

  Eigen::VectorXd normal_vector(Index n) {
    Eigen::VectorXd v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(Index r, Index c) {
    Eigen::MatrixXd M(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) M(i, j) = normal();
    return M;
  }

  /// k distinct indices from [0, N), sorted ascending (partial Fisher-Yates).
  std::vector<Index> sample_without_replacement(Index N, Index k) {
    if (k < 0 || k > N) throw std::invalid_argument("sample_without_replacement: k out of range");
    std::vector<Index> pool(static_cast<std::size_t>(N));
    for (Index i = 0; i < N; ++i) pool[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < k; ++i) {
      const auto j = i + static_cast<Index>(below(static_cast<std::uint64_t>(N - i)));
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    }
    pool.resize(static_cast<std::size_t>(k));
    std::sort(pool.begin(), pool.end());
    return pool;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------- sparse recovery

struct SvrInstance {
  Eigen::MatrixXd U;      // m x n, U = [M, -M]
  Eigen::VectorXd x_opt;  // n
  Eigen::VectorXd v;      // m
  Eigen::VectorXd noise;  // v - U x_opt
  std::string warning;
};

inline SvrInstance gen_sparse_binary_instance(Index n, Index m, double sparsity_frac, double sigma,
                                              std::uint64_t seed) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_sparse_binary_instance: n must be even");
  if (m < 1 || m > n) throw std::invalid_argument("gen_sparse_binary_instance: need 1 <= m <= n");
  if (!(sparsity_frac > 0.0 && sparsity_frac <= 1.0)) {
    throw std::invalid_argument("gen_sparse_binary_instance: sparsity fraction must lie in (0, 1]");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("gen_sparse_binary_instance: sigma must be nonnegative");
  SvrInstance inst;
  Index lo = 10, hi = 20;
  if (m < hi) hi = m;
  if (m < lo) {
    lo = m;
    inst.warning = "m < 10: ones per column reduced to " + std::to_string(m);
  }
  const Index half = n / 2;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, half);
  CounterRng counts(seed, "svr.ones_per_column");
  CounterRng rows(seed, "svr.row_positions");
  for (Index j = 0; j < half; ++j) {
    const Index c = lo + static_cast<Index>(counts.below(static_cast<std::uint64_t>(hi - lo + 1)));
    for (Index i : rows.sample_without_replacement(m, c)) M(i, j) = 1.0;
  }
  inst.U.resize(m, n);
  inst.U << M, -M;

  const auto k = static_cast<Index>(std::ceil(sparsity_frac * static_cast<double>(n) - 1e-9));
  CounterRng support(seed, "svr.support");
  CounterRng values(seed, "svr.values");
  inst.x_opt = Eigen::VectorXd::Zero(n);
  for (Index i : support.sample_without_replacement(n, k)) inst.x_opt(i) = values.normal();

  CounterRng noise(seed, "svr.noise");
  inst.noise = sigma * noise.normal_vector(m);
  inst.v = inst.U * inst.x_opt + inst.noise;
  return inst;
}

// ---------------------------------------------------------------- classification

struct ClassificationData {
  Eigen::MatrixXd features;  // m x n, rows are samples
  Eigen::VectorXd labels;    // m, entries +-1
};

/// Parses `<label> <index>:<value> ...` lines (1-based indices). Blank lines
/// and lines starting with '#' are skipped. With n_features = 0 the width is
/// the largest index seen.
inline ClassificationData parse_labeled_features(std::istream& in, Index n_features = 0) {
  struct Row {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index width = n_features;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    Row row;
    if (tok == "+1" || tok == "1") row.label = 1.0;
    else if (tok == "-1") row.label = -1.0;
    else throw ParseError("label must be +1 or -1, got '" + tok + "'", line_no);
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("expected <index>:<value>, got '" + tok + "'", line_no);
      }
      std::size_t used = 0;
      long long idx = 0;
      double val = 0.0;
      try {
        idx = std::stoll(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("index");
        const std::string vs = tok.substr(colon + 1);
        val = std::stod(vs, &used);
        if (used != vs.size()) throw std::invalid_argument("value");
      } catch (const std::exception&) {
        throw ParseError("malformed feature '" + tok + "'", line_no);
      }
      if (idx < 1) throw ParseError("feature index must be >= 1", line_no);
      if (n_features > 0 && idx > n_features) {
        throw ParseError("feature index " + std::to_string(idx) + " exceeds " + std::to_string(n_features), line_no);
      }
      if (!std::isfinite(val)) throw ParseError("non-finite feature value", line_no);
      width = std::max<Index>(width, static_cast<Index>(idx));
      row.entries.emplace_back(static_cast<Index>(idx - 1), val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no samples", line_no);
  ClassificationData d;
  d.features = Eigen::MatrixXd::Zero(static_cast<Index>(rows.size()), std::max<Index>(width, 1));
  d.labels.resize(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    d.labels(static_cast<Index>(r)) = rows[r].label;
    for (const auto& [i, v] : rows[r].entries) d.features(static_cast<Index>(r), i) = v;
  }
  return d;
}

inline ClassificationData load_labeled_features(const std::string& path, Index n_features = 0) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "'", 0);
  return parse_labeled_features(f, n_features);
}

struct SyntheticClassification {
  ClassificationData data;
  Eigen::VectorXd planted;  // n, exactly k nonzeros
  double bias = 0.0;
};

/// Binary bag-of-features samples labeled by a planted k-sparse linear rule,
/// each label flipped with probability `flip_rate`.
inline SyntheticClassification gen_classification_synthetic(Index n, Index m, Index k, double feature_prob,
                                                            double flip_rate, std::uint64_t seed) {
  if (n < 1 || m < 1 || k < 1 || k > n) throw std::invalid_argument("gen_classification_synthetic: bad sizes");
  if (!(feature_prob > 0.0 && feature_prob < 1.0) || !(flip_rate >= 0.0 && flip_rate < 0.5)) {
    throw std::invalid_argument("gen_classification_synthetic: bad probabilities");
  }
  SyntheticClassification out;
  CounterRng support(seed, "cls.support");
  CounterRng weights(seed, "cls.weights");
  out.planted = Eigen::VectorXd::Zero(n);
  for (Index i : support.sample_without_replacement(n, k)) out.planted(i) = weights.normal();
  out.bias = -feature_prob * out.planted.sum();
  CounterRng feats(seed, "cls.features");
  CounterRng flips(seed, "cls.flips");
  out.data.features.resize(m, n);
  out.data.labels.resize(m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) out.data.features(j, i) = feats.uniform() < feature_prob ? 1.0 : 0.0;
    double lab = out.data.features.row(j).dot(out.planted) + out.bias >= 0.0 ? 1.0 : -1.0;
    if (flips.uniform() < flip_rate) lab = -lab;
    out.data.labels(j) = lab;
  }
  return out;
}

// ---------------------------------------------------------------- system identification

struct SysidInstance {
  Eigen::VectorXd u;       // input, length T
  Eigen::MatrixXd T;       // m x n windowed convolution matrix
  Eigen::VectorXd yhat;    // m noisy outputs
  Eigen::VectorXd h;       // true impulse response, n samples
  Eigen::VectorXd noise;   // yhat - T h
  std::vector<std::complex<double>> poles;
  Index order = 0;
};

/// Random stable order-eta system: eta/2 conjugate pole pairs uniform in the
/// disk of radius 0.95 with complex standard-normal residues,
/// h_k = sum_j 2 Re(c_j p_j^k), k = 0..n-1.
inline SysidInstance gen_sysid_instance(Index eta, Index T, Index m, Index n, std::uint64_t seed) {
  if (eta < 2 || eta % 2 != 0) throw std::invalid_argument("gen_sysid_instance: eta must be even and >= 2");
  if (T < 1 || n < 1 || m < 1 || m > n + T - 1) throw std::invalid_argument("gen_sysid_instance: bad sizes");
  SysidInstance inst;
  inst.order = eta;
  CounterRng poles(seed, "sysid.poles");
  CounterRng residues(seed, "sysid.residues");
  inst.h = Eigen::VectorXd::Zero(n);
  for (Index j = 0; j < eta / 2; ++j) {
    const double r = 0.95 * std::sqrt(poles.uniform());
    const double phi = 2.0 * std::numbers::pi * poles.uniform();
    const std::complex<double> p = std::polar(r, phi);
    const std::complex<double> c(residues.normal(), residues.normal());
    inst.poles.push_back(p);
    inst.poles.push_back(std::conj(p));
    std::complex<double> pk(1.0, 0.0);
    for (Index k = 0; k < n; ++k) {
      inst.h(k) += 2.0 * (c * pk).real();
      pk *= p;
    }
  }
  CounterRng input(seed, "sysid.input");
  inst.u.resize(T);
  for (Index i = 0; i < T; ++i) inst.u(i) = input.uniform(-5.0, 5.0);
  inst.T = toeplitz_matrix(inst.u, n, m);
  CounterRng noise(seed, "sysid.noise");
  inst.noise.resize(m);
  for (Index i = 0; i < m; ++i) inst.noise(i) = noise.uniform(-0.25, 0.25);
  inst.yhat = inst.T * inst.h + inst.noise;
  return inst;
}

// ---------------------------------------------------------------- matrix completion

struct CompletionInstance {
  Eigen::MatrixXd M;          // m x n, rank r
  std::vector<Index> omega;   // sorted column-major linear indices
  Eigen::VectorXd b;          // sampled entries plus noise
};

inline CompletionInstance gen_completion_instance(Index m, Index n, Index r, double sigma, double sampling_ratio,
                                                  std::uint64_t seed) {
  if (r < 1 || r > std::min(m, n)) throw std::invalid_argument("gen_completion_instance: need 1 <= r <= min(m, n)");
  if (!(sampling_ratio > 0.0 && sampling_ratio <= 1.0)) {
    throw std::invalid_argument("gen_completion_instance: sampling ratio must lie in (0, 1]");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("gen_completion_instance: sigma must be nonnegative");
  CompletionInstance inst;
  CounterRng left(seed, "mc.left");
  CounterRng right(seed, "mc.right");
  const Eigen::MatrixXd L = left.normal_matrix(m, r);
  const Eigen::MatrixXd R = right.normal_matrix(n, r);
  inst.M = L * R.transpose();
  const auto q = std::max<Index>(1, static_cast<Index>(std::llround(sampling_ratio * static_cast<double>(m * n))));
  CounterRng pos(seed, "mc.positions");
  inst.omega = pos.sample_without_replacement(m * n, q);
  CounterRng noise(seed, "mc.noise");
  inst.b.resize(q);
  for (Index k = 0; k < q; ++k) inst.b(k) = inst.M(inst.omega[static_cast<std::size_t>(k)]) + sigma * noise.normal();
  return inst;
}

// ---------------------------------------------------------------- APG compressed sensing

struct ApgInstance {
  Eigen::VectorXd x_star;       // n, s nonzeros with magnitudes in [1, 1000]
  std::vector<Index> rows;      // selected DCT rows, sorted
  Eigen::MatrixXd A;            // m x n partial DCT
  Eigen::VectorXd b;            // A (x* + e1) + e2
};

inline ApgInstance gen_apg_instance(Index n, Index m, Index s, double sigma1, double sigma2, std::uint64_t seed) {
  if (s < 1 || s > m || m > n) throw std::invalid_argument("gen_apg_instance: need 1 <= s <= m <= n");
  ApgInstance inst;
  CounterRng support(seed, "apg.support");
  CounterRng sign(seed, "apg.sign");
  CounterRng mag(seed, "apg.magnitude");
  inst.x_star = Eigen::VectorXd::Zero(n);
  for (Index i : support.sample_without_replacement(n, s)) {
    inst.x_star(i) = sign.rademacher() * std::pow(10.0, 3.0 * mag.uniform());
  }
  CounterRng rows(seed, "apg.rows");
  inst.rows = rows.sample_without_replacement(n, m);
  inst.A = dct_rows(inst.rows, n);
  CounterRng e1(seed, "apg.signal_noise");
  CounterRng e2(seed, "apg.measurement_noise");
  const Eigen::VectorXd n1 = sigma1 * e1.normal_vector(n);
  const Eigen::VectorXd n2 = sigma2 * e2.normal_vector(m);
  inst.b = inst.A * (inst.x_star + n1) + n2;
  return inst;
}

}  // namespace lpqn
