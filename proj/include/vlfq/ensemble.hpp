// Copyright 2026 The vlfq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Quantum sources {p_i, rho_i}: data model, validation, composition and
// seeded generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vlfq/error.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/random.hpp"

namespace vlfq {

inline constexpr double kProbSumTol = 1e-9;
inline constexpr std::size_t kDefaultMaxDim = 256;

struct Ensemble {
  std::size_t dim = 0;
  std::vector<std::string> labels;
  std::vector<double> probs;
  std::vector<CMatrix> states;

  std::size_t size() const { return probs.size(); }
};

struct Violation {
  std::string check;
  std::optional<std::size_t> index;
  double magnitude = 0.0;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  std::string summary() const {
    std::ostringstream os;
    for (const auto& v : violations) {
      os << v.check;
      if (v.index) os << " [letter " << *v.index << "]";
      os << " (magnitude " << v.magnitude << ")\n";
    }
    return os.str();
  }
};

inline ValidationReport validate(const Ensemble& e) {
  ValidationReport r;
  auto add = [&](std::string check, std::optional<std::size_t> idx, double mag) {
    r.violations.push_back({std::move(check), idx, mag});
  };
  if (e.dim == 0) add("dim must be positive", std::nullopt, 0.0);
  if (e.probs.empty()) add("ensemble has no letters", std::nullopt, 0.0);
  if (e.labels.size() != e.probs.size() || e.states.size() != e.probs.size()) {
    add("labels/probs/states lengths differ", std::nullopt,
        std::abs(static_cast<double>(e.labels.size()) -
                 static_cast<double>(e.states.size())) +
            std::abs(static_cast<double>(e.probs.size()) -
                     static_cast<double>(e.states.size())));
    return r;
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < e.labels.size(); ++i)
    if (!seen.insert(e.labels[i]).second) add("duplicate label", i, 0.0);

  double sum = 0.0;
  for (std::size_t i = 0; i < e.probs.size(); ++i) {
    const double p = e.probs[i];
    if (!std::isfinite(p) || p <= 0.0)
      add("probability must be positive", i, std::isfinite(p) ? -p : 0.0);
    sum += p;
  }
  if (!(std::abs(sum - 1.0) <= kProbSumTol))
    add("probabilities must sum to 1", std::nullopt, std::abs(sum - 1.0));

  const auto d = static_cast<Eigen::Index>(e.dim);
  for (std::size_t i = 0; i < e.states.size(); ++i) {
    const CMatrix& s = e.states[i];
    if (s.rows() != d || s.cols() != d) {
      add("state shape does not match dim", i,
          static_cast<double>(std::max(std::abs(s.rows() - d), std::abs(s.cols() - d))));
      continue;
    }
    if (!all_finite(s)) {
      add("state has non-finite entries", i, 0.0);
      continue;
    }
    const double herm = hermiticity_violation(s);
    if (herm > kHermiticityTol) {
      add("state is not Hermitian", i, herm);
      continue;
    }
    const double tr = std::abs(s.trace() - cplx(1.0, 0.0));
    if (tr > kDensityTol) add("state trace is not 1", i, tr);
    const double min_eig = herm_eig(s).values.minCoeff();
    if (min_eig < -kDensityTol) add("state is not positive semidefinite", i, -min_eig);
  }
  return r;
}

inline void require_valid(const Ensemble& e) {
  const auto report = validate(e);
  if (!report.ok()) throw Error(ErrorKind::InvalidEnsemble, report.summary());
}

inline CMatrix average_state(const Ensemble& e) {
  require_valid(e);
  const auto d = static_cast<Eigen::Index>(e.dim);
  CMatrix avg = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < e.size(); ++i) avg += e.probs[i] * e.states[i];
  return hermitian_part(avg);
}

/// n-fold tensor power. Letters are n-tuples in lexicographic order with the
/// first position varying slowest; labels are joined with '*'.
inline Ensemble tensor_power(const Ensemble& e, std::size_t n,
                             std::size_t max_dim = kDefaultMaxDim) {
  require_valid(e);
  if (n == 0) throw Error(ErrorKind::BadShape, "tensor_power needs n >= 1");
  std::size_t dim = 1;
  for (std::size_t k = 0; k < n; ++k) {
    if (dim > max_dim / e.dim)
      throw Error(ErrorKind::DimensionTooLarge,
                  std::to_string(e.dim) + "^" + std::to_string(n) + " exceeds " +
                      std::to_string(max_dim));
    dim *= e.dim;
  }
  Ensemble out = e;
  for (std::size_t k = 1; k < n; ++k) {
    Ensemble next;
    next.dim = out.dim * e.dim;
    for (std::size_t a = 0; a < out.size(); ++a) {
      for (std::size_t b = 0; b < e.size(); ++b) {
        next.labels.push_back(out.labels[a] + "*" + e.labels[b]);
        next.probs.push_back(out.probs[a] * e.probs[b]);
        next.states.push_back(tensor(out.states[a], e.states[b]));
      }
    }
    out = std::move(next);
  }
  return out;
}

/// Replaces every rho_i by rho_i (x) rho_k.
inline Ensemble attach_redundancy(const Ensemble& e, const CMatrix& rho_k) {
  require_valid(e);
  Ensemble k{static_cast<std::size_t>(rho_k.rows()), {"k"}, {1.0}, {rho_k}};
  require_valid(k);
  Ensemble out = e;
  out.dim = e.dim * k.dim;
  for (auto& s : out.states) s = tensor(s, rho_k);
  return out;
}

/// Conjugates every state by u.
inline Ensemble rotate(const Ensemble& e, const CMatrix& u) {
  Ensemble out = e;
  for (auto& s : out.states) s = hermitian_part(u * s * u.adjoint());
  return out;
}

inline Ensemble permute(const Ensemble& e, const std::vector<std::size_t>& order) {
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k)
    if (sorted[k] != k || sorted.size() != e.size())
      throw Error(ErrorKind::BadShape, "permute: order is not a permutation of the letters");
  Ensemble out;
  out.dim = e.dim;
  for (std::size_t i : order) {
    out.labels.push_back(e.labels.at(i));
    out.probs.push_back(e.probs.at(i));
    out.states.push_back(e.states.at(i));
  }
  return out;
}

// ---------------------------------------------------------------------------
// generators

namespace detail {

inline std::vector<double> random_probs(Rng& rng, std::size_t count) {
  std::vector<double> p(count);
  double sum = 0.0;
  for (auto& x : p) {
    x = rng.uniform(0.1, 1.0);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

inline std::vector<std::string> numbered_labels(const std::string& prefix,
                                                std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace detail

/// Haar-random unitary (QR of a complex Ginibre matrix with phase fix).
inline CMatrix random_unitary(std::size_t dim, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dim);
  CMatrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<CMatrix> qr(g);
  CMatrix q = qr.householderQ() * CMatrix::Identity(d, d);
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

inline CMatrix random_density(std::size_t dim, std::size_t rank, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(dim);
  const auto r = static_cast<Eigen::Index>(std::max<std::size_t>(1, std::min(rank, dim)));
  CMatrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = rng.complex_normal();
  CMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return hermitian_part(rho);
}

inline Ensemble random_pure(std::size_t dim, std::size_t count, std::uint64_t seed) {
  if (dim == 0 || count == 0) throw Error(ErrorKind::BadShape, "random_pure needs dim, count >= 1");
  Rng rng(seed);
  Ensemble e;
  e.dim = dim;
  e.labels = detail::numbered_labels("r", count);
  e.probs = detail::random_probs(rng, count);
  for (std::size_t i = 0; i < count; ++i) e.states.push_back(random_density(dim, 1, rng));
  return e;
}

inline Ensemble random_mixed(std::size_t dim, std::size_t count, std::size_t rank,
                             std::uint64_t seed) {
  if (dim == 0 || count == 0 || rank == 0)
    throw Error(ErrorKind::BadShape, "random_mixed needs dim, count, rank >= 1");
  Rng rng(seed);
  Ensemble e;
  e.dim = dim;
  e.labels = detail::numbered_labels("r", count);
  e.probs = detail::random_probs(rng, count);
  for (std::size_t i = 0; i < count; ++i) e.states.push_back(random_density(dim, rank, rng));
  return e;
}

/// Commuting diagonal states, one per row; rows are normalized to trace 1.
/// Uniform probabilities unless given.
inline Ensemble classical(const std::vector<std::vector<double>>& rows,
                          std::vector<double> probs = {}) {
  if (rows.empty() || rows.front().empty())
    throw Error(ErrorKind::BadShape, "classical: no rows");
  const std::size_t dim = rows.front().size();
  Ensemble e;
  e.dim = dim;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != dim)
      throw Error(ErrorKind::BadShape, "classical: row " + std::to_string(i) + " has length " +
                                           std::to_string(row.size()));
    double sum = 0.0;
    for (double x : row) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw Error(ErrorKind::BadShape, "classical: negative entry in row " + std::to_string(i));
      sum += x;
    }
    if (sum <= 0.0) throw Error(ErrorKind::BadShape, "classical: zero row " + std::to_string(i));
    CMatrix s = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < dim; ++k)
      s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = row[k] / sum;
    e.states.push_back(s);
  }
  if (probs.empty()) probs.assign(rows.size(), 1.0 / static_cast<double>(rows.size()));
  if (probs.size() != rows.size())
    throw Error(ErrorKind::BadShape, "classical: probs length differs from row count");
  e.probs = std::move(probs);
  e.labels = detail::numbered_labels("c", rows.size());
  return e;
}

// ---------------------------------------------------------------------------
// named fixtures E1..E7

inline const std::vector<std::string>& fixture_names() {
  static const std::vector<std::string> names{"E1", "E2", "E3", "E4", "E5", "E6", "E7"};
  return names;
}

inline Ensemble fixture(const std::string& name) {
  const CMatrix ket0 = diag({1.0, 0.0});
  const CMatrix ket1 = diag({0.0, 1.0});
  CMatrix plus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;

  if (name == "E1") return {2, {"0"}, {1.0}, {ket0}};
  if (name == "E2") return {2, {"0", "1"}, {0.5, 0.5}, {ket0, ket1}};
  if (name == "E3") return {2, {"0", "+"}, {0.5, 0.5}, {ket0, plus}};
  if (name == "E4") return {2, {"m"}, {1.0}, {diag({0.7, 0.3})}};
  if (name == "E5") {
    Ensemble e = classical({{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}});
    e.labels = {"a", "b"};
    return e;
  }
  if (name == "E6") return attach_redundancy(fixture("E3"), diag({0.7, 0.3}));
  if (name == "E7") return {2, {"m", "+"}, {0.5, 0.5}, {diag({0.75, 0.25}), plus}};
  throw Error(ErrorKind::BadShape, "unknown fixture '" + name + "'");
}

}  // namespace vlfq
