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

// Block decomposition of the support of the average state,
//
//   H = (+)_l  H_J^(l) (x) H_K^(l),
//   rho_i = (+)_l  p^(i,l) rho_J^(i,l) (x) rho_K^(l),
//
// with rho_K^(l) independent of the letter and {rho_J^(i,l)}_i irreducible.
//
// The structure is found numerically. Restricted to the support, the states
// are conjugated by rhobar^{-1/2}; these operators, closed under the modular
// flow X -> rhobar^{it} X rhobar^{-it}, generate a *-algebra A whose
// Wedderburn blocks (+)_l M(dim_J) (x) 1_K give the decomposition. The
// commutant and center of A are obtained as null spaces, the central
// projectors from a random central element, and the J (x) K factorisation
// of each block from matrix units built out of random algebra elements.
// Every result is checked afterwards (verify) and retried on failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vlfq/ensemble.hpp"
#include "vlfq/error.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/random.hpp"

namespace vlfq {

inline std::vector<double> default_t_samples() {
  return {std::numbers::sqrt2 / 2.0, -std::numbers::sqrt2 / 2.0, std::numbers::sqrt3,
          -std::numbers::sqrt3, std::numbers::pi / 3.0};
}

struct DecompositionConfig {
  double tol_p1 = 1e-7;
  double tol_p2 = 1e-7;
  double rank_tol = 1e-7;
  double presence = 1e-10;
  double span_tol = 1e-8;
  double group_tol = 1e-8;     // relative to the spectral range
  double commuting_tol = 1e-8;
  double ratio_tol = 1e-7;
  std::vector<double> t_samples = default_t_samples();
  int max_retries = 4;
  int sample_retries = 8;      // fresh random draws inside wedderburn
  std::uint64_t seed = 1;
};

struct AlgebraBasis {
  std::size_t dim = 0;
  std::vector<CMatrix> basis;  // Hermitian, Hilbert-Schmidt orthonormal
};

struct WedderburnBlock {
  CMatrix central_projector;
  CMatrix isometry;  // columns indexed (j, k) -> j * dim_k + k
  std::size_t dim_j = 0;
  std::size_t dim_k = 0;
};

struct KIBlock {
  std::size_t dim_j = 0;
  std::size_t dim_k = 0;
  CMatrix isometry;  // ambient dim x (dim_j * dim_k)
  double p_l = 0.0;
  std::vector<double> p_il;
  std::vector<std::optional<CMatrix>> rho_j_il;  // nullopt: letter absent from block
  CMatrix rho_j_avg;
  CMatrix rho_k;

  /// isometry * (x (x) y) * isometry^dagger
  CMatrix embed(const CMatrix& j_part, const CMatrix& k_part) const {
    return isometry * tensor(j_part, k_part) * isometry.adjoint();
  }
};

struct VerificationReport {
  double p1_residual = 0.0;
  double p2_residual = 0.0;
  std::vector<std::size_t> p3_commutant_dims;
  double isometry_residual = 0.0;
  bool p1_ok = false;
  bool p2_ok = false;
  bool p3_ok = false;
  bool isometry_ok = false;

  bool passed() const { return p1_ok && p2_ok && p3_ok && isometry_ok; }

  std::string summary() const {
    std::ostringstream os;
    os << "P1 reconstruction residual " << p1_residual << (p1_ok ? " ok" : " FAIL") << "\n"
       << "P2 product-form residual " << p2_residual << (p2_ok ? " ok" : " FAIL") << "\n"
       << "P3 commutant dims [";
    for (std::size_t k = 0; k < p3_commutant_dims.size(); ++k)
      os << (k ? "," : "") << p3_commutant_dims[k];
    os << "]" << (p3_ok ? " ok" : " FAIL") << "\n"
       << "isometry residual " << isometry_residual << (isometry_ok ? " ok" : " FAIL") << "\n";
    return os.str();
  }
};

struct KIDecomposition {
  std::size_t dim = 0;
  CMatrix support_isometry;
  std::vector<KIBlock> blocks;
  VerificationReport report;

  std::size_t support_dim() const { return static_cast<std::size_t>(support_isometry.cols()); }
  std::size_t letters() const { return blocks.empty() ? 0 : blocks.front().p_il.size(); }
};

class DecompositionFailure : public Error {
 public:
  DecompositionFailure(const std::string& what, std::optional<VerificationReport> report)
      : Error(ErrorKind::DecompositionFailed, what), report_(std::move(report)) {}

  const std::optional<VerificationReport>& report() const { return report_; }

 private:
  std::optional<VerificationReport> report_;
};

// ---------------------------------------------------------------------------
// support restriction

struct RestrictedEnsemble {
  Ensemble ensemble;  // states live on the support of the average state
  CMatrix isometry;   // ambient dim x support dim
};

inline RestrictedEnsemble support_restrict(const Ensemble& e) {
  const CMatrix avg = average_state(e);
  const HermEigen eig = herm_eig(avg);
  const auto rank = static_cast<Eigen::Index>(support_rank(eig.values));
  RestrictedEnsemble out;
  out.isometry = eig.vectors.leftCols(rank);
  for (Eigen::Index k = 0; k < rank; ++k) fix_phase(out.isometry.col(k));
  out.ensemble.dim = static_cast<std::size_t>(rank);
  out.ensemble.labels = e.labels;
  out.ensemble.probs = e.probs;
  for (const auto& s : e.states) {
    CMatrix r = hermitian_part(out.isometry.adjoint() * s * out.isometry);
    const double tr = r.trace().real();
    if (std::abs(tr - 1.0) > kDensityTol)
      throw Error(ErrorKind::InvalidEnsemble,
                  "state loses trace " + std::to_string(1.0 - tr) + " outside the support");
    r /= tr;
    out.ensemble.states.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// algebra generation

namespace detail {

/// Real coordinates of a Hermitian matrix in which the Hilbert-Schmidt
/// inner product becomes the Euclidean dot product.
inline RVector pack_hermitian(const CMatrix& h) {
  const Eigen::Index d = h.rows();
  RVector v(d * d);
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < d; ++i) {
    v(i * d + i) = h(i, i).real();
    for (Eigen::Index j = i + 1; j < d; ++j) {
      v(i * d + j) = r2 * h(i, j).real();
      v(j * d + i) = r2 * h(i, j).imag();
    }
  }
  return v;
}

inline CMatrix unpack_hermitian(const RVector& v, Eigen::Index d) {
  CMatrix h(d, d);
  const double r2 = std::numbers::sqrt2;
  for (Eigen::Index i = 0; i < d; ++i) {
    h(i, i) = v(i * d + i);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      h(i, j) = cplx(v(i * d + j), v(j * d + i)) / r2;
      h(j, i) = std::conj(h(i, j));
    }
  }
  return h;
}

/// Real span of Hermitian matrices kept Hilbert-Schmidt orthonormal.
class HermitianSpan {
 public:
  HermitianSpan(std::size_t dim, double tol)
      : dim_(dim), tol_(tol), packed_(static_cast<Eigen::Index>(dim * dim), 0) {}

  /// Adds the component of h orthogonal to the span; returns true if new.
  bool add(const CMatrix& h) {
    RVector v = pack_hermitian(h);
    const Eigen::Index n = static_cast<Eigen::Index>(basis_.size());
    const auto cols = packed_.leftCols(n);
    for (int pass = 0; pass < 2; ++pass) {
      v.noalias() -= cols * (cols.transpose() * v);
      if (v.norm() <= tol_) return false;
    }
    if (basis_.size() == dim_ * dim_)
      throw Error(ErrorKind::ClosureDiverged,
                  "span dimension exceeds " + std::to_string(dim_ * dim_));
    v /= v.norm();
    if (packed_.cols() == n)
      packed_.conservativeResize(Eigen::NoChange, std::max<Eigen::Index>(8, 2 * n));
    packed_.col(n) = v;
    basis_.push_back(unpack_hermitian(v, static_cast<Eigen::Index>(dim_)));
    return true;
  }

  /// Adds the Hermitian and anti-Hermitian parts of x.
  void add_parts(const CMatrix& x) {
    add((x + x.adjoint()) * 0.5);
    add((x - x.adjoint()) * cplx(0.0, -0.5));
  }

  const std::vector<CMatrix>& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  const CMatrix& operator[](std::size_t k) const { return basis_[k]; }

 private:
  std::size_t dim_;
  double tol_;
  Eigen::MatrixXd packed_;
  std::vector<CMatrix> basis_;
};

inline CMatrix random_hermitian_element(const std::vector<CMatrix>& basis, Rng& rng) {
  CMatrix h = CMatrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) h += rng.normal() * b;
  return hermitian_part(h);
}

inline CMatrix random_element(const std::vector<CMatrix>& basis, Rng& rng) {
  CMatrix g = CMatrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) g += rng.complex_normal() * b;
  return g;
}

inline double grouping_tol(const RVector& values, double rel) {
  if (values.size() == 0) return 0.0;
  const double range = values(0) - values(values.size() - 1);
  const double scale = std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
  return rel * std::max(range, scale);
}

inline Eigen::Map<const CVector> as_vector(const CMatrix& m) {
  return {m.data(), m.size()};
}

}  // namespace detail

/// Largest residual, over all adjoints and pairwise products of basis
/// elements, of the projection onto the span of the basis.
inline double closure_residual(const AlgebraBasis& a) {
  auto residual = [&](const CMatrix& x) {
    CMatrix r = x;
    for (const auto& b : a.basis) r -= hs_inner(b, r) * b;
    return r.norm();
  };
  double worst = 0.0;
  for (const auto& b : a.basis) {
    worst = std::max(worst, residual(b.adjoint()));
    for (const auto& c : a.basis) worst = std::max(worst, residual(b * c));
  }
  return worst;
}

inline AlgebraBasis generate_algebra(const Ensemble& restricted,
                                     const std::vector<double>& t_samples,
                                     double span_tol = 1e-8) {
  const std::size_t d = restricted.dim;
  CMatrix avg = CMatrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < restricted.size(); ++i)
    avg += restricted.probs[i] * restricted.states[i];
  avg = hermitian_part(avg);
  const CMatrix inv_sqrt = mat_power(avg, -0.5);

  // The flow is applied in both directions so that closure under right
  // multiplication by the generators and under the sampled flows implies
  // closure under multiplication by every flowed generator.
  std::vector<CMatrix> flows;
  for (double t : t_samples) {
    flows.push_back(mat_power_it(avg, t));
    flows.push_back(flows.back().adjoint());
  }

  detail::HermitianSpan gens(d, span_tol);
  for (const auto& s : restricted.states) {
    CMatrix g = hermitian_part(inv_sqrt * s * inv_sqrt);
    const double n = g.norm();
    if (n > 0.0) gens.add(g / n);
  }

  detail::HermitianSpan alg(d, span_tol);
  alg.add(identity(d) / std::sqrt(static_cast<double>(d)));
  for (std::size_t k = 0; k < alg.size(); ++k) {
    const CMatrix x = alg[k];
    for (const auto& g : gens.basis()) alg.add_parts(x * g);
    for (const auto& u : flows) alg.add(hermitian_part(u * x * u.adjoint()));
  }
  return {d, alg.basis()};
}

// ---------------------------------------------------------------------------
// Wedderburn blocks

namespace detail {

/// Commutant of the algebra: matrices commuting with every basis element.
///
/// The search starts inside the commutant of one random Hermitian element
/// (block diagonal in its eigenspaces), which contains the answer. On that
/// subspace the stacked system [X, B_s] = 0 is solved through its normal
/// matrix sum_s M_s^dagger M_s, assembled entrywise: for unit matrices E_pq,
///
///   <[E_pq, B], [E_p'q', B]> = d_pp' (B^2)_q'q + (B^2)_pp' d_qq'
///                              - 2 B_pp' B_q'q        (B Hermitian).
///
/// Over an orthonormal basis of the algebra this quadratic form does not
/// depend on the basis and has a spectral gap of order 1/dim_K, so its null
/// eigenvectors are well separated from the rest.
inline std::vector<CMatrix> commutant(const AlgebraBasis& a, Rng& rng, double rank_tol,
                                      double group_tol) {
  const auto d = static_cast<Eigen::Index>(a.dim);
  const CMatrix h1 = random_hermitian_element(a.basis, rng);
  const HermEigen eig = herm_eig(h1);
  const auto groups = group_sorted(eig.values, grouping_tol(eig.values, group_tol));
  const CMatrix& u = eig.vectors;

  std::vector<std::pair<Eigen::Index, Eigen::Index>> units;  // (p, q), rotated frame
  for (const auto& [lo, hi] : groups)
    for (Eigen::Index p = lo; p < hi; ++p)
      for (Eigen::Index q = lo; q < hi; ++q) units.emplace_back(p, q);
  const auto n = static_cast<Eigen::Index>(units.size());

  CMatrix gram = CMatrix::Zero(n, n);
  for (const auto& b : a.basis) {
    const CMatrix bt = hermitian_part(u.adjoint() * b * u);
    const CMatrix b2 = bt * bt;
    for (Eigen::Index x = 0; x < n; ++x) {
      const auto [p, q] = units[static_cast<std::size_t>(x)];
      for (Eigen::Index y = 0; y < n; ++y) {
        const auto [pp, qq] = units[static_cast<std::size_t>(y)];
        cplx v = -2.0 * bt(p, pp) * bt(qq, q);
        if (p == pp) v += b2(qq, q);
        if (q == qq) v += b2(p, pp);
        gram(x, y) += v;
      }
    }
  }
  const HermEigen geig = herm_eig(hermitian_part(gram));
  const double cut = rank_tol * std::max(1.0, geig.values(0));

  std::vector<CMatrix> out;
  for (Eigen::Index c = n - 1; c >= 0 && geig.values(c) <= cut; --c) {
    CMatrix y = CMatrix::Zero(d, d);
    for (Eigen::Index x = 0; x < n; ++x) {
      const auto [p, q] = units[static_cast<std::size_t>(x)];
      y(p, q) = geig.vectors(x, c);
    }
    out.push_back(u * y * u.adjoint());
  }
  return out;
}

/// Center: elements of the commutant that also lie in the algebra.
inline std::vector<CMatrix> center(const AlgebraBasis& a, const std::vector<CMatrix>& comm,
                                   double rank_tol) {
  const auto d = static_cast<Eigen::Index>(a.dim);
  CMatrix m(d * d, static_cast<Eigen::Index>(comm.size()));
  for (std::size_t z = 0; z < comm.size(); ++z) {
    CMatrix r = comm[z];
    for (const auto& b : a.basis) r -= hs_inner(b, r) * b;
    m.col(static_cast<Eigen::Index>(z)) = as_vector(r);
  }
  const CMatrix null = null_space(m, rank_tol);
  std::vector<CMatrix> out;
  for (Eigen::Index c = 0; c < null.cols(); ++c) {
    CMatrix x = CMatrix::Zero(d, d);
    for (std::size_t z = 0; z < comm.size(); ++z) x += null(static_cast<Eigen::Index>(z), c) * comm[z];
    out.push_back(std::move(x));
  }
  return out;
}

inline std::size_t restricted_rank(const AlgebraBasis& a, const CMatrix& q, double rank_tol) {
  const Eigen::Index n = q.cols();
  CMatrix m(n * n, static_cast<Eigen::Index>(a.basis.size()));
  for (std::size_t s = 0; s < a.basis.size(); ++s) {
    const CMatrix r = q.adjoint() * a.basis[s] * q;
    m.col(static_cast<Eigen::Index>(s)) = as_vector(r);
  }
  return static_cast<std::size_t>(m.cols() - null_space(m, rank_tol).cols());
}

inline std::optional<std::vector<WedderburnBlock>> wedderburn_attempt(const AlgebraBasis& a,
                                                                      Rng& rng,
                                                                      const DecompositionConfig& cfg) {
  const auto comm = commutant(a, rng, cfg.rank_tol, cfg.group_tol);
  const auto cent = center(a, comm, cfg.rank_tol);
  if (cent.empty()) return std::nullopt;

  const CMatrix zc = hermitian_part(random_element(cent, rng));
  const HermEigen zeig = herm_eig(zc);
  const auto zgroups = group_sorted(zeig.values, grouping_tol(zeig.values, cfg.group_tol));
  if (zgroups.size() != cent.size()) return std::nullopt;

  std::vector<WedderburnBlock> blocks;
  for (const auto& [lo, hi] : zgroups) {
    const CMatrix q = zeig.vectors.middleCols(lo, hi - lo);
    const auto n = static_cast<std::size_t>(hi - lo);
    const std::size_t rank = restricted_rank(a, q, cfg.rank_tol);
    const auto dim_j = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rank))));
    if (dim_j == 0 || dim_j * dim_j != rank || n % dim_j != 0) return std::nullopt;
    const std::size_t dim_k = n / dim_j;

    const CMatrix hl = q.adjoint() * random_hermitian_element(a.basis, rng) * q;
    const HermEigen heig = herm_eig(hermitian_part(hl));
    const auto fibers = group_sorted(heig.values, grouping_tol(heig.values, cfg.group_tol));
    if (fibers.size() != dim_j) return std::nullopt;
    for (const auto& [flo, fhi] : fibers)
      if (static_cast<std::size_t>(fhi - flo) != dim_k) return std::nullopt;

    // Matrix units: align every fiber to the first through a generic element.
    const CMatrix g = q.adjoint() * random_element(a.basis, rng) * q;
    const auto dk = static_cast<Eigen::Index>(dim_k);
    CMatrix w(q.cols(), static_cast<Eigen::Index>(n));
    const CMatrix v1 = heig.vectors.middleCols(fibers[0].first, dk);
    w.leftCols(dk) = v1;
    for (std::size_t j = 1; j < dim_j; ++j) {
      const CMatrix vj = heig.vectors.middleCols(fibers[j].first, dk);
      const CMatrix mj = vj.adjoint() * g * v1;
      Eigen::JacobiSVD<CMatrix> svd(mj);
      const RVector& sv = svd.singularValues();
      const double top = sv(0);
      if (!(top > 1e-6 * g.norm()) || (top - sv(sv.size() - 1)) > 1e-6 * top) return std::nullopt;
      w.middleCols(static_cast<Eigen::Index>(j) * dk, dk) = vj * polar_unitary(mj);
    }
    const CMatrix iso = q * w;

    // Every algebra element must act as x (x) 1_K on the block.
    const CMatrix t = iso.adjoint() * random_element(a.basis, rng) * iso;
    const CMatrix x = partial_trace(t, dim_j, dim_k, Keep::First) / static_cast<double>(dim_k);
    if (max_norm(t - tensor(x, identity(dim_k))) > 1e-7 * std::max(1.0, max_norm(t)))
      return std::nullopt;

    blocks.push_back({q * q.adjoint(), iso, dim_j, dim_k});
  }
  return blocks;
}

}  // namespace detail

inline std::vector<WedderburnBlock> wedderburn(const AlgebraBasis& a, std::uint64_t seed,
                                               const DecompositionConfig& cfg = {}) {
  if (a.basis.empty()) throw Error(ErrorKind::DegenerateSample, "empty algebra basis");
  for (int attempt = 0; attempt <= cfg.sample_retries; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    if (auto blocks = detail::wedderburn_attempt(a, rng, cfg)) return *blocks;
  }
  throw Error(ErrorKind::DegenerateSample,
              "eigenvalue grouping stayed ambiguous after " +
                  std::to_string(cfg.sample_retries + 1) + " draws");
}

// ---------------------------------------------------------------------------
// block data

namespace detail {

inline CMatrix canonical_eigenbasis(const CMatrix& rho) {
  HermEigen eig = herm_eig(hermitian_part(rho));
  for (Eigen::Index k = 0; k < eig.vectors.cols(); ++k) fix_phase(eig.vectors.col(k));
  return eig.vectors;
}

/// Rotates J and K factors to the eigenbases of rho_J^(l) and rho_K^(l),
/// fixes the global phase of each isometry and sorts the blocks.
inline void canonicalize(std::vector<KIBlock>& blocks) {
  for (auto& b : blocks) {
    const CMatrix rj = canonical_eigenbasis(b.rho_j_avg);
    const CMatrix rk = canonical_eigenbasis(b.rho_k);
    b.isometry = b.isometry * tensor(rj, rk);
    b.rho_j_avg = hermitian_part(rj.adjoint() * b.rho_j_avg * rj);
    b.rho_k = hermitian_part(rk.adjoint() * b.rho_k * rk);
    for (auto& r : b.rho_j_il)
      if (r) *r = hermitian_part(rj.adjoint() * *r * rj);

    Eigen::Index bi = 0, bj = 0;
    double mag = -1.0;
    for (Eigen::Index j = 0; j < b.isometry.cols(); ++j)
      for (Eigen::Index i = 0; i < b.isometry.rows(); ++i)
        if (std::abs(b.isometry(i, j)) > mag * (1.0 + 1e-9) + 1e-12) {
          mag = std::abs(b.isometry(i, j));
          bi = i;
          bj = j;
        }
    if (mag > 0.0) b.isometry *= std::conj(b.isometry(bi, bj)) / mag;
  }

  struct Key {
    long long p;
    std::size_t dim_j;
    std::vector<long long> proj;
  };
  auto key_of = [](const KIBlock& b) {
    Key k{std::llround(b.p_l * 1e9), b.dim_j, {}};
    const CMatrix proj = b.isometry * b.isometry.adjoint();
    for (Eigen::Index i = 0; i < proj.rows(); ++i)
      for (Eigen::Index j = 0; j < proj.cols(); ++j) {
        k.proj.push_back(std::llround(proj(i, j).real() * 1e6));
        k.proj.push_back(std::llround(proj(i, j).imag() * 1e6));
      }
    return k;
  };
  std::vector<std::pair<Key, KIBlock>> keyed;
  for (auto& b : blocks) keyed.emplace_back(key_of(b), std::move(b));
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& x, const auto& y) {
    if (x.first.p != y.first.p) return x.first.p > y.first.p;
    if (x.first.dim_j != y.first.dim_j) return x.first.dim_j < y.first.dim_j;
    return x.first.proj > y.first.proj;
  });
  blocks.clear();
  for (auto& [k, b] : keyed) blocks.push_back(std::move(b));
}

}  // namespace detail

/// Per-block probabilities and factor states. With enforce_product set, a
/// letter whose block restriction is not rho_J (x) rho_K raises
/// NonProductResidual.
inline KIDecomposition extract_block_data(const RestrictedEnsemble& r,
                                          const std::vector<WedderburnBlock>& wblocks,
                                          const DecompositionConfig& cfg = {},
                                          bool enforce_product = true) {
  const Ensemble& e = r.ensemble;
  const auto d = static_cast<Eigen::Index>(e.dim);
  CMatrix avg = CMatrix::Zero(d, d);
  for (std::size_t i = 0; i < e.size(); ++i) avg += e.probs[i] * e.states[i];

  KIDecomposition out;
  out.dim = static_cast<std::size_t>(r.isometry.rows());
  out.support_isometry = r.isometry;
  for (const auto& wb : wblocks) {
    if (wb.isometry.rows() != d)
      throw Error(ErrorKind::DimensionMismatch, "block isometry does not match the support");
    KIBlock b;
    b.dim_j = wb.dim_j;
    b.dim_k = wb.dim_k;
    const CMatrix& w = wb.isometry;
    for (std::size_t i = 0; i < e.size(); ++i)
      b.p_il.push_back(std::max(0.0, (w.adjoint() * e.states[i] * w).trace().real()));
    for (std::size_t i = 0; i < e.size(); ++i) b.p_l += e.probs[i] * b.p_il[i];

    const CMatrix avg_block = hermitian_part(w.adjoint() * avg * w) / b.p_l;
    b.rho_k = partial_trace(avg_block, b.dim_j, b.dim_k, Keep::Second);
    b.rho_j_avg = CMatrix::Zero(static_cast<Eigen::Index>(b.dim_j), static_cast<Eigen::Index>(b.dim_j));
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (b.p_il[i] <= cfg.presence) {
        b.rho_j_il.emplace_back(std::nullopt);
        continue;
      }
      const CMatrix restricted = hermitian_part(w.adjoint() * e.states[i] * w) / b.p_il[i];
      CMatrix rho_j = partial_trace(restricted, b.dim_j, b.dim_k, Keep::First);
      if (enforce_product) {
        const double res = trace_distance(restricted, tensor(rho_j, b.rho_k));
        if (res > cfg.tol_p2)
          throw Error(ErrorKind::NonProductResidual,
                      "letter " + std::to_string(i) + " residual " + std::to_string(res));
      }
      b.rho_j_avg += e.probs[i] * b.p_il[i] * rho_j;
      b.rho_j_il.emplace_back(std::move(rho_j));
    }
    b.rho_j_avg = hermitian_part(b.rho_j_avg / b.p_l);
    b.isometry = r.isometry * w;
    out.blocks.push_back(std::move(b));
  }
  detail::canonicalize(out.blocks);
  return out;
}

// ---------------------------------------------------------------------------
// verification

/// Dimension of the commutant of a set of square matrices of equal size.
inline std::size_t commutant_dimension(const std::vector<CMatrix>& ops, double rank_tol) {
  if (ops.empty()) return 0;
  const Eigen::Index n = ops.front().rows();
  CMatrix m(static_cast<Eigen::Index>(ops.size()) * n * n, n * n);
  for (Eigen::Index p = 0; p < n; ++p)
    for (Eigen::Index q = 0; q < n; ++q) {
      CMatrix unit = CMatrix::Zero(n, n);
      unit(p, q) = 1.0;
      for (std::size_t s = 0; s < ops.size(); ++s) {
        const CMatrix c = commutator(unit, ops[s]);
        m.block(static_cast<Eigen::Index>(s) * n * n, p * n + q, n * n, 1) = detail::as_vector(c);
      }
    }
  return static_cast<std::size_t>(null_space(m, rank_tol).cols());
}

inline VerificationReport verify(const KIDecomposition& dec, const Ensemble& e,
                                 const DecompositionConfig& cfg = {}) {
  VerificationReport rep;
  const auto d = static_cast<Eigen::Index>(e.dim);

  // isometries orthonormal and mutually orthogonal
  Eigen::Index cols = 0;
  for (const auto& b : dec.blocks) cols += b.isometry.cols();
  CMatrix all(d, cols);
  Eigen::Index at = 0;
  for (const auto& b : dec.blocks) {
    if (b.isometry.rows() != d) throw Error(ErrorKind::DimensionMismatch, "isometry rows != dim");
    all.middleCols(at, b.isometry.cols()) = b.isometry;
    at += b.isometry.cols();
  }
  rep.isometry_residual = max_norm(all.adjoint() * all - CMatrix::Identity(cols, cols));
  rep.isometry_ok = rep.isometry_residual <= 1e-8;

  for (std::size_t i = 0; i < e.size(); ++i) {
    CMatrix recon = CMatrix::Zero(d, d);
    for (const auto& b : dec.blocks) {
      if (i >= b.rho_j_il.size() || !b.rho_j_il[i]) continue;
      recon += b.p_il[i] * b.embed(*b.rho_j_il[i], b.rho_k);
      const CMatrix restricted = hermitian_part(b.isometry.adjoint() * e.states[i] * b.isometry) / b.p_il[i];
      rep.p2_residual = std::max(rep.p2_residual,
                                 trace_distance(restricted, tensor(*b.rho_j_il[i], b.rho_k)));
    }
    rep.p1_residual = std::max(rep.p1_residual, trace_distance(e.states[i], recon));
  }
  rep.p1_ok = rep.p1_residual <= cfg.tol_p1;
  rep.p2_ok = rep.p2_residual <= cfg.tol_p2;

  rep.p3_ok = true;
  for (const auto& b : dec.blocks) {
    std::vector<CMatrix> present;
    for (const auto& r : b.rho_j_il)
      if (r) present.push_back(*r);
    const std::size_t dim = commutant_dimension(present, cfg.rank_tol);
    rep.p3_commutant_dims.push_back(dim);
    if (dim != 1) rep.p3_ok = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// orchestration

inline KIDecomposition ki_decompose(const Ensemble& e, const DecompositionConfig& cfg = {}) {
  require_valid(e);
  const RestrictedEnsemble r = support_restrict(e);
  std::vector<double> ts = cfg.t_samples;
  Rng extra(mix_seed(cfg.seed, 0x7ea1));
  std::optional<VerificationReport> last_report;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    try {
      const AlgebraBasis a = generate_algebra(r.ensemble, ts, cfg.span_tol);
      const auto wblocks = wedderburn(a, mix_seed(cfg.seed, 0x1000 + static_cast<std::uint64_t>(attempt)), cfg);
      KIDecomposition dec = extract_block_data(r, wblocks, cfg, true);
      dec.report = verify(dec, e, cfg);
      if (dec.report.passed()) return dec;
      last_report = dec.report;
      last_error = "verification failed";
    } catch (const Error& err) {
      switch (err.kind()) {
        case ErrorKind::DegenerateSample:
        case ErrorKind::NonProductResidual:
        case ErrorKind::ClosureDiverged:
          last_error = err.what();
          break;
        default:
          throw;
      }
    }
    ts.push_back(extra.uniform(-2.0, 2.0));
    ts.push_back(extra.uniform(-2.0, 2.0));
  }
  throw DecompositionFailure("retries exhausted (" + last_error + ")", last_report);
}

// ---------------------------------------------------------------------------
// commuting-case oracle

inline double max_commutator(const Ensemble& e) {
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const double scale = std::max(1.0, max_norm(e.states[i]) * max_norm(e.states[j]));
      worst = std::max(worst, max_norm(commutator(e.states[i], e.states[j])) / scale);
    }
  return worst;
}

/// Decomposition of a commuting ensemble by simultaneous diagonalisation and
/// grouping of basis vectors with equal likelihood-ratio vectors.
inline KIDecomposition classical_oracle(const Ensemble& e, const DecompositionConfig& cfg = {}) {
  require_valid(e);
  const double comm = max_commutator(e);
  if (comm > cfg.commuting_tol)
    throw Error(ErrorKind::NotCommuting, "max scaled commutator " + std::to_string(comm));
  const CMatrix avg = average_state(e);
  const auto d = static_cast<Eigen::Index>(e.dim);

  // simultaneous eigenbasis: split degenerate eigenspaces letter by letter
  std::vector<CMatrix> spaces;
  {
    const HermEigen eig = herm_eig(avg);
    for (const auto& [lo, hi] : group_sorted(eig.values, 1e-9))
      spaces.push_back(eig.vectors.middleCols(lo, hi - lo));
  }
  for (const auto& s : e.states) {
    std::vector<CMatrix> next;
    for (const auto& sp : spaces) {
      if (sp.cols() == 1) {
        next.push_back(sp);
        continue;
      }
      const HermEigen eig = herm_eig(hermitian_part(sp.adjoint() * s * sp));
      for (const auto& [lo, hi] : group_sorted(eig.values, 1e-9))
        next.push_back(sp * eig.vectors.middleCols(lo, hi - lo));
    }
    spaces = std::move(next);
  }
  CMatrix basis(d, d);
  Eigen::Index at = 0;
  for (const auto& sp : spaces) {
    basis.middleCols(at, sp.cols()) = sp;
    at += sp.cols();
  }

  const double top = herm_eig(avg).values(0);
  struct Group {
    std::vector<double> ratios;
    std::vector<Eigen::Index> members;
  };
  std::vector<Group> groups;
  std::vector<Eigen::Index> support;
  for (Eigen::Index k = 0; k < d; ++k) {
    const CVector v = basis.col(k);
    const double w = (v.adjoint() * avg * v)(0, 0).real();
    if (w <= kSupportCutoff * top) continue;
    support.push_back(k);
    std::vector<double> ratios;
    for (const auto& s : e.states) ratios.push_back((v.adjoint() * s * v)(0, 0).real() / w);
    bool placed = false;
    for (auto& g : groups) {
      bool same = true;
      for (std::size_t i = 0; i < ratios.size() && same; ++i)
        same = std::abs(ratios[i] - g.ratios[i]) <= cfg.ratio_tol * std::max(1.0, std::abs(ratios[i]));
      if (same) {
        g.members.push_back(k);
        placed = true;
        break;
      }
    }
    if (!placed) groups.push_back({ratios, {k}});
  }

  KIDecomposition out;
  out.dim = e.dim;
  out.support_isometry = CMatrix(d, static_cast<Eigen::Index>(support.size()));
  for (std::size_t c = 0; c < support.size(); ++c)
    out.support_isometry.col(static_cast<Eigen::Index>(c)) = basis.col(support[c]);
  for (const auto& g : groups) {
    KIBlock b;
    b.dim_j = 1;
    b.dim_k = g.members.size();
    const auto n = static_cast<Eigen::Index>(g.members.size());
    b.isometry = CMatrix(d, n);
    for (Eigen::Index c = 0; c < n; ++c) b.isometry.col(c) = basis.col(g.members[static_cast<std::size_t>(c)]);
    const CMatrix avg_block = hermitian_part(b.isometry.adjoint() * avg * b.isometry);
    b.p_l = avg_block.trace().real();
    b.rho_k = avg_block / b.p_l;
    b.rho_j_avg = identity(1);
    for (const auto& s : e.states) {
      const double p = std::max(0.0, (b.isometry.adjoint() * s * b.isometry).trace().real());
      b.p_il.push_back(p);
      if (p > cfg.presence)
        b.rho_j_il.emplace_back(identity(1));
      else
        b.rho_j_il.emplace_back(std::nullopt);
    }
    out.blocks.push_back(std::move(b));
  }
  detail::canonicalize(out.blocks);
  out.report = verify(out, e, cfg);
  return out;
}

}  // namespace vlfq
