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

// Dense complex-matrix primitives shared by every other module.
//
// Composite-index convention: for a bipartite space of dimensions
// (d_a, d_b) the basis state |i>|k> has index i * d_b + k, so the first
// factor varies slowest. tensor(), partial_trace() and every block
// isometry in the library use this convention.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vlfq/error.hpp"

namespace vlfq {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kHermiticityTol = 1e-8;
inline constexpr double kSupportCutoff = 1e-10;
inline constexpr double kDensityTol = 1e-8;

struct HermEigen {
  RVector values;   // descending
  CMatrix vectors;  // columns
};

enum class Keep { First, Second };

inline CMatrix identity(std::size_t d) {
  return CMatrix::Identity(static_cast<Eigen::Index>(d),
                           static_cast<Eigen::Index>(d));
}

inline CMatrix diag(std::initializer_list<double> entries) {
  CMatrix m = CMatrix::Zero(static_cast<Eigen::Index>(entries.size()),
                            static_cast<Eigen::Index>(entries.size()));
  Eigen::Index i = 0;
  for (double v : entries) {
    m(i, i) = v;
    ++i;
  }
  return m;
}

inline CMatrix diag(const RVector& entries) {
  return entries.cast<cplx>().asDiagonal();
}

/// |v><v|
inline CMatrix projector(const CVector& v) { return v * v.adjoint(); }

inline double max_norm(const CMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_violation(const CMatrix& m) {
  return max_norm(m - m.adjoint());
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    if (!std::isfinite(m.data()[k].real()) || !std::isfinite(m.data()[k].imag()))
      return false;
  }
  return true;
}

inline CMatrix hermitian_part(const CMatrix& m) {
  return (m + m.adjoint()) * 0.5;
}

/// Hilbert-Schmidt inner product Tr(a^dagger b).
inline cplx hs_inner(const CMatrix& a, const CMatrix& b) {
  return (a.conjugate().cwiseProduct(b)).sum();
}

inline CMatrix commutator(const CMatrix& a, const CMatrix& b) {
  return a * b - b * a;
}

inline HermEigen herm_eig(const CMatrix& m) {
  if (m.rows() != m.cols())
    throw Error(ErrorKind::NotSquare, "matrix is " + std::to_string(m.rows()) +
                                          "x" + std::to_string(m.cols()));
  const double violation = hermiticity_violation(m);
  if (!(violation <= kHermiticityTol))
    throw Error(ErrorKind::NotHermitian,
                "||m - m^dagger||_max = " + std::to_string(violation));
  HermEigen out;
  if (m.rows() == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(m));
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Eigenvalues at or below this value count as zero.
inline double support_cutoff(const RVector& descending_values) {
  if (descending_values.size() == 0) return 0.0;
  return kSupportCutoff * std::max(descending_values(0), 0.0);
}

inline std::size_t support_rank(const RVector& descending_values) {
  const double cut = support_cutoff(descending_values);
  std::size_t r = 0;
  for (Eigen::Index k = 0; k < descending_values.size(); ++k)
    if (descending_values(k) > cut) ++r;
  return r;
}

inline CMatrix tensor(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline CMatrix direct_sum(std::span<const CMatrix> blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    if (b.rows() != b.cols())
      throw Error(ErrorKind::NotSquare, "direct_sum block is not square");
    n += b.rows();
  }
  CMatrix out = CMatrix::Zero(n, n);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += b.rows();
  }
  return out;
}

inline CMatrix direct_sum(std::initializer_list<CMatrix> blocks) {
  return direct_sum(std::span<const CMatrix>(blocks.begin(), blocks.size()));
}

inline CMatrix partial_trace(const CMatrix& m, std::size_t dim_a,
                             std::size_t dim_b, Keep keep) {
  const auto da = static_cast<Eigen::Index>(dim_a);
  const auto db = static_cast<Eigen::Index>(dim_b);
  if (m.rows() != m.cols() || m.rows() != da * db)
    throw Error(ErrorKind::DimensionMismatch,
                "partial_trace: matrix of size " + std::to_string(m.rows()) +
                    " does not match " + std::to_string(dim_a) + "x" +
                    std::to_string(dim_b));
  if (keep == Keep::First) {
    CMatrix out = CMatrix::Zero(da, da);
    for (Eigen::Index i = 0; i < da; ++i)
      for (Eigen::Index j = 0; j < da; ++j)
        out(i, j) = m.block(i * db, j * db, db, db).trace();
    return out;
  }
  CMatrix out = CMatrix::Zero(db, db);
  for (Eigen::Index i = 0; i < da; ++i) out += m.block(i * db, i * db, db, db);
  return out;
}

namespace detail {

inline HermEigen psd_eig(const CMatrix& rho) {
  HermEigen eig = herm_eig(rho);
  const double top = eig.values.size() ? std::max(eig.values(0), 0.0) : 0.0;
  const double floor = -kDensityTol * std::max(1.0, top);
  if (eig.values.size() && eig.values(eig.values.size() - 1) < floor)
    throw Error(ErrorKind::NotPSD,
                "smallest eigenvalue " +
                    std::to_string(eig.values(eig.values.size() - 1)));
  return eig;
}

}  // namespace detail

/// rho^{it} on the support of rho, zero on its kernel.
inline CMatrix mat_power_it(const CMatrix& rho, double t) {
  const HermEigen eig = detail::psd_eig(rho);
  const double cut = support_cutoff(eig.values);
  CVector phases = CVector::Zero(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > cut)
      phases(k) = std::exp(cplx(0.0, t * std::log(eig.values(k))));
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

/// Real power rho^s on the support (negative s gives the pseudo-inverse power).
inline CMatrix mat_power(const CMatrix& rho, double s) {
  const HermEigen eig = detail::psd_eig(rho);
  const double cut = support_cutoff(eig.values);
  RVector w = RVector::Zero(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > cut) w(k) = std::pow(eig.values(k), s);
  return eig.vectors * w.cast<cplx>().asDiagonal() * eig.vectors.adjoint();
}

inline CMatrix support_projector(const CMatrix& rho) {
  return mat_power_it(rho, 0.0);
}

/// Shannon entropy in bits; zero entries contribute nothing.
inline double shannon_entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log2(p);
  return std::max(h, 0.0);
}

inline double vn_entropy(const CMatrix& rho) {
  if (rho.rows() != rho.cols())
    throw Error(ErrorKind::NotDensityMatrix, "not square");
  const double tr_err = std::abs(rho.trace() - cplx(1.0, 0.0));
  if (!(tr_err <= kDensityTol))
    throw Error(ErrorKind::NotDensityMatrix,
                "trace deviates from 1 by " + std::to_string(tr_err));
  HermEigen eig;
  try {
    eig = detail::psd_eig(rho);
  } catch (const Error& e) {
    throw Error(ErrorKind::NotDensityMatrix, e.what());
  }
  const double cut = support_cutoff(eig.values);
  double s = 0.0;
  for (Eigen::Index k = 0; k < eig.values.size(); ++k)
    if (eig.values(k) > cut) s -= eig.values(k) * std::log2(eig.values(k));
  return std::max(s, 0.0);
}

inline double trace_distance(const CMatrix& rho, const CMatrix& sigma) {
  if (rho.rows() != sigma.rows() || rho.cols() != sigma.cols())
    throw Error(ErrorKind::DimensionMismatch,
                "trace_distance: " + std::to_string(rho.rows()) + " vs " +
                    std::to_string(sigma.rows()));
  const CMatrix diff = hermitian_part(rho - sigma);
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(diff, Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

/// Groups consecutive entries of a sorted (descending) list whose
/// neighbouring gaps are at most tol. Returns [begin, end) ranges.
inline std::vector<std::pair<Eigen::Index, Eigen::Index>> group_sorted(
    const RVector& values, double tol) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> groups;
  Eigen::Index start = 0;
  for (Eigen::Index k = 1; k <= values.size(); ++k) {
    if (k == values.size() || values(k - 1) - values(k) > tol) {
      groups.emplace_back(start, k);
      start = k;
    }
  }
  return groups;
}

/// Orthonormal basis (columns) of the right null space of m: right singular
/// vectors whose singular value is at most tol.
inline CMatrix null_space(const CMatrix& m, double tol) {
  if (m.cols() == 0) return CMatrix(0, 0);
  if (m.rows() == 0) return identity(static_cast<std::size_t>(m.cols()));
  Eigen::BDCSVD<CMatrix> svd(m, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > tol) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

/// Unitary factor of the polar decomposition m = U P.
inline CMatrix polar_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

/// Rotates v by a global phase so its largest-magnitude component is real
/// and positive (earliest index wins among near-ties).
inline void fix_phase(Eigen::Ref<CVector> v) {
  Eigen::Index best = 0;
  double mag = -1.0;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double a = std::abs(v(k));
    if (a > mag * (1.0 + 1e-9) + 1e-12) {
      mag = a;
      best = k;
    }
  }
  if (mag > 0.0) v *= std::conj(v(best)) / mag;
}

}  // namespace vlfq
