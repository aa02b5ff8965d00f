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

// Information quantities (bits) computed from a block decomposition.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "vlfq/ensemble.hpp"
#include "vlfq/error.hpp"
#include "vlfq/kidecomp.hpp"
#include "vlfq/matcore.hpp"

namespace vlfq {

inline constexpr double kClampTol = 1e-9;
inline constexpr double kPureEntropyTol = 1e-7;

enum class Classification { ClassicalPure, ClassicalMixed, QuantumPure, QuantumMixed };

constexpr std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::ClassicalPure: return "classical-pure";
    case Classification::ClassicalMixed: return "classical-mixed";
    case Classification::QuantumPure: return "quantum-pure";
    case Classification::QuantumMixed: return "quantum-mixed";
  }
  return "unknown";
}

/// Relation between the three optimal rates in each cell of the
/// classical/quantum x pure/mixed table.
constexpr std::string_view rate_relation(Classification c) {
  switch (c) {
    case Classification::ClassicalPure: return "R_vlf = R_flaf = I_eff";
    case Classification::ClassicalMixed: return "R_vlf = R_flaf >= I_eff";
    case Classification::QuantumPure: return "R_vlf >= R_flaf = I_eff";
    case Classification::QuantumMixed: return "R_vlf >= R_flaf >= I_eff";
  }
  return "";
}

struct RateReport {
  double i_c = 0.0;
  double d_nc = 0.0;
  double i_nc = 0.0;
  double i_lh = 0.0;
  double r_vlf_opt = 0.0;
  double r_flaf_opt = 0.0;
  double gap_f_af = 0.0;
  double defect_upper = 0.0;
  Classification classification = Classification::ClassicalPure;

  // The visible-scenario rate is only known to lie in this interval.
  double i_eff_lower() const { return i_lh; }
  double i_eff_upper() const { return r_flaf_opt; }
};

namespace detail {

/// Maps [-kClampTol, 0) to 0; anything more negative is a bug.
inline double clamp_nonnegative(double x, std::string_view what) {
  if (x >= 0.0) return x;
  if (x >= -kClampTol) return 0.0;
  throw Error(ErrorKind::InternalConsistency,
              std::string(what) + " is negative: " + std::to_string(x));
}

}  // namespace detail

inline double i_c(const KIDecomposition& d) {
  std::vector<double> p;
  for (const auto& b : d.blocks) p.push_back(b.p_l);
  return shannon_entropy(p);
}

inline double d_nc(const KIDecomposition& d) {
  double s = 0.0;
  for (const auto& b : d.blocks) s += b.p_l * std::log2(static_cast<double>(b.dim_j));
  return s;
}

inline double i_nc(const KIDecomposition& d) {
  double s = 0.0;
  for (const auto& b : d.blocks) s += b.p_l * vn_entropy(b.rho_j_avg);
  return s;
}

inline double levitin_holevo(const Ensemble& e) {
  const double s_avg = vn_entropy(average_state(e));
  double s_letters = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) s_letters += e.probs[i] * vn_entropy(e.states[i]);
  return detail::clamp_nonnegative(s_avg - s_letters, "Levitin-Holevo quantity");
}

/// Letter state with the redundant K factors removed: (+)_l p^(i,l) rho_J^(i,l),
/// on a space of dimension sum_l dim_J.
inline CMatrix reduced_state(const KIDecomposition& d, std::size_t i) {
  std::vector<CMatrix> parts;
  for (const auto& b : d.blocks) {
    const auto n = static_cast<Eigen::Index>(b.dim_j);
    if (i >= b.rho_j_il.size()) throw Error(ErrorKind::DimensionMismatch, "letter index out of range");
    if (b.rho_j_il[i])
      parts.push_back(b.p_il[i] * *b.rho_j_il[i]);
    else
      parts.push_back(CMatrix::Zero(n, n));
  }
  return direct_sum(parts);
}

inline Ensemble reduced_ensemble(const KIDecomposition& d, const Ensemble& e) {
  Ensemble out;
  out.labels = e.labels;
  out.probs = e.probs;
  for (std::size_t i = 0; i < e.size(); ++i) {
    CMatrix r = reduced_state(d, i);
    r /= r.trace().real();
    out.states.push_back(hermitian_part(r));
  }
  out.dim = static_cast<std::size_t>(out.states.front().rows());
  return out;
}

/// Upper bound on the information defect. Computed as
/// sum_i p_i S(rho_i^R) and cross-checked against
/// sum_i p_i S(rho_i) - sum_l p_l S(rho_K^(l)).
inline double defect_upper_bound(const Ensemble& e, const KIDecomposition& d) {
  double via_reduced = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    CMatrix r = reduced_state(d, i);
    via_reduced += e.probs[i] * vn_entropy(hermitian_part(r / r.trace().real()));
  }
  double via_k = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) via_k += e.probs[i] * vn_entropy(e.states[i]);
  for (const auto& b : d.blocks) via_k -= b.p_l * vn_entropy(b.rho_k);
  if (std::abs(via_reduced - via_k) > 1e-7)
    throw Error(ErrorKind::InconsistentBound, "sum p_i S(rho_i^R) = " + std::to_string(via_reduced) +
                                                  " but entropy difference = " + std::to_string(via_k));
  return detail::clamp_nonnegative(via_reduced, "defect bound");
}

inline bool is_commuting(const Ensemble& e, double tol = 1e-8) {
  return max_commutator(e) <= tol;
}

inline bool is_pure(const Ensemble& e, const KIDecomposition& d) {
  for (std::size_t i = 0; i < e.size(); ++i) {
    CMatrix r = reduced_state(d, i);
    if (vn_entropy(hermitian_part(r / r.trace().real())) > kPureEntropyTol) return false;
  }
  return true;
}

inline Classification classify(const Ensemble& e, const KIDecomposition& d) {
  const bool classical = is_commuting(e);
  const bool pure = is_pure(e, d);
  if (classical) return pure ? Classification::ClassicalPure : Classification::ClassicalMixed;
  return pure ? Classification::QuantumPure : Classification::QuantumMixed;
}

/// Orthogonal ensemble with letters (l, j): probability p_l / dim_J and state
/// |a_j><a_j| (x) rho_K^(l), where |a_j> is the canonical J basis.
inline Ensemble shadow_ensemble(const KIDecomposition& d) {
  Ensemble out;
  out.dim = d.dim;
  for (std::size_t l = 0; l < d.blocks.size(); ++l) {
    const auto& b = d.blocks[l];
    for (std::size_t j = 0; j < b.dim_j; ++j) {
      CMatrix a = CMatrix::Zero(static_cast<Eigen::Index>(b.dim_j), static_cast<Eigen::Index>(b.dim_j));
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) = 1.0;
      out.labels.push_back("l" + std::to_string(l) + "j" + std::to_string(j));
      out.probs.push_back(b.p_l / static_cast<double>(b.dim_j));
      out.states.push_back(hermitian_part(b.embed(a, b.rho_k)));
    }
  }
  return out;
}

/// All quantities for an already-decomposed ensemble.
inline RateReport make_report(const Ensemble& e, const KIDecomposition& d) {
  RateReport r;
  r.i_c = i_c(d);
  r.d_nc = d_nc(d);
  r.i_nc = detail::clamp_nonnegative(i_nc(d), "I_NC");
  r.i_lh = levitin_holevo(e);
  r.r_vlf_opt = r.i_c + r.d_nc;
  r.r_flaf_opt = r.i_c + r.i_nc;
  r.gap_f_af = detail::clamp_nonnegative(r.d_nc - r.i_nc, "VLF/FLAF gap");
  r.defect_upper = defect_upper_bound(e, d);
  r.classification = classify(e, d);
  if (r.r_flaf_opt < r.i_lh - 1e-7)
    throw Error(ErrorKind::InternalConsistency,
                "FLAF rate " + std::to_string(r.r_flaf_opt) + " below Holevo quantity " +
                    std::to_string(r.i_lh));
  return r;
}

inline RateReport full_report(const Ensemble& e, const DecompositionConfig& cfg = {}) {
  return make_report(e, ki_decompose(e, cfg));
}

}  // namespace vlfq
