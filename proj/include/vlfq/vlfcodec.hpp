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

// Variable-length faithful codec: measure the block index, send a prefix
// codeword for it plus the J state packed into qubits, and regenerate the K
// state at the receiver.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "vlfq/ensemble.hpp"
#include "vlfq/error.hpp"
#include "vlfq/kidecomp.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/random.hpp"
#include "vlfq/rates.hpp"

namespace vlfq {

inline constexpr double kKraftTol = 1e-12;
inline constexpr double kLeakageTol = 1e-9;
inline constexpr double kWindowTol = 1e-9;

/// Codeword per block index.
struct PrefixCode {
  std::vector<std::string> codewords;

  std::size_t size() const { return codewords.size(); }

  double kraft_sum() const {
    double s = 0.0;
    for (const auto& c : codewords) s += std::ldexp(1.0, -static_cast<int>(c.size()));
    return s;
  }

  bool is_prefix_free() const {
    for (std::size_t a = 0; a < codewords.size(); ++a)
      for (std::size_t b = 0; b < codewords.size(); ++b) {
        if (a == b) continue;
        const auto& x = codewords[a];
        const auto& y = codewords[b];
        if (x.size() <= y.size() && y.compare(0, x.size(), x) == 0) return false;
      }
    return true;
  }

  /// Reads one codeword from the front of `bits`, which must be consumed
  /// exactly.
  std::size_t parse(const std::string& bits) const {
    for (std::size_t len = 0; len <= bits.size(); ++len) {
      const std::string head = bits.substr(0, len);
      for (std::size_t l = 0; l < codewords.size(); ++l) {
        if (codewords[l] != head) continue;
        if (len != bits.size())
          throw Error(ErrorKind::UnparseableCodeword,
                      "trailing bits after codeword for block " + std::to_string(l) + ": '" + bits + "'");
        return l;
      }
    }
    throw Error(ErrorKind::UnparseableCodeword, "no codeword matches '" + bits + "'");
  }
};

/// Huffman code. Ties on mass are broken by the smallest symbol index in a
/// subtree; the subtree with the smaller index gets bit 0.
inline PrefixCode huffman(const std::vector<double>& probs) {
  if (probs.empty()) throw Error(ErrorKind::EmptyInput, "huffman: no symbols");
  for (double p : probs)
    if (!(p >= 0.0) || !std::isfinite(p))
      throw Error(ErrorKind::InvalidEnsemble, "huffman: invalid probability " + std::to_string(p));
  PrefixCode code;
  code.codewords.assign(probs.size(), "");
  if (probs.size() == 1) return code;

  struct Node {
    double mass;
    std::size_t first;
    std::vector<std::size_t> symbols;
  };
  auto later = [](const Node* a, const Node* b) {
    if (a->mass != b->mass) return a->mass > b->mass;
    return a->first > b->first;
  };
  std::vector<Node> pool;
  pool.reserve(2 * probs.size());
  std::priority_queue<Node*, std::vector<Node*>, decltype(later)> queue(later);
  for (std::size_t i = 0; i < probs.size(); ++i) pool.push_back({probs[i], i, {i}});
  for (auto& n : pool) queue.push(&n);

  while (queue.size() > 1) {
    Node* a = queue.top();
    queue.pop();
    Node* b = queue.top();
    queue.pop();
    if (b->first < a->first) std::swap(a, b);
    for (auto s : a->symbols) code.codewords[s].insert(code.codewords[s].begin(), '0');
    for (auto s : b->symbols) code.codewords[s].insert(code.codewords[s].begin(), '1');
    Node merged{a->mass + b->mass, a->first, a->symbols};
    merged.symbols.insert(merged.symbols.end(), b->symbols.begin(), b->symbols.end());
    pool.push_back(std::move(merged));
    queue.push(&pool.back());
  }
  return code;
}

inline std::vector<double> block_probs(const KIDecomposition& d) {
  std::vector<double> p;
  for (const auto& b : d.blocks) p.push_back(b.p_l);
  return p;
}

inline PrefixCode block_code(const KIDecomposition& d) { return huffman(block_probs(d)); }

/// Smallest q with 2^q >= dim.
constexpr std::size_t qubits_for(std::size_t dim) {
  std::size_t q = 0;
  while ((std::size_t{1} << q) < dim) ++q;
  return q;
}

struct EncodedBranch {
  std::size_t block = 0;
  double probability = 0.0;
  std::string bits;
  CMatrix payload;  // 2^qubits square
  std::size_t qubits = 0;

  std::size_t total_length() const { return bits.size() + qubits; }
};

inline std::vector<EncodedBranch> encode(const KIDecomposition& d, const PrefixCode& code,
                                         std::size_t i, double presence = 1e-10) {
  if (i >= d.letters()) throw Error(ErrorKind::DimensionMismatch, "letter index out of range");
  std::vector<EncodedBranch> out;
  for (std::size_t l = 0; l < d.blocks.size(); ++l) {
    const auto& b = d.blocks[l];
    if (b.p_il[i] <= presence || !b.rho_j_il[i]) continue;
    if (l >= code.size())
      throw Error(ErrorKind::MissingCodeword, "no codeword for block " + std::to_string(l));
    EncodedBranch br;
    br.block = l;
    br.probability = b.p_il[i];
    br.bits = code.codewords[l];
    br.qubits = qubits_for(b.dim_j);
    const auto n = static_cast<Eigen::Index>(std::size_t{1} << br.qubits);
    const auto dj = static_cast<Eigen::Index>(b.dim_j);
    br.payload = CMatrix::Zero(n, n);
    br.payload.topLeftCorner(dj, dj) = *b.rho_j_il[i];
    out.push_back(std::move(br));
  }
  return out;
}

/// Receiver side. Only the bits and the payload of the branch are used.
inline CMatrix decode(const KIDecomposition& d, const PrefixCode& code, const EncodedBranch& br) {
  const std::size_t l = code.parse(br.bits);
  if (l >= d.blocks.size())
    throw Error(ErrorKind::UnparseableCodeword, "codeword names unknown block " + std::to_string(l));
  const auto& b = d.blocks[l];
  const auto n = static_cast<Eigen::Index>(std::size_t{1} << qubits_for(b.dim_j));
  if (br.payload.rows() != n || br.payload.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "payload has wrong register size");
  const auto dj = static_cast<Eigen::Index>(b.dim_j);
  CMatrix outside = br.payload;
  outside.topLeftCorner(dj, dj).setZero();
  const double leak = outside.cwiseAbs().maxCoeff();
  if (leak > kLeakageTol)
    throw Error(ErrorKind::PayloadLeakage, "payload entry of size " + std::to_string(leak) +
                                               " outside the first " + std::to_string(b.dim_j) +
                                               " basis states");
  return b.embed(br.payload.topLeftCorner(dj, dj), b.rho_k);
}

/// Largest trace distance between a letter state and the average of its
/// decoded branches.
inline double roundtrip_check(const KIDecomposition& d, const PrefixCode& code, const Ensemble& e) {
  if (e.size() != d.letters()) throw Error(ErrorKind::DimensionMismatch, "letter count mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    CMatrix out = CMatrix::Zero(static_cast<Eigen::Index>(d.dim), static_cast<Eigen::Index>(d.dim));
    for (const auto& br : encode(d, code, i)) out += br.probability * decode(d, code, br);
    worst = std::max(worst, trace_distance(hermitian_part(out), e.states[i]));
  }
  return worst;
}

struct BlockLength {
  double p_l = 0.0;
  std::size_t codeword_length = 0;
  std::size_t payload_qubits = 0;
};

struct LengthStats {
  double expected_length = 0.0;
  std::vector<BlockLength> per_block;
  std::size_t n = 1;
  double per_letter_rate = 0.0;
  // per-letter bounds, I_C + D_NC and I_C + D_NC + 2/n
  double window_lower = 0.0;
  double window_upper = 0.0;
};

namespace detail {

inline void check_window(double value, double lo, double hi, const std::string& what) {
  if (value < lo - kWindowTol || value > hi + kWindowTol)
    throw Error(ErrorKind::WindowViolation, what + " " + std::to_string(value) + " outside [" +
                                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

}  // namespace detail

inline LengthStats expected_length(const KIDecomposition& d, const PrefixCode& code) {
  if (code.size() < d.blocks.size())
    throw Error(ErrorKind::MissingCodeword, "code has fewer codewords than blocks");
  LengthStats s;
  for (std::size_t l = 0; l < d.blocks.size(); ++l) {
    const auto& b = d.blocks[l];
    BlockLength row{b.p_l, code.codewords[l].size(), qubits_for(b.dim_j)};
    s.expected_length += row.p_l * static_cast<double>(row.codeword_length + row.payload_qubits);
    s.per_block.push_back(row);
  }
  s.per_letter_rate = s.expected_length;
  s.window_lower = i_c(d) + d_nc(d);
  s.window_upper = s.window_lower + 2.0;
  detail::check_window(s.expected_length, s.window_lower, s.window_upper, "expected length");
  return s;
}

struct NBlockResult {
  Ensemble power;
  KIDecomposition decomposition;
  PrefixCode code;
  LengthStats stats;
};

/// Codes blocks of n letters at once.
inline NBlockResult nblock_run(const Ensemble& e, std::size_t n, const DecompositionConfig& cfg = {},
                               std::size_t max_dim = 256) {
  if (n == 0) throw Error(ErrorKind::BadShape, "block length must be positive");
  NBlockResult r;
  r.power = tensor_power(e, n, max_dim);
  const KIDecomposition single = ki_decompose(e, cfg);
  r.decomposition = n == 1 ? single : ki_decompose(r.power, cfg);
  r.code = block_code(r.decomposition);
  r.stats = expected_length(r.decomposition, r.code);
  const double nd = static_cast<double>(n);
  r.stats.n = n;
  r.stats.per_letter_rate = r.stats.expected_length / nd;
  r.stats.window_lower = i_c(single) + d_nc(single);
  r.stats.window_upper = r.stats.window_lower + 2.0 / nd;
  detail::check_window(r.stats.per_letter_rate, r.stats.window_lower, r.stats.window_upper,
                       "per-letter rate");
  return r;
}

inline LengthStats nblock_experiment(const Ensemble& e, std::size_t n, const DecompositionConfig& cfg = {},
                                     std::size_t max_dim = 256) {
  return nblock_run(e, n, cfg, max_dim).stats;
}

struct SampleStats {
  std::size_t trials = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

namespace detail {

inline std::size_t sample_index(const std::vector<double>& weights, double u) {
  double total = 0.0;
  for (double w : weights) total += w;
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k] / total;
    if (u < acc) return k;
  }
  for (std::size_t k = weights.size(); k-- > 0;)
    if (weights[k] > 0.0) return k;
  return 0;
}

}  // namespace detail

/// Monte Carlo estimate of the length observable. Trial t draws from
/// Rng(mix_seed(seed, t)), so results do not depend on evaluation order.
inline SampleStats sample_lengths(const KIDecomposition& d, const PrefixCode& code, const Ensemble& e,
                                  std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw Error(ErrorKind::BadShape, "trials must be at least 1");
  if (e.size() != d.letters()) throw Error(ErrorKind::DimensionMismatch, "letter count mismatch");
  std::vector<std::vector<EncodedBranch>> branches;
  std::vector<std::vector<double>> weights;
  for (std::size_t i = 0; i < e.size(); ++i) {
    branches.push_back(encode(d, code, i));
    weights.emplace_back();
    for (const auto& br : branches.back()) weights.back().push_back(br.probability);
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, t));
    const std::size_t i = detail::sample_index(e.probs, rng.uniform());
    const std::size_t k = detail::sample_index(weights[i], rng.uniform());
    const auto len = static_cast<double>(branches[i][k].total_length());
    sum += len;
    sum_sq += len * len;
  }
  SampleStats s;
  s.trials = trials;
  const double nt = static_cast<double>(trials);
  s.mean = sum / nt;
  if (trials > 1) {
    const double var = std::max(0.0, (sum_sq - nt * s.mean * s.mean) / (nt - 1.0));
    s.std_error = std::sqrt(var / nt);
  }
  return s;
}

}  // namespace vlfq
