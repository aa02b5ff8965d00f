#pragma once

// Random ensembles built from a prescribed block structure, so the expected
// decomposition is known in advance.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "vlfq/ensemble.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/random.hpp"

namespace vlfq::support {

struct BlockShape {
  std::size_t dim_j;
  std::size_t dim_k;
};

struct Structured {
  Ensemble ensemble;
  std::vector<BlockShape> shapes;
  std::vector<double> p_l;             // per shape
  std::vector<CMatrix> rho_k;          // per shape
};

/// Every letter puts random weight on every block; J states are generic
/// full-rank so the J factors are irreducible.
inline Structured make_structured(const std::vector<BlockShape>& shapes, std::size_t letters,
                                  std::uint64_t seed) {
  Rng rng(seed);
  Structured s;
  s.shapes = shapes;
  std::size_t dim = 0;
  for (const auto& b : shapes) dim += b.dim_j * b.dim_k;
  for (const auto& b : shapes) s.rho_k.push_back(random_density(b.dim_k, b.dim_k, rng));

  const CMatrix u = random_unitary(dim, rng);
  s.ensemble.dim = dim;
  s.ensemble.probs = detail::random_probs(rng, letters);
  s.p_l.assign(shapes.size(), 0.0);
  for (std::size_t i = 0; i < letters; ++i) {
    const auto w = detail::random_probs(rng, shapes.size());
    std::vector<CMatrix> parts;
    for (std::size_t l = 0; l < shapes.size(); ++l) {
      const CMatrix j = random_density(shapes[l].dim_j, shapes[l].dim_j, rng);
      parts.push_back(w[l] * tensor(j, s.rho_k[l]));
      s.p_l[l] += s.ensemble.probs[i] * w[l];
    }
    s.ensemble.labels.push_back("s" + std::to_string(i));
    s.ensemble.states.push_back(hermitian_part(u * direct_sum(parts) * u.adjoint()));
  }
  return s;
}

/// Diagonal states with random zero patterns, conjugated by a random unitary.
inline Ensemble random_commuting(std::uint64_t seed, std::size_t max_dim = 5) {
  Rng rng(seed);
  const std::size_t dim = 2 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_dim - 1));
  const std::size_t letters = 2 + static_cast<std::size_t>(rng.uniform() * 3.0);
  std::vector<std::vector<double>> rows(letters, std::vector<double>(dim));
  for (auto& row : rows)
    for (auto& x : row) x = rng.uniform() < 0.25 ? 0.0 : rng.uniform(0.1, 1.0);
  for (auto& row : rows) row[static_cast<std::size_t>(rng.uniform() * static_cast<double>(dim))] += 0.5;
  auto e = classical(rows, detail::random_probs(rng, letters));
  return rotate(e, random_unitary(dim, rng));
}

/// Random block shapes with total dimension at most max_dim.
inline std::vector<BlockShape> random_shapes(Rng& rng, std::size_t max_dim) {
  std::vector<BlockShape> out;
  std::size_t used = 0;
  do {
    const std::size_t j = 1 + static_cast<std::size_t>(rng.uniform() * 3.0);
    const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 2.0);
    if (used + j * k > max_dim) break;
    out.push_back({j, k});
    used += j * k;
  } while (rng.uniform() < 0.6);
  if (out.empty()) out.push_back({2, 1});
  return out;
}

/// Sorted (dim_j, dim_k) pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> shape_multiset(const std::vector<BlockShape>& shapes) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& b : shapes) out.emplace_back(b.dim_j, b.dim_k);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace vlfq::support
