#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "vlfq/error.hpp"
#include "vlfq/matcore.hpp"
#include "vlfq/random.hpp"

using namespace vlfq;

namespace {

CMatrix ket_plus() {
  CMatrix p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  return p;
}

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InternalConsistency;
}

}  // namespace

TEST(HermEig, DescendingOrder) {
  CMatrix m(2, 2);
  m << 0.625, 0.25, 0.25, 0.375;
  const auto eig = herm_eig(m);
  EXPECT_NEAR(eig.values(0), 0.7795084971874737, 1e-14);
  EXPECT_NEAR(eig.values(1), 0.22049150281252627, 1e-14);
  const CMatrix back = eig.vectors * eig.values.cast<cplx>().asDiagonal() * eig.vectors.adjoint();
  EXPECT_LT(max_norm(back - m), 1e-14);
}

TEST(HermEig, RejectsBadInput) {
  EXPECT_EQ(kind_of([] { herm_eig(CMatrix::Zero(2, 3)); }), ErrorKind::NotSquare);
  CMatrix m = CMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  EXPECT_EQ(kind_of([&] { herm_eig(m); }), ErrorKind::NotHermitian);
}

TEST(Entropy, KnownValues) {
  EXPECT_NEAR(vn_entropy(diag({0.7, 0.3})), 0.8812908992306927, 1e-13);
  EXPECT_NEAR(vn_entropy(diag({0.75, 0.25})), 0.8112781244591328, 1e-13);
  EXPECT_NEAR(vn_entropy(ket_plus()), 0.0, 1e-12);
  EXPECT_NEAR(vn_entropy(identity(4) / 4.0), 2.0, 1e-13);
  const std::vector<double> p{0.5, 0.25, 0.25, 0.0};
  EXPECT_DOUBLE_EQ(shannon_entropy(p), 1.5);

  CMatrix avg(2, 2);
  avg << 0.75, 0.25, 0.25, 0.25;
  EXPECT_NEAR(vn_entropy(avg), 0.6008760366928562, 1e-13);
}

TEST(Entropy, RejectsNonDensity) {
  EXPECT_EQ(kind_of([] { vn_entropy(diag({0.7, 0.7})); }), ErrorKind::NotDensityMatrix);
  EXPECT_EQ(kind_of([] { vn_entropy(diag({1.2, -0.2})); }), ErrorKind::NotDensityMatrix);
}

TEST(Tensor, PartialTraceInvertsProduct) {
  Rng rng(7);
  CMatrix a = CMatrix::Zero(2, 2), b = CMatrix::Zero(3, 3);
  a << 0.6, cplx(0.1, 0.2), cplx(0.1, -0.2), 0.4;
  b = diag({0.5, 0.3, 0.2});
  const CMatrix ab = tensor(a, b);
  ASSERT_EQ(ab.rows(), 6);
  // first factor slowest
  EXPECT_EQ(ab(1 * 3 + 2, 0 * 3 + 2), a(1, 0) * b(2, 2));
  EXPECT_LT(max_norm(partial_trace(ab, 2, 3, Keep::First) - a), 1e-15);
  EXPECT_LT(max_norm(partial_trace(ab, 2, 3, Keep::Second) - b), 1e-15);
  EXPECT_EQ(kind_of([&] { partial_trace(ab, 2, 2, Keep::First); }), ErrorKind::DimensionMismatch);
}

TEST(DirectSum, BlockLayout) {
  const CMatrix s = direct_sum({diag({1.0}), ket_plus()});
  ASSERT_EQ(s.rows(), 3);
  EXPECT_EQ(s(0, 0), cplx(1.0));
  EXPECT_EQ(s(1, 2), cplx(0.5));
  EXPECT_EQ(s(0, 2), cplx(0.0));
}

TEST(Powers, InverseSquareRootOnSupport) {
  const CMatrix rho = diag({0.64, 0.36, 0.0});
  const CMatrix r = mat_power(rho, -0.5);
  EXPECT_NEAR(r(0, 0).real(), 1.25, 1e-14);
  EXPECT_NEAR(r(1, 1).real(), 1.0 / 0.6, 1e-14);
  EXPECT_NEAR(std::abs(r(2, 2)), 0.0, 1e-14);

  const CMatrix u = mat_power_it(rho, 0.5);
  EXPECT_LT(max_norm(u * u.adjoint() - support_projector(rho)), 1e-14);
  EXPECT_EQ(support_rank(herm_eig(rho).values), 2u);
}

TEST(TraceDistance, Basics) {
  EXPECT_NEAR(trace_distance(diag({1.0, 0.0}), diag({0.0, 1.0})), 1.0, 1e-15);
  EXPECT_NEAR(trace_distance(diag({1.0, 0.0}), ket_plus()), std::sqrt(0.5), 1e-14);
  EXPECT_NEAR(trace_distance(ket_plus(), ket_plus()), 0.0, 1e-15);
}

TEST(NullSpace, RankDeficient) {
  CMatrix m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 1, 0, 1;
  const CMatrix n = null_space(m, 1e-10);
  ASSERT_EQ(n.cols(), 1);
  EXPECT_LT((m * n).norm(), 1e-12);
}

TEST(GroupSorted, SplitsOnGaps) {
  RVector v(5);
  v << 3.0, 3.0 + 1e-12, 2.0, 1.0, 1.0;
  const auto groups = group_sorted(v, 1e-9);
  ASSERT_EQ(groups.size(), 3u);
  EXPECT_EQ(groups[0], std::make_pair(Eigen::Index{0}, Eigen::Index{2}));
  EXPECT_EQ(groups[2], std::make_pair(Eigen::Index{3}, Eigen::Index{5}));
}

TEST(Polar, RecoversUnitaryFactor) {
  Rng rng(3);
  CMatrix g(3, 3);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) g(i, j) = rng.complex_normal();
  const CMatrix u = polar_unitary(g);
  EXPECT_LT(max_norm(u.adjoint() * u - identity(3)), 1e-13);
  const CMatrix p = u.adjoint() * g;
  EXPECT_LT(hermiticity_violation(p), 1e-13);
}

TEST(Rng, ReproducibleStreams) {
  Rng a(mix_seed(42, 3)), b(mix_seed(42, 3)), c(mix_seed(42, 4));
  for (int k = 0; k < 10; ++k) {
    const double x = a.uniform();
    EXPECT_EQ(x, b.uniform());
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
  EXPECT_NE(Rng(mix_seed(42, 3)).next(), c.next());
}
