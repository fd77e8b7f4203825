#include <bit>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qchain/dos_stats.hpp"
#include "qchain/free_fermion.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace qchain;

namespace {

// (1/sqrt n) sum_j Z_j eigenvalues, listed by basis index.
std::vector<double> field_spectrum(int n) {
  std::vector<double> v(std::size_t{1} << n);
  for (std::size_t b = 0; b < v.size(); ++b) v[b] = (n - 2.0 * std::popcount(b)) / std::sqrt(double(n));
  return v;
}

// sup |F - Phi| for the scaled binomial law, from its atoms.
double binomial_ks(int n) {
  double below = 0.0, ks = 0.0;
  for (int r = n; r >= 0; --r) {
    const double x = (n - 2.0 * r) / std::sqrt(double(n));
    const double p = std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0) - n * std::log(2.0));
    const double phi = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    ks = std::max({ks, std::abs(below - phi), std::abs(below + p - phi)});
    below += p;
  }
  return ks;
}

std::vector<double> dense_spectrum(const OperatorSum& h) { return oracle::eigenvalues(oracle::dense(h)); }

}  // namespace

TEST(NormalCdf, ReferenceValues) {
  EXPECT_EQ(standard_normal_cdf(0.0), 0.5);
  EXPECT_NEAR(standard_normal_cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(standard_normal_cdf(-3.0), 0.0013498980316300946, 1e-16);
  EXPECT_NEAR(standard_normal_cdf(-10.0), 7.619853024160527e-24, 1e-36);
  EXPECT_EQ(normal_moment(2), 1.0);
  EXPECT_EQ(normal_moment(4), 3.0);
  EXPECT_EQ(normal_moment(6), 15.0);
  EXPECT_EQ(normal_moment(3), 0.0);
}

TEST(KsDistance, SinglePointMass) {
  const auto r = ks_distance(EmpiricalDistribution::exact({0.0}));
  EXPECT_EQ(r.value, 0.5);
  EXPECT_TRUE(r.exact);
  EXPECT_THROW((void)ks_distance(EmpiricalDistribution::exact({})), ContractViolation);
}

TEST(KsDistance, FieldChainMatchesBinomialOracle) {
  for (int n : {4, 9, 20}) {
    const auto d = EmpiricalDistribution::exact(field_spectrum(n));
    EXPECT_NEAR(ks_distance(d).value, binomial_ks(n), 1e-12) << n;
  }
  // Order n^{-1/2}.
  const double k20 = binomial_ks(20);
  EXPECT_GT(k20 * std::sqrt(20.0), 0.1);
  EXPECT_LT(k20 * std::sqrt(20.0), 1.0);
}

TEST(KsDistance, NormalQuantileGridIsClose) {
  // Midpoint quantiles of the normal law: KS is at most half the grid step.
  const int m = 20000;
  std::vector<double> q;
  for (int i = 0; i < m; ++i) {
    const double p = (i + 0.5) / m;
    // Invert Phi by bisection.
    double lo = -10.0, hi = 10.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (standard_normal_cdf(mid) < p ? lo : hi) = mid;
    }
    q.push_back(0.5 * (lo + hi));
  }
  EXPECT_LE(ks_distance(EmpiricalDistribution::exact(q)).value, 0.5 / m + 1e-12);
}

TEST(KsDistance, StreamingBracketsExactValue) {
  for (double eps : {0.0, 0.5}) {
    const int n = 14;
    const auto m = mode_energies(n, eps).scaled(normalization_scale(n, eps));
    const auto exact = EmpiricalDistribution::exact(analytic_spectrum(m));
    const auto acc = enumerate_segmented<StreamingAccumulator>(m, [] { return StreamingAccumulator{}; });
    const auto stream = EmpiricalDistribution::streaming(acc);
    const auto ke = ks_distance(exact), ks = ks_distance(stream);
    EXPECT_FALSE(ks.exact);
    EXPECT_LE(ks.value, ke.value + 1e-12) << eps;
    EXPECT_GE(ks.value + ks.uncertainty, ke.value - 1e-12) << eps;
    EXPECT_EQ(stream.count(), exact.count());
    for (int k = 1; k <= 8; ++k) {
      EXPECT_NEAR(stream.power_sums().moment(k), exact.power_sums().moment(k), 1e-9 * normal_moment(k + k % 2));
    }
  }
}

TEST(Moments, Examples) {
  std::vector<Term<double>> field;
  for (int s = 0; s < 4; ++s) field.push_back({0.5, PauliString::single(4, s, Pauli::Z)});
  const auto d = EmpiricalDistribution::exact(dense_spectrum(OperatorSum(4, field)));
  const auto m = moments(d, 4);
  EXPECT_NEAR(m[0], 0.0, 1e-14);
  EXPECT_NEAR(m[1], 1.0, 1e-14);
  EXPECT_NEAR(m[3], 2.5, 1e-13);
  EXPECT_THROW((void)moments(d, 9), ContractViolation);
}

TEST(Moments, SecondMomentIsOneForEveryNormalizedBuilder) {
  std::vector<OperatorSum> hs;
  for (auto kind : {ModelKind::nn, ModelKind::invariant, ModelKind::pair_only, ModelKind::general}) {
    hs.push_back(sample_random(kind, 7, 91));
  }
  hs.push_back(normalize(build_ba(0.5, 0.5, 7)));
  hs.push_back(normalize(build_exyz(0.4, 7)));
  for (const auto& h : hs) {
    const auto d = EmpiricalDistribution::exact(dense_spectrum(h));
    EXPECT_NEAR(moments(d, 2)[1], 1.0, 1e-10);
  }
}

TEST(MomentAccumulator, MergeIsAssociative) {
  gen::Gen g(92);
  std::vector<double> v(10000);
  for (double& x : v) x = g.normal();
  MomentAccumulator all, a, b;
  all(v);
  a(std::span<const double>(v).first(3000));
  b(std::span<const double>(v).subspan(3000));
  a.merge(b);
  for (int k = 1; k <= 8; ++k) EXPECT_NEAR(a.moment(k), all.moment(k), 1e-12 * std::max(1.0, all.moment(k)));
  EXPECT_EQ(a.count, all.count);
}

TEST(CharacteristicFn, Examples) {
  const std::vector<double> pi{std::numbers::pi};
  EXPECT_NEAR(std::abs(characteristic_fn(pi, 1.0) - complex(-1.0, 0.0)), 0.0, 1e-15);
  const auto d = EmpiricalDistribution::exact(field_spectrum(10));
  EXPECT_EQ(characteristic_fn(d, 0.0), complex(1.0));
  for (double t : {0.3, 1.0, 2.5, 7.0}) {
    const double ref = std::pow(std::cos(t / std::sqrt(10.0)), 10);
    EXPECT_NEAR(std::abs(characteristic_fn(d, t) - complex(ref)), 0.0, 1e-13);
    EXPECT_LE(std::abs(characteristic_fn(d, t)), 1.0 + 1e-15);
  }
  StreamingAccumulator acc;
  acc(std::vector<double>{0.1, 0.2});
  EXPECT_THROW((void)characteristic_fn(EmpiricalDistribution::streaming(acc), 1.0), ContractViolation);
}

TEST(CTable, ScalesCdfGapByN) {
  const auto d = EmpiricalDistribution::exact(field_spectrum(6));
  const std::vector<double> xs{-1.0, 0.0, 0.5};
  const auto rows = c_table(d, 6, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_NEAR(rows[i].c, 6.0 * std::abs(d.cdf(xs[i]) - standard_normal_cdf(xs[i])), 1e-15);
  }
}

TEST(BlockLinkSplit, Structure) {
  const auto h6 = sample_random(ModelKind::nn, 6, 93);
  const auto s = block_link_split(h6, 3);
  EXPECT_EQ(s.link_count, 2);
  EXPECT_EQ(s.blocks.size(), 2u);
  EXPECT_EQ(s.blocks_sum + s.links, h6);
  for (const auto& b : s.blocks) {
    std::uint64_t support = 0;
    for (const auto& t : b.terms()) support |= t.string.support();
    EXPECT_EQ(std::popcount(support), 3);  // 2 bonds on 3 consecutive sites
  }
  const auto s5 = block_link_split(sample_random(ModelKind::nn, 5, 94), 2);
  EXPECT_EQ(s5.link_count, 3);
  for (std::size_t i = 0; i < s5.blocks.size(); ++i) {
    for (std::size_t j = i + 1; j < s5.blocks.size(); ++j) EXPECT_EQ(commutator_norm(s5.blocks[i], s5.blocks[j]), 0.0);
  }
}

TEST(BlockLinkSplit, ParsevalSplitAndDisjointBlocks) {
  gen::Gen g(95);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = g.uniform(3, 12);
    const int l = g.uniform(2, n);
    const auto h = sample_random(ModelKind::nn, n, 1000 + static_cast<std::uint64_t>(trial));
    const auto s = block_link_split(h, l);
    EXPECT_EQ(s.blocks_sum + s.links, h);
    double sn2 = 0.0;
    std::uint64_t seen = 0;
    for (const auto& b : s.blocks) {
      sn2 += b.squared_norm();
      std::uint64_t support = 0;
      for (const auto& t : b.terms()) support |= t.string.support();
      EXPECT_EQ(seen & support, 0u);
      seen |= support;
    }
    EXPECT_NEAR(sn2 + s.links.squared_norm(), 1.0, 1e-12);
    if (n <= 10) EXPECT_NEAR(lyapunov_quantities(h, l).s_n2 + s.links.squared_norm(), 1.0, 1e-12);
  }
}

TEST(BlockLinkSplit, RejectsNonChainTerms) {
  const OperatorSum h(5, {{1.0, PauliString::parse("XIZII")}});
  EXPECT_THROW((void)block_link_split(h, 2), ContractViolation);
  EXPECT_THROW((void)block_link_split(sample_random(ModelKind::nn, 5, 1), 1), ContractViolation);
  EXPECT_THROW((void)block_link_split(sample_random(ModelKind::nn, 5, 1), 6), ContractViolation);
}

TEST(CltBound, InequalityHoldsAndTrivialRows) {
  const auto h = sample_random(ModelKind::nn, 10, 96);
  const std::vector<double> ts{0.0, 0.5, 1.0, 2.0};
  for (int l : {2, 3, 5}) {
    const auto rows = clt_bound_check(h, l, ts, 1.0);
    ASSERT_EQ(rows.size(), ts.size());
    EXPECT_NEAR(rows[0].lhs, 0.0, 1e-15);
    for (const auto& r : rows) {
      EXPECT_TRUE(r.pass) << l << " " << r.t;
      EXPECT_TRUE(r.rhs_coefficient.has_value());
    }
  }
}

TEST(CltBound, LhsMatchesDenseMatrixExponential) {
  const int n = 6;
  const auto h = sample_random(ModelKind::nn, n, 97);
  const auto s = block_link_split(h, 3);
  const double t = 0.8;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eh(oracle::dense(h)), eb(oracle::dense(s.blocks_sum));
  complex psi{}, phi{};
  for (Eigen::Index i = 0; i < eh.eigenvalues().size(); ++i) {
    psi += std::exp(complex(0.0, t * eh.eigenvalues()(i)));
    phi += std::exp(complex(0.0, t * eb.eigenvalues()(i)));
  }
  const double ref = std::abs(psi - phi) / double(1 << n);
  const std::vector<double> ts{t};
  EXPECT_NEAR(clt_bound_check(h, 3, ts)[0].lhs, ref, 1e-12);
}

TEST(CltBound, OpenChainInsideOneBlockHasNoGap) {
  // Drop the wrap bond: with l = n the only link is that bond, so L = 0.
  const int n = 6;
  ChainCoefficients c(n);
  gen::Gen g(98);
  for (int j = 0; j + 1 < n; ++j) c.alpha[static_cast<std::size_t>(j)] = g.bond();
  // bond n-1 (the wrap bond, which also carries the site-0 field) stays empty
  const auto h = normalize(build_nn_chain(c));
  const std::vector<double> ts{0.5, 1.0, 2.0};
  for (const auto& r : clt_bound_check(h, n, ts)) {
    EXPECT_NEAR(r.lhs, 0.0, 1e-12);
    EXPECT_EQ(r.rhs, 0.0);
    EXPECT_TRUE(r.pass);
  }
}

TEST(Lyapunov, SingleBlockAndIsingRing) {
  const int n = 6;
  ChainCoefficients c(n);
  gen::Gen g(99);
  for (int j = 0; j + 1 < n; ++j) c.alpha[static_cast<std::size_t>(j)] = g.bond();
  const auto h = normalize(build_nn_chain(c));
  const auto q = lyapunov_quantities(h, n);
  EXPECT_NEAR(q.s_n2, 1.0, 1e-12);
  const auto spec = dense_spectrum(h);
  double m4 = 0.0;
  for (double v : spec) m4 += v * v * v * v;
  EXPECT_NEAR(q.fourth_sum, m4 / double(spec.size()), 1e-10);

  ChainCoefficients ising(8);
  for (int j = 0; j < 8; ++j) ising.at(j, 3, 3) = 1.0;
  const auto qi = lyapunov_quantities(build_nn_chain(ising), 4, 1.0);
  ASSERT_TRUE(qi.genbound3_rhs.has_value());
  EXPECT_LE(qi.fourth_sum, *qi.genbound3_rhs);
  EXPECT_NEAR(*qi.genbound3_rhs, std::pow(3.0, 7) * 256.0 * (0.5 + 0.25), 1e-6);
}

TEST(BaPrediction, Values) {
  EXPECT_EQ(ba_prediction(0, 0, 1), 1.0);
  EXPECT_EQ(ba_prediction(0, 0, 2), 3.0);
  EXPECT_EQ(ba_prediction(0, 0, 3), 15.0);
  EXPECT_NEAR(ba_prediction(0.5, 0.5, 1), 1.5, 1e-15);
  EXPECT_NEAR(ba_prediction(0.5, 0.5, 2), 6.75, 1e-14);
  EXPECT_NEAR(ba_printed_prediction(0.5, 0.5, 1), 2.25, 1e-15);
  EXPECT_NEAR(ba_printed_prediction(0.5, 0.5, 2), 3.0 * std::pow(1.5, 4), 1e-13);
  EXPECT_THROW((void)ba_prediction(0, 0, 0), ContractViolation);
}

TEST(BaPrediction, SecondMomentIsExactAtFiniteN) {
  const auto d = EmpiricalDistribution::exact(dense_spectrum(build_ba(0.5, 0.5, 8)));
  EXPECT_NEAR(moments(d, 2)[1], ba_prediction(0.5, 0.5, 1), 1e-10);
  EXPECT_NEAR(build_ba(0.5, 0.5, 8).squared_norm(), 1.5, 1e-12);
}

TEST(GeometryConditions, Examples) {
  EdgeCoefficients a{};
  a[8] = 1.0;
  for (int p : {4, 5, 6}) {
    for (int l : {2, 3}) {
      const auto c = geometry_conditions(cyclic_lattice(p, a), lattice_blocks(p, l));
      EXPECT_EQ(c.r, 2 * p * ((p + l - 1) / l)) << p << " " << l;
    }
  }
  const auto g = cyclic_lattice(4, a);
  const auto whole = geometry_conditions(g, {std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}});
  EXPECT_EQ(whole.r, 0);
  EXPECT_EQ(whole.m, 1);
  EXPECT_EQ(whole.q, 16);
  const auto ring = geometry_conditions(ring_graph(12, a), ring_blocks(12, 4));
  EXPECT_EQ(ring.r, 3);
  EXPECT_EQ(ring.m, 3);
  EXPECT_EQ(ring.q, 4);
  EXPECT_NEAR(ring.r_over_n, 0.25, 1e-15);
  EXPECT_NEAR(ring.mq2_over_n2, 48.0 / 144.0, 1e-15);
}

TEST(GeometryConditions, RejectsBadPartitions) {
  EdgeCoefficients a{};
  const auto g = ring_graph(6, a);
  EXPECT_THROW((void)geometry_conditions(g, {{0, 1, 2}, {2, 3, 4, 5}}), ContractViolation);
  EXPECT_THROW((void)geometry_conditions(g, {{0, 1, 2}, {3, 4}}), ContractViolation);
  EXPECT_THROW((void)geometry_conditions(g, {{0, 1, 2, 3, 4, 5}, {}}), ContractViolation);
}

TEST(Histogram, CountsAndCdfInterpolation) {
  Histogram h(-1.0, 1.0, 4);
  h(std::vector<double>{-2.0, -0.9, -0.1, 0.1, 0.2, 0.99, 1.0, 3.0});
  EXPECT_EQ(h.underflow, 1u);
  EXPECT_EQ(h.overflow, 2u);
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{1, 1, 2, 1}));
  StreamingAccumulator acc(h);
  acc.moments(std::vector<double>{-2.0, -0.9, -0.1, 0.1, 0.2, 0.99, 1.0, 3.0});
  const auto d = EmpiricalDistribution::streaming(acc);
  EXPECT_EQ(d.cdf(-1.5), 0.0);
  EXPECT_NEAR(d.cdf(0.0), 3.0 / 8.0, 1e-15);
  EXPECT_NEAR(d.cdf(0.25), 4.0 / 8.0, 1e-15);
  EXPECT_NEAR(d.cdf(1.0), 6.0 / 8.0, 1e-15);
}
