#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "qchain/free_fermion.hpp"
#include "support/oracles.hpp"

using namespace qchain;

namespace {

struct Collect {
  std::vector<double> values;
  void operator()(std::span<const double> v) { values.insert(values.end(), v.begin(), v.end()); }
  void merge(const Collect& o) { values.insert(values.end(), o.values.begin(), o.values.end()); }
};

std::vector<double> dense_exyz(double eps, int n) { return oracle::eigenvalues(oracle::dense(build_exyz(eps, n))); }

}  // namespace

TEST(ModeEnergies, Examples) {
  const auto zero = mode_energies(6, 0.0);
  for (double d : zero.delta) EXPECT_EQ(d, -1.0);
  const double eps = 0.8;
  const auto four = mode_energies(4, eps);
  EXPECT_NEAR(four.mu[0], 1.0, 1e-15);
  EXPECT_NEAR(four.delta[0], eps - std::sqrt(eps * eps + 1.0), 1e-15);
  EXPECT_THROW((void)mode_energies(2, 0.1), ContractViolation);
}

TEST(ModeEnergies, Identities) {
  for (int n : {3, 4, 5, 8, 11}) {
    for (double eps : {0.0, 0.3, 0.7, 1.0, 2.5}) {
      const auto m = mode_energies(n, eps);
      EXPECT_EQ(m.mu[static_cast<std::size_t>(n - 1)], 0.0);
      for (int j = 1; j <= n; ++j) {
        EXPECT_NEAR(m.chi_plus(j) * m.chi_minus(j), -1.0, 1e-12);
        EXPECT_NEAR(m.chi_plus(j) + m.chi_minus(j), 2.0 * eps * m.mu[static_cast<std::size_t>(j - 1)], 1e-12);
        EXPECT_LT(m.delta[static_cast<std::size_t>(j - 1)], 0.0);
        EXPECT_NEAR(m.mu[static_cast<std::size_t>(j - 1)], std::sin(2.0 * std::numbers::pi * j / n), 1e-14);
        if (j < n) {
          EXPECT_EQ(m.mu[static_cast<std::size_t>(j - 1)], -m.mu[static_cast<std::size_t>(n - j - 1)]);
        }
      }
    }
  }
}

TEST(EnumerateSpectrum, ZeroCouplingIsBinomial) {
  Collect c;
  const auto stats = enumerate_spectrum(mode_energies(3, 0.0), c);
  EXPECT_EQ(stats.count, 8u);
  std::sort(c.values.begin(), c.values.end());
  EXPECT_EQ(c.values, (std::vector<double>{-3, -1, -1, -1, 1, 1, 1, 3}));
}

TEST(EnumerateSpectrum, EmitsEveryIndexOnce) {
  const auto m = mode_energies(9, 0.45);
  Collect c;
  (void)enumerate_spectrum(m, c);
  std::vector<double> ref;
  for (std::uint64_t x = 0; x < 512; ++x) ref.push_back(eigenvalue_of(m, x));
  EXPECT_LT(oracle::max_abs_diff(c.values, ref), 1e-12);
  EXPECT_NEAR(std::accumulate(c.values.begin(), c.values.end(), 0.0), 0.0, 1e-10);
}

TEST(EnumerateSpectrum, MatchesDenseDiagonalizationForOddN) {
  for (int n : {3, 5, 7}) {
    for (double eps : {0.0, 0.3, 1.0}) {
      EXPECT_LT(oracle::max_abs_diff(analytic_spectrum(mode_energies(n, eps)), dense_exyz(eps, n)), 1e-9)
          << n << " " << eps;
    }
  }
}

TEST(EnumerateSpectrum, SymmetricUnderNegation) {
  const auto m = mode_energies(10, 0.6);
  const std::uint64_t full = (std::uint64_t{1} << 10) - 1;
  for (std::uint64_t x = 0; x <= full; ++x) EXPECT_NEAR(eigenvalue_of(m, full ^ x), -eigenvalue_of(m, x), 1e-13);
  auto s = analytic_spectrum(m);
  std::vector<double> neg;
  for (double v : s) neg.push_back(-v);
  EXPECT_LT(oracle::max_abs_diff(s, neg), 1e-12);
}

TEST(EnumerateSpectrum, DriftStaysSmallOverLongRuns) {
  const auto m = mode_energies(22, 0.37);
  std::uint64_t seen = 0;
  const auto stats = enumerate_spectrum(m, [&](std::span<const double> v) { seen += v.size(); });
  EXPECT_EQ(seen, std::uint64_t{1} << 22);
  EXPECT_GE(stats.checkpoints, 4u);
  EXPECT_LT(stats.max_drift, 1e-9);
}

TEST(EnumerateSpectrum, CapIsEnforced) {
  EXPECT_THROW((void)enumerate_spectrum(mode_energies(30, 0.5), [](std::span<const double>) {}), CapExceeded);
  EXPECT_THROW((void)analytic_spectrum(mode_energies(25, 0.5)), CapExceeded);
}

TEST(EnumerateSegmented, IndependentOfThreadCount) {
  const auto m = mode_energies(14, 0.5);
  EnumerationStats s1, s4;
  const auto one = enumerate_segmented<Collect>(m, [] { return Collect{}; }, &s1, 1);
  const auto four = enumerate_segmented<Collect>(m, [] { return Collect{}; }, &s4, 4);
  EXPECT_EQ(one.values, four.values);
  EXPECT_EQ(s1.count, std::uint64_t{1} << 14);
  EXPECT_EQ(s4.count, s1.count);
  Collect serial;
  (void)enumerate_spectrum(m, serial);
  EXPECT_LT(oracle::max_abs_diff(one.values, serial.values), 1e-12);
  EXPECT_LT(s1.max_drift, 1e-9);
}

TEST(NormalizationScale, UnitSecondMoment) {
  for (int n : {5, 8, 12}) {
    for (double eps : {0.0, 0.5, 1.3}) {
      const auto s = analytic_spectrum(mode_energies(n, eps).scaled(normalization_scale(n, eps)));
      double m2 = 0.0;
      for (double v : s) m2 += v * v;
      EXPECT_NEAR(m2 / double(s.size()), 1.0, 1e-12);
      // Pauli-algebra route: (1/2^n) Tr H^2 = n (1 + eps^2).
      EXPECT_NEAR(build_exyz(eps, n).squared_norm(), n * (1.0 + eps * eps), 1e-12);
    }
  }
}

TEST(SectorOf, Parity) {
  EXPECT_EQ(sector_of(0), 0);
  for (std::uint64_t x : {0b1u, 0b1011u, 0b111u}) {
    for (int j = 0; j < 5; ++j) EXPECT_NE(sector_of(x), sector_of(x ^ (std::uint64_t{1} << j)));
  }
}

TEST(EtaAssignment, ConsistentForOddN) {
  for (int n : {3, 5, 7}) {
    for (double eps : {0.4, 0.9}) {
      const auto r = resolve_eta_assignment(n, eps);
      EXPECT_TRUE(r.consistent) << n << " " << eps << " " << r.max_deviation;
      EXPECT_EQ(r.parity_for_eta_plus, 0);
    }
  }
}

TEST(EtaAssignment, EtaBlocksAreNegativesOfEachOther) {
  // eta = +1 block spectrum is the negative of the eta = -1 block.
  const int n = 5;
  const auto m = mode_energies(n, 0.4);
  std::vector<double> even, odd;
  for (std::uint64_t x = 0; x < 32; ++x) (sector_of(x) ? odd : even).push_back(-eigenvalue_of(m, x));
  std::vector<double> odd_pos;
  for (std::uint64_t x = 0; x < 32; ++x) {
    if (sector_of(x)) odd_pos.push_back(eigenvalue_of(m, x));
  }
  EXPECT_LT(oracle::max_abs_diff(even, odd_pos), 1e-12);
}

TEST(MinGapScan, Examples) {
  const std::vector<double> grid{0.0, 0.1, 0.3, 0.5, 0.7, 1.0};
  const auto scan = min_gap_scan(5, grid);
  EXPECT_FALSE(scan.hypothesis_warning);
  EXPECT_EQ(scan.rows.size(), grid.size());
  EXPECT_EQ(scan.rows[0].min_gap, 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_GT(scan.rows[i].min_gap, 1e-6) << grid[i];
  EXPECT_TRUE(min_gap_scan(4, grid).hypothesis_warning);
  EXPECT_EQ(min_gap_scan(7, grid).rows[0].min_gap, 0.0);
}

TEST(IsOddPrime, SmallValues) {
  std::vector<int> primes;
  for (int n = 0; n < 30; ++n) {
    if (is_odd_prime(n)) primes.push_back(n);
  }
  EXPECT_EQ(primes, (std::vector<int>{3, 5, 7, 11, 13, 17, 19, 23, 29}));
}
