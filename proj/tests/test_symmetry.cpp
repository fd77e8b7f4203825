#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qchain/symmetry.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace qchain;

namespace {

std::vector<std::size_t> sector_dims(int n) {
  std::vector<std::size_t> out;
  for (const auto& s : build_momentum_basis(n)) out.push_back(s.dimension());
  return out;
}

// ||T v - e^{2 pi i k/n} v|| using the dense translation oracle.
double t_residual(const Eigen::VectorXcd& v, int n, int k) {
  const auto t = oracle::translation(n);
  return (t * v - std::polar(1.0, 2.0 * std::numbers::pi * k / n) * v).norm();
}

}  // namespace

TEST(TranslateIndex, Examples) {
  EXPECT_EQ(translate_index(0b011, 3), 0b101u);
  EXPECT_EQ(translate_index(0, 7), 0u);
  for (std::uint64_t b = 0; b < 32; ++b) {
    std::uint64_t c = b;
    for (int m = 0; m < 5; ++m) c = translate_index(c, 5);
    EXPECT_EQ(c, b);
  }
  EXPECT_THROW((void)translate_index(8, 3), ContractViolation);
}

TEST(TranslateIndex, MatchesDenseOperator) {
  for (int n = 1; n <= 6; ++n) {
    const auto t = oracle::translation(n);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
      EXPECT_EQ(t(static_cast<Eigen::Index>(translate_index(b, n)), static_cast<Eigen::Index>(b)), complex(1.0));
    }
  }
}

TEST(MomentumBasis, SectorDimensions) {
  EXPECT_EQ(sector_dims(3), (std::vector<std::size_t>{4, 2, 2}));
  EXPECT_EQ(sector_dims(1), (std::vector<std::size_t>{2}));
  EXPECT_EQ(sector_dims(5), (std::vector<std::size_t>{8, 6, 6, 6, 6}));
  for (int n = 1; n <= 12; ++n) {
    std::size_t total = 0;
    for (auto d : sector_dims(n)) total += d;
    EXPECT_EQ(total, std::size_t{1} << n) << n;
  }
}

TEST(MomentumBasis, VectorsAreTEigenvectorsAndOrthonormal) {
  for (int n = 1; n <= 8; ++n) {
    std::vector<Eigen::VectorXcd> all;
    for (const auto& sec : build_momentum_basis(n)) {
      for (std::size_t i = 0; i < sec.dimension(); ++i) {
        const auto v = oracle::as_vector(sec.vector(i));
        EXPECT_LT(t_residual(v, n, sec.k), 1e-12);
        all.push_back(v);
      }
    }
    Eigen::MatrixXcd basis(Eigen::Index{1} << n, static_cast<Eigen::Index>(all.size()));
    for (std::size_t c = 0; c < all.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = all[c];
    const auto gram = basis.adjoint() * basis;
    EXPECT_LT((gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(JointEigenbasis, IsingRingVectorsAreTEigenvectors) {
  BondCoefficients zz{};
  zz[bond_slot(3, 3)] = 1.0;
  const auto h = build_invariant(zz, 4);
  const auto e = joint_eigenbasis(h);
  ASSERT_TRUE(e.momenta().has_value());
  const auto m = oracle::dense(h);
  for (std::size_t i = 0; i < e.dimension(); ++i) {
    const auto v = oracle::as_vector(e.vector(i));
    EXPECT_LT(t_residual(v, 4, (*e.momenta())[i]), 1e-10);
    EXPECT_LT((m * v - e.eigenvalues()[i] * v).norm(), 1e-10);
  }
}

TEST(JointEigenbasis, ZeroOperatorReturnsSectorBasis) {
  const auto e = joint_eigenbasis(OperatorSum(3));
  EXPECT_EQ(e.dimension(), 8u);
  for (double v : e.eigenvalues()) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_LT(t_residual(oracle::as_vector(e.vector(i)), 3, (*e.momenta())[i]), 1e-12);
  }
}

TEST(JointEigenbasis, SpectrumMatchesDenseAndBasisIsOrthonormal) {
  gen::Gen g(41);
  for (int n = 3; n <= 8; ++n) {
    const auto h = build_invariant(g.bond(), n);
    const auto e = joint_eigenbasis(h);
    const auto m = oracle::dense(h);
    EXPECT_LT(oracle::max_abs_diff(e.eigenvalues(), oracle::eigenvalues(m)), 1e-9) << n;
    EXPECT_TRUE(std::is_sorted(e.eigenvalues().begin(), e.eigenvalues().end()));
    Eigen::MatrixXcd basis(m.rows(), m.cols());
    for (std::size_t i = 0; i < e.dimension(); ++i) {
      const auto v = oracle::as_vector(e.vector(i));
      basis.col(static_cast<Eigen::Index>(i)) = v;
      EXPECT_LT(t_residual(v, n, (*e.momenta())[i]), 1e-10);
      EXPECT_LT((m * v - e.eigenvalues()[i] * v).norm(), 1e-9);
    }
    const auto gram = basis.adjoint() * basis;
    EXPECT_LT((gram - Eigen::MatrixXcd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(oracle::max_abs_diff(invariant_spectrum(h), e.eigenvalues()), 1e-12);
  }
}

TEST(JointEigenbasis, DegenerateAcrossSectorsStillGivesMomentumStates) {
  // Heisenberg ring: heavily degenerate, yet every vector carries a momentum.
  BondCoefficients heis{};
  heis[bond_slot(1, 1)] = heis[bond_slot(2, 2)] = heis[bond_slot(3, 3)] = 1.0;
  const auto e = joint_eigenbasis(build_invariant(heis, 6));
  for (std::size_t i = 0; i < e.dimension(); ++i) {
    EXPECT_LT(t_residual(oracle::as_vector(e.vector(i)), 6, (*e.momenta())[i]), 1e-10);
  }
  EXPECT_FALSE(e.gauge().empty());
}

TEST(JointEigenbasis, Errors) {
  EXPECT_THROW((void)joint_eigenbasis(sample_random(ModelKind::nn, 5, 1)), ContractViolation);
  JointBasisOptions opts;
  opts.dense_cap = 4;
  EXPECT_THROW((void)joint_eigenbasis(build_exyz(0.5, 5), opts), CapExceeded);
}
