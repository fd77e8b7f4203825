#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qchain/errors.hpp"
#include "qchain/operator_sum.hpp"
#include "qchain/pauli.hpp"
#include "qchain/spectra.hpp"

namespace qchain {

/// Tolerance for trace, Hermiticity and positivity of reduced density matrices.
inline constexpr double kRdmTolerance = 1e-10;

/// Slack applied to the average-purity and Markov bounds.
inline constexpr double kBoundSlack = 1e-9;

/// Pairwise (cascade) summation; deterministic for a fixed input order.
[[nodiscard]] inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// rho_A = Tr_B |v><v| on the block A = sites 0..l-1.
struct ReducedDensityMatrix {
  int l = 0;
  Eigen::MatrixXcd matrix;
  /// Smallest eigenvalue found during validation (NaN when not validated).
  /// Values in (-1e-10, 0) are reported here and left untouched.
  double min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

using RowMajorMatrix = Eigen::Matrix<complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline void require_block(int l, int n, const char* what) {
  if (l < 1 || l >= n) {
    throw ContractViolation(std::string(what) + ": block size l = " + std::to_string(l) + " needs 1 <= l < n = " +
                            std::to_string(n));
  }
}

/// Amplitudes viewed as a 2^l x 2^(n-l) matrix; row = state of sites 0..l-1.
inline Eigen::Map<const RowMajorMatrix> bipartition(const StateVector& v, int l) {
  const Eigen::Index rows = Eigen::Index{1} << l;
  const Eigen::Index cols = Eigen::Index{1} << (v.size() - l);
  return {v.amplitudes().data(), rows, cols};
}

}  // namespace detail

/// Partial trace over sites l..n-1. With `validate`, checks unit trace,
/// Hermiticity and positivity within kRdmTolerance.
[[nodiscard]] inline ReducedDensityMatrix reduce_contiguous(const StateVector& v, int l, bool validate = true) {
  detail::require_block(l, v.size(), "reduce_contiguous");
  if (!v.is_normalized(kRdmTolerance)) throw ContractViolation("reduce_contiguous: state is not normalized");
  const auto m = detail::bipartition(v, l);
  ReducedDensityMatrix rdm;
  rdm.l = l;
  rdm.matrix = m * m.adjoint();
  if (validate) {
    const complex tr = rdm.matrix.trace();
    if (std::abs(tr - 1.0) > kRdmTolerance) throw NumericalError("reduce_contiguous: trace deviates from 1");
    if ((rdm.matrix - rdm.matrix.adjoint()).cwiseAbs().maxCoeff() > kRdmTolerance) {
      throw NumericalError("reduce_contiguous: result not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rdm.matrix, Eigen::EigenvaluesOnly);
    rdm.min_eigenvalue = es.eigenvalues().minCoeff();
    if (rdm.min_eigenvalue < -kRdmTolerance) {
      throw NumericalError("reduce_contiguous: negative eigenvalue " + std::to_string(rdm.min_eigenvalue));
    }
  }
  return rdm;
}

struct PurityResult {
  double purity = 0.0;
  double linear_entropy = 0.0;
};

/// Tr(rho^2) and 1 - Tr(rho^2).
[[nodiscard]] inline PurityResult purity_and_linear_entropy(const ReducedDensityMatrix& rho) {
  const double p = rho.matrix.cwiseAbs2().sum();
  return {p, 1.0 - p};
}

/// Tr(rho_A^2) straight from the state, using the smaller of the two Gram
/// matrices (Tr rho_A^2 = Tr rho_B^2).
[[nodiscard]] inline double block_purity(const StateVector& v, int l) {
  detail::require_block(l, v.size(), "block_purity");
  const auto m = detail::bipartition(v, l);
  if (m.rows() <= m.cols()) return (m * m.adjoint()).cwiseAbs2().sum();
  return (m.adjoint() * m).cwiseAbs2().sum();
}

/// Index of a code tuple (a_1..a_l) with a_1 the most significant base-4 digit.
[[nodiscard]] inline std::vector<int> pauli_index_codes(std::size_t index, int l) {
  std::vector<int> codes(static_cast<std::size_t>(l));
  for (int s = l - 1; s >= 0; --s) {
    codes[static_cast<std::size_t>(s)] = static_cast<int>(index & 3);
    index >>= 2;
  }
  return codes;
}

/// <v| sigma^{a_1}_1 ... sigma^{a_l}_l |v> for all 4^l code tuples, in
/// pauli_index_codes order. Entry 0 (identity) is 1 for a unit vector.
[[nodiscard]] inline std::vector<double> pauli_coefficients(const StateVector& v, int l) {
  detail::require_block(l, v.size(), "pauli_coefficients");
  const auto m = detail::bipartition(v, l);
  const Eigen::MatrixXcd rho = m * m.adjoint();
  const std::size_t count = std::size_t{1} << (2 * l);
  const std::uint64_t dim = std::uint64_t{1} << l;
  std::vector<double> out(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    const auto codes = pauli_index_codes(idx, l);
    const PauliString p = PauliString::from_codes(codes);
    const complex base = Phase(p.y_count()).value();
    complex acc{0.0, 0.0};
    // Tr(rho P) = sum_c <c|rho|c ^ x> f(c), with P|c> = f(c)|c ^ x>.
    for (std::uint64_t c = 0; c < dim; ++c) {
      const double sign = (std::popcount(c & p.z_mask()) & 1) ? -1.0 : 1.0;
      acc += sign * rho(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c ^ p.x_mask()));
    }
    out[idx] = (base * acc).real();
  }
  return out;
}

/// M(a) = n^{-1/2} sum_{j<n} T^j sigma^{a_1}_1 ... sigma^{a_l}_l T^{-j}.
/// Requires a != 0 and 2l < n so that the n translates are distinct strings.
[[nodiscard]] inline OperatorSum build_M(std::span<const int> codes, int n) {
  const int l = static_cast<int>(codes.size());
  if (l < 1) throw ContractViolation("build_M: empty code tuple");
  if (std::all_of(codes.begin(), codes.end(), [](int a) { return a == 0; })) {
    throw ContractViolation("build_M: the all-identity tuple is excluded");
  }
  if (2 * l >= n) {
    throw ContractViolation("build_M: need 2l < n for distinct translates (l = " + std::to_string(l) +
                            ", n = " + std::to_string(n) + ")");
  }
  PauliString base(n);
  for (int s = 0; s < l; ++s) {
    if (codes[static_cast<std::size_t>(s)] < 0 || codes[static_cast<std::size_t>(s)] > 3) {
      throw ContractViolation("build_M: code outside 0..3");
    }
    base = base.with(s, static_cast<Pauli>(codes[static_cast<std::size_t>(s)]));
  }
  const double c = 1.0 / std::sqrt(double(n));
  std::vector<Term<double>> terms;
  for (int j = 0; j < n; ++j) terms.push_back({c, base.translated(j)});
  OperatorSum m(n, std::move(terms));
  if (m.term_count() != static_cast<std::size_t>(n)) {
    throw NumericalError("build_M: translates were not distinct");
  }
  return m;
}

/// Purities Tr(rho_{k,A}^2) of every eigenvector, one list per requested l.
/// Each eigenvector is lifted once.
[[nodiscard]] inline std::vector<std::vector<double>> state_purities(const EigenDecomposition& e,
                                                                     std::span<const int> ls) {
  for (int l : ls) detail::require_block(l, e.size(), "state_purities");
  std::vector<std::vector<double>> out(ls.size(), std::vector<double>(e.dimension()));
  for (std::size_t i = 0; i < e.dimension(); ++i) {
    const StateVector v = e.vector(i);
    for (std::size_t li = 0; li < ls.size(); ++li) out[li][i] = block_purity(v, ls[li]);
  }
  return out;
}

struct PurityAverage {
  int n = 0;
  int l = 0;
  double mean = 0.0;
  std::vector<double> per_state;
  double lower_bound = 0.0;  // 2^-l
  double upper_bound = 0.0;  // 2^-l + 2^l / n
  /// 2l < n: the regime where the average bound is a theorem.
  bool bound_claimed = false;
  /// Basis is a joint (H, T) eigenbasis; otherwise the bound is not guaranteed.
  bool joint_basis = false;
  bool within_bounds = false;

  /// True when the bound is claimed for this basis and it holds.
  [[nodiscard]] bool theorem_check_passes() const { return !bound_claimed || !joint_basis || within_bounds; }
};

[[nodiscard]] inline PurityAverage summarize_purities(std::vector<double> per_state, int n, int l,
                                                      bool joint_basis) {
  PurityAverage r;
  r.n = n;
  r.l = l;
  r.per_state = std::move(per_state);
  r.mean = pairwise_sum(r.per_state) / static_cast<double>(r.per_state.size());
  r.lower_bound = std::ldexp(1.0, -l);
  r.upper_bound = r.lower_bound + std::ldexp(1.0, l) / n;
  r.bound_claimed = 2 * l < n;
  r.joint_basis = joint_basis;
  r.within_bounds = r.mean >= r.lower_bound - kBoundSlack && r.mean <= r.upper_bound + kBoundSlack;
  return r;
}

/// Mean purity on sites 0..l-1 over every basis vector, with the
/// 2^-l <= mean <= 2^-l + 2^l/n check.
[[nodiscard]] inline PurityAverage average_purity(const EigenDecomposition& e, int l) {
  const int ls[1] = {l};
  auto p = state_purities(e, ls);
  return summarize_purities(std::move(p[0]), e.size(), l, e.is_joint_translation_basis());
}

struct EpsilonFraction {
  double fraction = 0.0;
  double markov_bound = 0.0;  // (2^l / n) / epsilon
  bool within_bound = false;
};

/// Fraction of states with purity >= 2^-l + epsilon, against the Markov
/// bound that follows from the average-purity bound.
[[nodiscard]] inline EpsilonFraction epsilon_fraction(std::span<const double> purities, int l, int n,
                                                      double epsilon) {
  if (!(epsilon > 0.0)) throw ContractViolation("epsilon_fraction: epsilon must be positive");
  if (purities.empty()) throw ContractViolation("epsilon_fraction: no purities");
  const double threshold = std::ldexp(1.0, -l) + epsilon;
  const auto count = std::count_if(purities.begin(), purities.end(), [&](double p) { return p >= threshold; });
  EpsilonFraction r;
  r.fraction = static_cast<double>(count) / static_cast<double>(purities.size());
  r.markov_bound = (std::ldexp(1.0, l) / n) / epsilon;
  r.within_bound = r.fraction <= r.markov_bound + kBoundSlack;
  return r;
}

inline constexpr double kPairOnlyTolerance = 1e-8;

struct PairOnlyReport {
  int l = 0;
  /// Spectrum has no gap below the degeneracy tolerance.
  bool hypothesis_met = false;
  double min_relative_gap = 0.0;
  /// max_k |Tr(rho_{k,1}^2) - 1/2| over all eigenstates (one-site block).
  double max_single_site_deviation = 0.0;
  /// max |coefficient| over code tuples with an odd number of non-identity entries.
  double max_odd_coefficient = 0.0;
  /// max |coefficient| over non-identity even-weight tuples; nonzero in generic samples.
  double max_even_coefficient = 0.0;

  [[nodiscard]] bool passes(double tol = kPairOnlyTolerance) const {
    return max_single_site_deviation <= tol && max_odd_coefficient <= tol;
  }
};

/// Exactness checks for chains without local terms: one-site purities equal
/// 1/2 and odd-support coefficients vanish for non-degenerate spectra.
/// When the spectrum is degenerate the report is informational only.
[[nodiscard]] inline PairOnlyReport pair_only_checks(const EigenDecomposition& e, int l,
                                                     double gap_tolerance = kPairOnlyTolerance) {
  detail::require_block(l, e.size(), "pair_only_checks");
  PairOnlyReport r;
  r.l = l;
  const DegeneracyReport deg = detect_degeneracy(e, gap_tolerance);
  r.hypothesis_met = !deg.has_degeneracy();
  r.min_relative_gap = deg.spectral_range > 0 ? deg.min_gap / deg.spectral_range : 0.0;
  const std::size_t count = std::size_t{1} << (2 * l);
  for (std::size_t i = 0; i < e.dimension(); ++i) {
    const StateVector v = e.vector(i);
    r.max_single_site_deviation = std::max(r.max_single_site_deviation, std::abs(block_purity(v, 1) - 0.5));
    const auto coef = pauli_coefficients(v, l);
    for (std::size_t idx = 1; idx < count; ++idx) {
      const auto codes = pauli_index_codes(idx, l);
      const auto weight = std::count_if(codes.begin(), codes.end(), [](int a) { return a != 0; });
      double& slot = (weight % 2 == 1) ? r.max_odd_coefficient : r.max_even_coefficient;
      slot = std::max(slot, std::abs(coef[idx]));
    }
  }
  return r;
}

}  // namespace qchain
