#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qchain/errors.hpp"
#include "qchain/operator_sum.hpp"
#include "qchain/pauli.hpp"

namespace qchain {

/// Eigenvectors of one momentum sector, stored as coefficients over the
/// sector's Fourier basis vectors
///   |k, r> = d^{-1/2} sum_{m<d} e^{-2 pi i k m / n} T^m |r>
/// where r is an orbit representative of period d.
struct SectorEigenvectors {
  int k = 0;
  std::vector<std::uint64_t> representatives;
  std::vector<int> periods;
  Eigen::MatrixXcd coefficients;  // columns are eigenvectors
};

/// Ascending eigenvalues plus (optionally) orthonormal eigenvectors, either
/// as a dense 2^n x 2^n matrix or lazily lifted from momentum sectors.
class EigenDecomposition {
 public:
  EigenDecomposition() = default;

  [[nodiscard]] static EigenDecomposition from_dense(int n, std::vector<double> eigenvalues,
                                                     std::optional<Eigen::MatrixXcd> vectors,
                                                     std::optional<double> residual) {
    EigenDecomposition e;
    e.n_ = n;
    e.eigenvalues_ = std::move(eigenvalues);
    e.dense_ = std::move(vectors);
    e.residual_ = residual;
    e.gauge_ = "dense eigensolver output";
    return e;
  }

  /// Merges per-sector results; global order is ascending eigenvalue with
  /// ties broken by momentum k, then by in-sector column.
  [[nodiscard]] static EigenDecomposition from_sectors(int n, std::vector<SectorEigenvectors> sectors,
                                                       const std::vector<std::vector<double>>& sector_values,
                                                       std::optional<double> residual, bool keep_vectors) {
    struct Entry {
      double value;
      int k;
      int sector;
      int column;
    };
    std::vector<Entry> entries;
    for (std::size_t s = 0; s < sectors.size(); ++s) {
      for (std::size_t c = 0; c < sector_values[s].size(); ++c) {
        entries.push_back({sector_values[s][c], sectors[s].k, static_cast<int>(s), static_cast<int>(c)});
      }
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      if (a.value != b.value) return a.value < b.value;
      if (a.k != b.k) return a.k < b.k;
      return a.column < b.column;
    });
    EigenDecomposition e;
    e.n_ = n;
    e.residual_ = residual;
    e.gauge_ = "per-momentum-sector dense eigensolver output (arbitrary gauge within degenerate sector subspaces)";
    std::vector<int> momenta;
    for (const Entry& en : entries) {
      e.eigenvalues_.push_back(en.value);
      momenta.push_back(en.k);
      e.locator_.emplace_back(en.sector, en.column);
    }
    e.momenta_ = std::move(momenta);
    if (keep_vectors) {
      e.sectors_ = std::move(sectors);
    } else {
      e.locator_.clear();
    }
    return e;
  }

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] std::size_t dimension() const { return eigenvalues_.size(); }
  [[nodiscard]] const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  [[nodiscard]] const std::optional<std::vector<int>>& momenta() const { return momenta_; }
  [[nodiscard]] std::optional<double> residual() const { return residual_; }
  [[nodiscard]] const std::string& gauge() const { return gauge_; }
  [[nodiscard]] bool has_vectors() const { return dense_.has_value() || !locator_.empty(); }
  [[nodiscard]] bool is_joint_translation_basis() const { return momenta_.has_value(); }

  [[nodiscard]] double spectral_range() const {
    return eigenvalues_.empty() ? 0.0 : eigenvalues_.back() - eigenvalues_.front();
  }

  /// i-th eigenvector in the global ascending order.
  [[nodiscard]] StateVector vector(std::size_t i) const {
    if (!has_vectors()) throw ContractViolation("EigenDecomposition: eigenvectors were not kept");
    if (i >= eigenvalues_.size()) throw ContractViolation("EigenDecomposition: index out of range");
    StateVector v(n_);
    if (dense_) {
      for (Eigen::Index b = 0; b < dense_->rows(); ++b) v[static_cast<std::size_t>(b)] = (*dense_)(b, static_cast<Eigen::Index>(i));
      return v;
    }
    const auto [s, c] = locator_[i];
    const SectorEigenvectors& sec = sectors_[static_cast<std::size_t>(s)];
    const double theta = 2.0 * std::numbers::pi * sec.k / n_;
    for (std::size_t a = 0; a < sec.representatives.size(); ++a) {
      const complex coef = sec.coefficients(static_cast<Eigen::Index>(a), c);
      if (coef == complex{}) continue;
      const int d = sec.periods[a];
      const double norm = 1.0 / std::sqrt(double(d));
      std::uint64_t b = sec.representatives[a];
      for (int m = 0; m < d; ++m) {
        v[b] += coef * norm * std::polar(1.0, -theta * m);
        b = rotate_right(b, n_, 1);
      }
    }
    return v;
  }

 private:
  int n_ = 0;
  std::vector<double> eigenvalues_;
  std::optional<std::vector<int>> momenta_;
  std::optional<double> residual_;
  std::string gauge_;
  std::optional<Eigen::MatrixXcd> dense_;
  std::vector<SectorEigenvectors> sectors_;
  std::vector<std::pair<int, int>> locator_;
};

/// Full dense diagonalization. Eigenvalues ascending; with vectors the
/// residual max_k ||H v_k - lambda_k v_k|| is reported.
[[nodiscard]] inline EigenDecomposition diagonalize_dense(const OperatorSum& h, bool with_vectors = true,
                                                          int dense_cap = kDefaultDenseCap) {
  const DenseMatrix m = to_dense(h, dense_cap);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(
      m, with_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("diagonalize_dense: eigensolver failed for n = " + std::to_string(h.size()));
  }
  std::vector<double> values(solver.eigenvalues().data(),
                             solver.eigenvalues().data() + solver.eigenvalues().size());
  if (!with_vectors) return EigenDecomposition::from_dense(h.size(), std::move(values), std::nullopt, std::nullopt);
  const DenseMatrix& vecs = solver.eigenvectors();
  const DenseMatrix r = m * vecs - vecs * solver.eigenvalues().asDiagonal();
  const double residual = r.colwise().norm().maxCoeff();
  return EigenDecomposition::from_dense(h.size(), std::move(values), vecs, residual);
}

struct DegeneracyReport {
  double relative_tolerance = 0.0;
  double spectral_range = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();
  /// Sizes of consecutive clusters in ascending order; singletons included.
  std::vector<std::size_t> cluster_sizes;

  [[nodiscard]] bool has_degeneracy() const {
    return std::any_of(cluster_sizes.begin(), cluster_sizes.end(), [](std::size_t s) { return s > 1; });
  }
  /// Every eigenvalue sits in a cluster of exactly two (Kramers-style pairs).
  [[nodiscard]] bool all_paired() const {
    return !cluster_sizes.empty() &&
           std::all_of(cluster_sizes.begin(), cluster_sizes.end(), [](std::size_t s) { return s == 2; });
  }
};

inline constexpr double kDefaultDegeneracyTolerance = 1e-10;

/// Groups sorted eigenvalues whose consecutive gaps fall below
/// rel_tol * spectral range.
[[nodiscard]] inline DegeneracyReport detect_degeneracy(const std::vector<double>& sorted,
                                                        double rel_tol = kDefaultDegeneracyTolerance) {
  if (sorted.empty()) throw ContractViolation("detect_degeneracy: empty spectrum");
  if (!std::is_sorted(sorted.begin(), sorted.end())) {
    throw ContractViolation("detect_degeneracy: eigenvalues must be sorted");
  }
  DegeneracyReport r;
  r.relative_tolerance = rel_tol;
  r.spectral_range = sorted.back() - sorted.front();
  const double threshold = rel_tol * r.spectral_range;
  std::size_t run = 1;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double gap = sorted[i] - sorted[i - 1];
    r.min_gap = std::min(r.min_gap, gap);
    if (gap < threshold || gap == 0.0) {
      ++run;
    } else {
      r.cluster_sizes.push_back(run);
      run = 1;
    }
  }
  r.cluster_sizes.push_back(run);
  return r;
}

[[nodiscard]] inline DegeneracyReport detect_degeneracy(const EigenDecomposition& e,
                                                        double rel_tol = kDefaultDegeneracyTolerance) {
  return detect_degeneracy(e.eigenvalues(), rel_tol);
}

/// log of prod_{j<k} (lambda_k - lambda_j)^2, i.e. log det(V^dagger V) of the
/// Vandermonde matrix, summed in log space. -infinity on an exact tie.
[[nodiscard]] inline double discriminant_log(const std::vector<double>& eigenvalues) {
  double acc = 0.0;
  for (std::size_t k = 1; k < eigenvalues.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = std::abs(eigenvalues[k] - eigenvalues[j]);
      if (d == 0.0) return -std::numeric_limits<double>::infinity();
      acc += 2.0 * std::log(d);
    }
  }
  return acc;
}

[[nodiscard]] inline double discriminant_log(const EigenDecomposition& e) {
  return discriminant_log(e.eigenvalues());
}

/// The ring translation operator T^shift as a commutator operand.
struct Translation {
  int shift = 1;
};

/// ||AB - BA||_F / 2^{n/2}, evaluated exactly through the Pauli expansion
/// (the scaled Frobenius norm is the l2 norm of Pauli coefficients).
template <class SA, class SB>
[[nodiscard]] double commutator_norm(const BasicOperatorSum<SA>& a, const BasicOperatorSum<SB>& b) {
  return std::sqrt(commutator(a, b).squared_norm());
}

/// ||A T - T A||_F / 2^{n/2} = ||T A T^-1 - A||_F / 2^{n/2}.
template <class S>
[[nodiscard]] double commutator_norm(const BasicOperatorSum<S>& a, Translation t) {
  return std::sqrt((a.translated(t.shift) - a).squared_norm());
}

/// CSV with columns index,eigenvalue,momentum_k,min_gap_flag. The flag marks
/// eigenvalues whose nearest neighbour lies within rel_tol * range.
inline void write_spectrum_csv(std::ostream& os, const EigenDecomposition& e,
                               double rel_tol = kDefaultDegeneracyTolerance) {
  const auto& v = e.eigenvalues();
  const double threshold = rel_tol * e.spectral_range();
  os << "index,eigenvalue,momentum_k,min_gap_flag\n";
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const bool close_left = i > 0 && v[i] - v[i - 1] <= threshold;
    const bool close_right = i + 1 < v.size() && v[i + 1] - v[i] <= threshold;
    os << i << ',' << v[i] << ',';
    if (e.momenta()) os << (*e.momenta())[i];
    os << ',' << ((close_left || close_right) ? 1 : 0) << '\n';
  }
}

}  // namespace qchain
