#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "qchain/errors.hpp"
#include "qchain/pauli.hpp"

namespace qchain {

/// Largest site count for which 2^n x 2^n dense matrices are built by default.
inline constexpr int kDefaultDenseCap = 14;

using DenseMatrix = Eigen::MatrixXcd;

template <class Scalar>
struct Term {
  Scalar coefficient;
  PauliString string;

  friend bool operator==(const Term&, const Term&) = default;
};

/// Linear combination of distinct Pauli strings. Terms are kept sorted by
/// (x_mask, z_mask); duplicate strings are merged and exact zeros dropped.
/// With real coefficients the operator is Hermitian.
template <class Scalar>
class BasicOperatorSum {
 public:
  using scalar_type = Scalar;
  using term_type = Term<Scalar>;

  BasicOperatorSum() = default;
  explicit BasicOperatorSum(int n) : n_(n) { PauliString check(n); }

  BasicOperatorSum(int n, std::vector<term_type> terms) : n_(n), terms_(std::move(terms)) {
    PauliString check(n);
    for (const term_type& t : terms_) {
      detail::require_same_size(n_, t.string.size(), "OperatorSum");
      if (!is_finite(t.coefficient)) {
        throw ContractViolation("OperatorSum: non-finite coefficient on " +
                                t.string.str());
      }
    }
    canonicalize();
  }

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] const std::vector<term_type>& terms() const { return terms_; }
  [[nodiscard]] std::size_t term_count() const { return terms_.size(); }
  [[nodiscard]] bool empty() const { return terms_.empty(); }

  /// Coefficient of a string, zero when absent.
  [[nodiscard]] Scalar coefficient(const PauliString& p) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), p,
                               [](const term_type& t, const PauliString& q) {
                                 return t.string < q;
                               });
    if (it != terms_.end() && it->string == p) return it->coefficient;
    return Scalar{};
  }

  /// (1/2^n) Tr(A^2) for Hermitian A, in general (1/2^n) Tr(A A^dagger).
  [[nodiscard]] double squared_norm() const {
    double s = 0.0;
    for (const term_type& t : terms_) s += std::norm(t.coefficient);
    return s;
  }

  [[nodiscard]] double max_abs_coefficient() const {
    double m = 0.0;
    for (const term_type& t : terms_) m = std::max(m, std::abs(t.coefficient));
    return m;
  }

  /// Normalized trace (1/2^n) Tr(A): the identity coefficient.
  [[nodiscard]] Scalar normalized_trace() const { return coefficient(PauliString(n_)); }

  [[nodiscard]] BasicOperatorSum translated(int shift = 1) const {
    std::vector<term_type> out;
    out.reserve(terms_.size());
    for (const term_type& t : terms_) out.push_back({t.coefficient, t.string.translated(shift)});
    return BasicOperatorSum(n_, std::move(out));
  }

  BasicOperatorSum& operator*=(Scalar s) {
    for (term_type& t : terms_) t.coefficient *= s;
    if (s == Scalar{}) terms_.clear();
    return *this;
  }
  friend BasicOperatorSum operator*(BasicOperatorSum a, Scalar s) { return a *= s; }
  friend BasicOperatorSum operator*(Scalar s, BasicOperatorSum a) { return a *= s; }

  friend BasicOperatorSum operator+(const BasicOperatorSum& a, const BasicOperatorSum& b) {
    detail::require_same_size(a.n_, b.n_, "OperatorSum +");
    std::vector<term_type> all = a.terms_;
    all.insert(all.end(), b.terms_.begin(), b.terms_.end());
    return BasicOperatorSum(a.n_, std::move(all));
  }
  friend BasicOperatorSum operator-(const BasicOperatorSum& a, const BasicOperatorSum& b) {
    return a + b * Scalar{-1};
  }

  friend bool operator==(const BasicOperatorSum&, const BasicOperatorSum&) = default;

  [[nodiscard]] std::string str() const {
    std::string out;
    for (const term_type& t : terms_) {
      if (!out.empty()) out += " + ";
      if constexpr (std::is_same_v<Scalar, double>) {
        out += std::to_string(t.coefficient);
      } else {
        out += "(" + std::to_string(t.coefficient.real()) + "," +
               std::to_string(t.coefficient.imag()) + ")";
      }
      out += "*" + t.string.str();
    }
    return out.empty() ? "0" : out;
  }

 private:
  static bool is_finite(double v) { return std::isfinite(v); }
  static bool is_finite(const complex& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }

  void canonicalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const term_type& a, const term_type& b) { return a.string < b.string; });
    std::vector<term_type> merged;
    merged.reserve(terms_.size());
    for (const term_type& t : terms_) {
      if (!merged.empty() && merged.back().string == t.string) {
        merged.back().coefficient += t.coefficient;
      } else {
        merged.push_back(t);
      }
    }
    std::erase_if(merged, [](const term_type& t) { return t.coefficient == Scalar{}; });
    terms_ = std::move(merged);
  }

  int n_ = 1;
  std::vector<term_type> terms_;
};

using OperatorSum = BasicOperatorSum<double>;
using ComplexOperatorSum = BasicOperatorSum<complex>;

[[nodiscard]] inline ComplexOperatorSum to_complex(const OperatorSum& a) {
  std::vector<Term<complex>> out;
  out.reserve(a.term_count());
  for (const auto& t : a.terms()) out.push_back({complex(t.coefficient), t.string});
  return ComplexOperatorSum(a.size(), std::move(out));
}

/// Operator product A * B expanded in the Pauli basis.
template <class SA, class SB>
[[nodiscard]] ComplexOperatorSum product(const BasicOperatorSum<SA>& a,
                                         const BasicOperatorSum<SB>& b) {
  detail::require_same_size(a.size(), b.size(), "product");
  std::unordered_map<PauliString, complex, PauliStringHash> acc;
  acc.reserve(a.term_count() * b.term_count());
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      const PhasedString p = multiply(ta.string, tb.string);
      acc[p.string] += complex(ta.coefficient) * complex(tb.coefficient) * p.phase.value();
    }
  }
  std::vector<Term<complex>> terms;
  terms.reserve(acc.size());
  for (auto& [s, c] : acc) terms.push_back({c, s});
  return ComplexOperatorSum(a.size(), std::move(terms));
}

/// Commutator [A, B] = AB - BA; only anticommuting string pairs contribute.
template <class SA, class SB>
[[nodiscard]] ComplexOperatorSum commutator(const BasicOperatorSum<SA>& a,
                                            const BasicOperatorSum<SB>& b) {
  detail::require_same_size(a.size(), b.size(), "commutator");
  std::unordered_map<PauliString, complex, PauliStringHash> acc;
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      if (ta.string.commutes_with(tb.string)) continue;
      const PhasedString p = multiply(ta.string, tb.string);
      acc[p.string] += 2.0 * complex(ta.coefficient) * complex(tb.coefficient) * p.phase.value();
    }
  }
  std::vector<Term<complex>> terms;
  terms.reserve(acc.size());
  for (auto& [s, c] : acc) terms.push_back({c, s});
  return ComplexOperatorSum(a.size(), std::move(terms));
}

/// Scaled Hilbert-Schmidt inner product (1/2^n) Tr(A B^dagger).
template <class SA, class SB>
[[nodiscard]] complex hs_inner(const BasicOperatorSum<SA>& a, const BasicOperatorSum<SB>& b) {
  detail::require_same_size(a.size(), b.size(), "hs_inner");
  complex s{0.0, 0.0};
  auto ia = a.terms().begin();
  auto ib = b.terms().begin();
  while (ia != a.terms().end() && ib != b.terms().end()) {
    if (ia->string < ib->string) {
      ++ia;
    } else if (ib->string < ia->string) {
      ++ib;
    } else {
      s += complex(ia->coefficient) * std::conj(complex(ib->coefficient));
      ++ia;
      ++ib;
    }
  }
  return s;
}

/// Matrix-free H|v>.
template <class Scalar>
[[nodiscard]] StateVector apply(const BasicOperatorSum<Scalar>& h, const StateVector& v) {
  detail::require_same_size(h.size(), v.size(), "apply");
  StateVector out(v.size());
  for (const auto& t : h.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    const complex base = complex(t.coefficient) * Phase(t.string.y_count()).value();
    for (std::uint64_t b = 0; b < v.dimension(); ++b) {
      const complex a = (std::popcount(b & z) & 1) ? -v[b] : v[b];
      out[b ^ x] += base * a;
    }
  }
  return out;
}

/// Dense 2^n x 2^n matrix of the operator.
template <class Scalar>
[[nodiscard]] DenseMatrix to_dense(const BasicOperatorSum<Scalar>& h,
                                   int dense_cap = kDefaultDenseCap) {
  const int n = h.size();
  if (n > dense_cap) {
    throw CapExceeded("to_dense: n = " + std::to_string(n) + " exceeds dense cap " +
                      std::to_string(dense_cap));
  }
  const Eigen::Index dim = Eigen::Index{1} << n;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (const auto& t : h.terms()) {
    const std::uint64_t x = t.string.x_mask();
    const std::uint64_t z = t.string.z_mask();
    const complex base = complex(t.coefficient) * Phase(t.string.y_count()).value();
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
      const double sign = (std::popcount(b & z) & 1) ? -1.0 : 1.0;
      m(static_cast<Eigen::Index>(b ^ x), static_cast<Eigen::Index>(b)) += sign * base;
    }
  }
  return m;
}

/// Restriction of an operator to the sites it acts on. `sites` lists the
/// original site indices in order; the restricted operator acts on
/// sites.size() qubits.
template <class Scalar>
struct RestrictedOperator {
  BasicOperatorSum<Scalar> op;
  std::vector<int> sites;
};

template <class Scalar>
[[nodiscard]] RestrictedOperator<Scalar> restrict_to_support(const BasicOperatorSum<Scalar>& h) {
  const int n = h.size();
  std::uint64_t support = 0;
  for (const auto& t : h.terms()) support |= t.string.support();
  std::vector<int> sites;
  for (int s = 0; s < n; ++s) {
    if (support & site_bit(n, s)) sites.push_back(s);
  }
  const int m = std::max<int>(1, static_cast<int>(sites.size()));
  std::vector<Term<Scalar>> terms;
  terms.reserve(h.term_count());
  for (const auto& t : h.terms()) {
    PauliString r(m);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      r = r.with(static_cast<int>(i), t.string.at(sites[i]));
    }
    terms.push_back({t.coefficient, r});
  }
  return {BasicOperatorSum<Scalar>(m, std::move(terms)), std::move(sites)};
}

}  // namespace qchain
