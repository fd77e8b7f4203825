#pragma once

#include <bit>
#include <cmath>
#include <compare>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qchain/errors.hpp"

namespace qchain {

using complex = std::complex<double>;

/// Default absolute tolerance for normalization and Hermiticity checks.
inline constexpr double kDefaultTolerance = 1e-12;

/// Largest supported site count for bit-mask strings.
inline constexpr int kMaxSites = 62;

/// Single-site Pauli codes: 0 = I, 1 = X, 2 = Y, 3 = Z.
enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

/// Sites are numbered 0..n-1 from the left of the tensor product. Site s is
/// stored in bit (n-1-s) of both masks, which is also the bit of the
/// computational-basis index that holds that site's qubit (site 0 is the most
/// significant bit). With this convention the ring translation is a
/// rotate-right of the index bits, and of the masks.
[[nodiscard]] constexpr std::uint64_t site_bit(int n, int site) {
  return std::uint64_t{1} << (n - 1 - site);
}

[[nodiscard]] constexpr std::uint64_t low_mask(int n) {
  return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
}

/// Cyclic rotate-right of the low n bits.
[[nodiscard]] constexpr std::uint64_t rotate_right(std::uint64_t bits, int n,
                                                   int shift = 1) {
  shift %= n;
  if (shift < 0) shift += n;
  if (shift == 0) return bits;
  return ((bits >> shift) | (bits << (n - shift))) & low_mask(n);
}

/// An element of {1, i, -1, -i} stored as the exponent of i.
class Phase {
 public:
  constexpr Phase() = default;
  constexpr explicit Phase(int exponent) : exponent_(static_cast<std::uint8_t>(((exponent % 4) + 4) % 4)) {}

  [[nodiscard]] constexpr int exponent() const { return exponent_; }
  [[nodiscard]] complex value() const {
    constexpr double re[4] = {1, 0, -1, 0};
    constexpr double im[4] = {0, 1, 0, -1};
    return {re[exponent_], im[exponent_]};
  }
  [[nodiscard]] constexpr Phase conj() const { return Phase(-exponent_); }
  [[nodiscard]] constexpr bool is_real() const { return exponent_ % 2 == 0; }

  constexpr Phase& operator*=(Phase other) {
    exponent_ = static_cast<std::uint8_t>((exponent_ + other.exponent_) & 3);
    return *this;
  }
  friend constexpr Phase operator*(Phase a, Phase b) { return a *= b; }
  friend constexpr bool operator==(Phase, Phase) = default;

  [[nodiscard]] std::string str() const {
    constexpr const char* names[4] = {"+1", "+i", "-1", "-i"};
    return names[exponent_];
  }

 private:
  std::uint8_t exponent_ = 0;
};

/// n-site tensor product of Pauli matrices in symplectic (x, z) form.
class PauliString {
 public:
  PauliString() = default;

  /// Identity on n sites.
  explicit PauliString(int n) : PauliString(n, 0, 0) {}

  PauliString(int n, std::uint64_t x_mask, std::uint64_t z_mask)
      : n_(n), x_(x_mask), z_(z_mask) {
    if (n < 1 || n > kMaxSites) {
      throw ContractViolation("PauliString: site count " + std::to_string(n) +
                              " outside [1, " + std::to_string(kMaxSites) + "]");
    }
    if (((x_ | z_) & ~low_mask(n)) != 0) {
      throw ContractViolation("PauliString: mask bits beyond site count");
    }
  }

  [[nodiscard]] static PauliString single(int n, int site, Pauli p) {
    return PauliString(n).with(site, p);
  }

  /// Paper-style codes a_1..a_n in {0,1,2,3}.
  [[nodiscard]] static PauliString from_codes(std::span<const int> codes) {
    PauliString out(static_cast<int>(codes.size()));
    for (std::size_t s = 0; s < codes.size(); ++s) {
      if (codes[s] < 0 || codes[s] > 3) {
        throw ContractViolation("PauliString: code outside 0..3");
      }
      out = out.with(static_cast<int>(s), static_cast<Pauli>(codes[s]));
    }
    return out;
  }

  /// Parses "XZIIY" (characters I/X/Y/Z, '_' accepted for I).
  [[nodiscard]] static PauliString parse(std::string_view text) {
    if (text.empty()) throw ContractViolation("PauliString: empty literal");
    PauliString out(static_cast<int>(text.size()));
    for (std::size_t s = 0; s < text.size(); ++s) {
      Pauli p;
      switch (text[s]) {
        case 'I': case '_': p = Pauli::I; break;
        case 'X': p = Pauli::X; break;
        case 'Y': p = Pauli::Y; break;
        case 'Z': p = Pauli::Z; break;
        default:
          throw ContractViolation("PauliString: bad character '" +
                                  std::string(1, text[s]) + "' in literal");
      }
      out = out.with(static_cast<int>(s), p);
    }
    return out;
  }

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] std::uint64_t x_mask() const { return x_; }
  [[nodiscard]] std::uint64_t z_mask() const { return z_; }
  [[nodiscard]] std::uint64_t support() const { return x_ | z_; }
  [[nodiscard]] int weight() const { return std::popcount(support()); }
  [[nodiscard]] int y_count() const { return std::popcount(x_ & z_); }
  [[nodiscard]] bool is_identity() const { return support() == 0; }

  [[nodiscard]] Pauli at(int site) const {
    const std::uint64_t bit = site_bit(n_, site);
    const bool x = (x_ & bit) != 0;
    const bool z = (z_ & bit) != 0;
    if (x && z) return Pauli::Y;
    if (x) return Pauli::X;
    if (z) return Pauli::Z;
    return Pauli::I;
  }

  [[nodiscard]] PauliString with(int site, Pauli p) const {
    if (site < 0 || site >= n_) {
      throw ContractViolation("PauliString: site " + std::to_string(site) +
                              " out of range");
    }
    const std::uint64_t bit = site_bit(n_, site);
    std::uint64_t x = x_ & ~bit;
    std::uint64_t z = z_ & ~bit;
    if (p == Pauli::X || p == Pauli::Y) x |= bit;
    if (p == Pauli::Z || p == Pauli::Y) z |= bit;
    return PauliString(n_, x, z);
  }

  /// T^shift P T^-shift: the operator on site s moves to site s + shift.
  [[nodiscard]] PauliString translated(int shift = 1) const {
    return PauliString(n_, rotate_right(x_, n_, shift),
                       rotate_right(z_, n_, shift));
  }

  [[nodiscard]] bool commutes_with(const PauliString& other) const {
    detail::require_same_size(n_, other.n_, "commutes_with");
    return (std::popcount((x_ & other.z_) ^ (z_ & other.x_)) & 1) == 0;
  }

  [[nodiscard]] std::string str() const {
    std::string out(static_cast<std::size_t>(n_), 'I');
    for (int s = 0; s < n_; ++s) out[s] = "IXYZ"[static_cast<int>(at(s))];
    return out;
  }

  friend auto operator<=>(const PauliString&, const PauliString&) = default;
  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  int n_ = 1;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

struct PauliStringHash {
  std::size_t operator()(const PauliString& p) const noexcept {
    return std::hash<std::uint64_t>{}(p.x_mask() * 0x9E3779B97F4A7C15ULL ^
                                      p.z_mask());
  }
};

/// phase * string. Hermitian exactly when the phase is real.
struct PhasedString {
  Phase phase;
  PauliString string;

  PhasedString() = default;
  PhasedString(Phase ph, PauliString s) : phase(ph), string(std::move(s)) {}
  /* implicit */ PhasedString(PauliString s) : string(std::move(s)) {}

  /// Parses an optional leading phase token (+1, +i, -1, -i, or a bare sign)
  /// followed by a string literal, e.g. "-iXZ" or "+1IXYZ".
  [[nodiscard]] static PhasedString parse(std::string_view text) {
    int exponent = 0;
    if (!text.empty() && (text.front() == '+' || text.front() == '-')) {
      if (text.front() == '-') exponent = 2;
      text.remove_prefix(1);
      if (!text.empty() && text.front() == 'i') {
        exponent += 1;
        text.remove_prefix(1);
      } else if (!text.empty() && text.front() == '1') {
        text.remove_prefix(1);
      }
    }
    return {Phase(exponent), PauliString::parse(text)};
  }

  [[nodiscard]] std::string str() const { return phase.str() + string.str(); }
  friend bool operator==(const PhasedString&, const PhasedString&) = default;
};

/// Matrix product a * b.
[[nodiscard]] inline PhasedString multiply(const PauliString& a,
                                           const PauliString& b) {
  detail::require_same_size(a.size(), b.size(), "multiply");
  // With P = i^{#Y} X^x Z^z, moving Z^{z_a} past X^{x_b} contributes
  // (-1)^{|z_a & x_b|}.
  const std::uint64_t x = a.x_mask() ^ b.x_mask();
  const std::uint64_t z = a.z_mask() ^ b.z_mask();
  const int exponent = a.y_count() + b.y_count() +
                       2 * std::popcount(a.z_mask() & b.x_mask()) -
                       std::popcount(x & z);
  return {Phase(exponent), PauliString(a.size(), x, z)};
}

[[nodiscard]] inline PhasedString multiply(const PhasedString& a,
                                           const PhasedString& b) {
  PhasedString out = multiply(a.string, b.string);
  out.phase *= a.phase * b.phase;
  return out;
}

/// Scaled Hilbert-Schmidt inner product (1/2^n) Tr(A B^dagger).
[[nodiscard]] inline complex hs_inner(const PhasedString& a,
                                      const PhasedString& b) {
  detail::require_same_size(a.string.size(), b.string.size(), "hs_inner");
  if (a.string != b.string) return {0.0, 0.0};
  return (a.phase * b.phase.conj()).value();
}

/// Pure state on n qubits; amplitude index b has site 0 as its most
/// significant bit.
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(int n) : n_(check_sites(n)), amps_(std::size_t{1} << n) {}

  StateVector(int n, std::vector<complex> amplitudes)
      : n_(check_sites(n)), amps_(std::move(amplitudes)) {
    if (amps_.size() != (std::size_t{1} << n)) {
      throw DimensionError("StateVector: expected 2^" + std::to_string(n) +
                           " amplitudes, got " + std::to_string(amps_.size()));
    }
  }

  [[nodiscard]] static StateVector basis(int n, std::uint64_t index) {
    StateVector v(n);
    if (index >= v.dimension()) {
      throw ContractViolation("StateVector: basis index out of range");
    }
    v.amps_[index] = 1.0;
    return v;
  }

  [[nodiscard]] int size() const { return n_; }
  [[nodiscard]] std::size_t dimension() const { return amps_.size(); }
  [[nodiscard]] std::span<const complex> amplitudes() const { return amps_; }
  [[nodiscard]] std::span<complex> amplitudes() { return amps_; }
  [[nodiscard]] const complex& operator[](std::size_t i) const { return amps_[i]; }
  [[nodiscard]] complex& operator[](std::size_t i) { return amps_[i]; }

  [[nodiscard]] double norm() const {
    double s = 0.0;
    for (const complex& a : amps_) s += std::norm(a);
    return std::sqrt(s);
  }
  [[nodiscard]] bool is_normalized(double tol = kDefaultTolerance) const {
    return std::abs(norm() - 1.0) <= tol;
  }
  void normalize() {
    const double nrm = norm();
    if (nrm == 0.0) throw ContractViolation("StateVector: zero vector");
    for (complex& a : amps_) a /= nrm;
  }

  [[nodiscard]] complex inner(const StateVector& other) const {
    detail::require_same_size(n_, other.n_, "inner");
    complex s{0.0, 0.0};
    for (std::size_t i = 0; i < amps_.size(); ++i) s += std::conj(amps_[i]) * other.amps_[i];
    return s;
  }

 private:
  static int check_sites(int n) {
    if (n < 1) throw ContractViolation("StateVector: site count must be >= 1");
    if (n > 30) {
      throw CapExceeded("StateVector: site count " + std::to_string(n) +
                        " outside [1, 30]");
    }
    return n;
  }

  int n_ = 0;
  std::vector<complex> amps_;
};

/// Matrix-free action of phase * string on a state.
[[nodiscard]] inline StateVector apply(const PhasedString& p,
                                       const StateVector& v) {
  detail::require_same_size(p.string.size(), v.size(), "apply");
  StateVector out(v.size());
  const std::uint64_t x = p.string.x_mask();
  const std::uint64_t z = p.string.z_mask();
  const complex base = Phase(p.phase.exponent() + p.string.y_count()).value();
  for (std::uint64_t b = 0; b < v.dimension(); ++b) {
    const complex a = (std::popcount(b & z) & 1) ? -v[b] : v[b];
    out[b ^ x] = base * a;
  }
  return out;
}

struct ExpectationValue {
  complex value;
  /// False when the input state was not unit-norm within tolerance.
  bool normalized = true;
};

/// <v| phase * string |v>.
[[nodiscard]] inline ExpectationValue expectation(const PhasedString& p,
                                                  const StateVector& v,
                                                  double tol = kDefaultTolerance) {
  detail::require_same_size(p.string.size(), v.size(), "expectation");
  const std::uint64_t x = p.string.x_mask();
  const std::uint64_t z = p.string.z_mask();
  complex acc{0.0, 0.0};
  for (std::uint64_t b = 0; b < v.dimension(); ++b) {
    const complex a = (std::popcount(b & z) & 1) ? -v[b] : v[b];
    acc += std::conj(v[b ^ x]) * a;
  }
  acc *= Phase(p.phase.exponent() + p.string.y_count()).value();
  return {acc, v.is_normalized(tol)};
}

}  // namespace qchain
