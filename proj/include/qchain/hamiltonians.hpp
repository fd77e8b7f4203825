#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qchain/errors.hpp"
#include "qchain/operator_sum.hpp"
#include "qchain/pauli.hpp"

namespace qchain {

/// The 12 nearest-neighbour coupling slots alpha[a][b], a in 0..3 (0 = the
/// identity on the left site), b in 1..3. Slot index is 3a + (b - 1).
using BondCoefficients = std::array<double, 12>;

[[nodiscard]] constexpr std::size_t bond_slot(int a, int b) {
  return static_cast<std::size_t>(3 * a + (b - 1));
}

/// Per-bond couplings of a ring of n qubits. Bond j (0-based) couples site j
/// with site (j + 1) mod n; bond n-1 is the wrap bond.
struct ChainCoefficients {
  int n = 0;
  std::vector<BondCoefficients> alpha;
  /// Optional recorded bound |alpha| < C. Metadata only; never enforced.
  std::optional<double> bound_c;

  ChainCoefficients() = default;
  explicit ChainCoefficients(int sites) : n(sites), alpha(static_cast<std::size_t>(sites), BondCoefficients{}) {}

  [[nodiscard]] static ChainCoefficients uniform(int sites, const BondCoefficients& a) {
    ChainCoefficients c(sites);
    for (auto& bond : c.alpha) bond = a;
    return c;
  }

  [[nodiscard]] double& at(int bond, int a, int b) { return alpha.at(static_cast<std::size_t>(bond))[bond_slot(a, b)]; }
  [[nodiscard]] double at(int bond, int a, int b) const { return alpha.at(static_cast<std::size_t>(bond))[bond_slot(a, b)]; }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const auto& bond : alpha) {
      for (double v : bond) m = std::max(m, std::abs(v));
    }
    return m;
  }

  friend bool operator==(const ChainCoefficients&, const ChainCoefficients&) = default;
};

/// Two-body couplings alpha[a][b], a, b in 1..3, slot 3(a - 1) + (b - 1).
using EdgeCoefficients = std::array<double, 9>;
/// Local field alpha[a], a in 1..3, slot a - 1.
using FieldCoefficients = std::array<double, 3>;

struct Edge {
  int j = 0;
  int k = 0;
  EdgeCoefficients alpha{};

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Arbitrary interaction geometry on n qubits (0-based sites, j < k).
struct InteractionGraph {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<FieldCoefficients> fields;  // empty or size n

  void validate() const {
    if (n < 1) throw ContractViolation("InteractionGraph: n must be >= 1");
    if (!fields.empty() && fields.size() != static_cast<std::size_t>(n)) {
      throw ContractViolation("InteractionGraph: fields must have one entry per site");
    }
    std::set<std::pair<int, int>> seen;
    for (const Edge& e : edges) {
      if (e.j < 0 || e.k >= n || e.j >= e.k) {
        throw ContractViolation("InteractionGraph: edge (" + std::to_string(e.j) + ", " +
                                std::to_string(e.k) + ") out of range or not j < k");
      }
      if (!seen.insert({e.j, e.k}).second) {
        throw ContractViolation("InteractionGraph: duplicate edge (" + std::to_string(e.j) +
                                ", " + std::to_string(e.k) + ")");
      }
    }
  }

  friend bool operator==(const InteractionGraph&, const InteractionGraph&) = default;
};

namespace detail {

inline void require_ring(int n, const char* what) {
  if (n < 3) {
    throw ContractViolation(std::string(what) + ": ring needs n >= 3 (got " +
                            std::to_string(n) + ")");
  }
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw ContractViolation(std::string(what) + ": non-finite coefficient");
}

inline std::vector<Term<double>> chain_terms(const ChainCoefficients& c, double scale,
                                             const char* what) {
  require_ring(c.n, what);
  if (c.alpha.size() != static_cast<std::size_t>(c.n)) {
    throw ContractViolation(std::string(what) + ": expected one coefficient set per bond");
  }
  std::vector<Term<double>> terms;
  terms.reserve(12 * static_cast<std::size_t>(c.n));
  for (int j = 0; j < c.n; ++j) {
    const int next = (j + 1) % c.n;
    for (int a = 0; a <= 3; ++a) {
      for (int b = 1; b <= 3; ++b) {
        const double v = c.at(j, a, b);
        require_finite(v, what);
        if (v == 0.0) continue;
        PauliString p = PauliString(c.n).with(j, static_cast<Pauli>(a)).with(next, static_cast<Pauli>(b));
        terms.push_back({scale * v, p});
      }
    }
  }
  return terms;
}

}  // namespace detail

/// (1/sqrt n) sum_j sum_{a,b} alpha[j][a][b] sigma_j^a sigma_{j+1}^b on a ring.
[[nodiscard]] inline OperatorSum build_nn_chain(const ChainCoefficients& c) {
  detail::require_ring(c.n, "build_nn_chain");
  return OperatorSum(c.n, detail::chain_terms(c, 1.0 / std::sqrt(double(c.n)), "build_nn_chain"));
}

/// Translation-invariant chain: the same 12 couplings on every bond.
[[nodiscard]] inline OperatorSum build_invariant(const BondCoefficients& alpha, int n) {
  detail::require_ring(n, "build_invariant");
  return build_nn_chain(ChainCoefficients::uniform(n, alpha));
}

/// Two-body-only chain, no 1/sqrt(n) prefactor. Every a = 0 slot must be zero.
[[nodiscard]] inline OperatorSum build_pair_only(const ChainCoefficients& c) {
  detail::require_ring(c.n, "build_pair_only");
  for (int j = 0; j < static_cast<int>(c.alpha.size()); ++j) {
    for (int b = 1; b <= 3; ++b) {
      if (c.at(j, 0, b) != 0.0) {
        throw ContractViolation("build_pair_only: local term on bond " + std::to_string(j));
      }
    }
  }
  return OperatorSum(c.n, detail::chain_terms(c, 1.0, "build_pair_only"));
}

/// scale * (sum_edges sum_{a,b} alpha sigma_j^a sigma_k^b + sum_j sum_a h_j^a sigma_j^a).
[[nodiscard]] inline OperatorSum build_general(const InteractionGraph& g, double scale) {
  g.validate();
  std::vector<Term<double>> terms;
  for (const Edge& e : g.edges) {
    for (int a = 1; a <= 3; ++a) {
      for (int b = 1; b <= 3; ++b) {
        const double v = e.alpha[static_cast<std::size_t>(3 * (a - 1) + (b - 1))];
        detail::require_finite(v, "build_general");
        if (v == 0.0) continue;
        terms.push_back({scale * v, PauliString(g.n).with(e.j, static_cast<Pauli>(a)).with(e.k, static_cast<Pauli>(b))});
      }
    }
  }
  for (std::size_t j = 0; j < g.fields.size(); ++j) {
    for (int a = 1; a <= 3; ++a) {
      const double v = g.fields[j][static_cast<std::size_t>(a - 1)];
      detail::require_finite(v, "build_general");
      if (v == 0.0) continue;
      terms.push_back({scale * v, PauliString::single(g.n, static_cast<int>(j), static_cast<Pauli>(a))});
    }
  }
  return OperatorSum(g.n, std::move(terms));
}

/// Same as above with the default 1/sqrt(n) scale.
[[nodiscard]] inline OperatorSum build_general(const InteractionGraph& g) {
  return build_general(g, 1.0 / std::sqrt(double(g.n)));
}

/// (1/sqrt n) sum_j (X_j X_{j+1} + alpha1 X_j + alpha3 Z_j).
[[nodiscard]] inline OperatorSum build_ba(double alpha1, double alpha3, int n) {
  detail::require_ring(n, "build_ba");
  detail::require_finite(alpha1, "build_ba");
  detail::require_finite(alpha3, "build_ba");
  const double s = 1.0 / std::sqrt(double(n));
  std::vector<Term<double>> terms;
  for (int j = 0; j < n; ++j) {
    terms.push_back({s, PauliString(n).with(j, Pauli::X).with((j + 1) % n, Pauli::X)});
    terms.push_back({s * alpha1, PauliString::single(n, j, Pauli::X)});
    terms.push_back({s * alpha3, PauliString::single(n, j, Pauli::Z)});
  }
  return OperatorSum(n, std::move(terms));
}

/// sum_j (epsilon X_j Y_{j+1} + Z_j), no prefactor.
[[nodiscard]] inline OperatorSum build_exyz(double epsilon, int n) {
  detail::require_ring(n, "build_exyz");
  detail::require_finite(epsilon, "build_exyz");
  std::vector<Term<double>> terms;
  for (int j = 0; j < n; ++j) {
    terms.push_back({epsilon, PauliString(n).with(j, Pauli::X).with((j + 1) % n, Pauli::Y)});
    terms.push_back({1.0, PauliString::single(n, j, Pauli::Z)});
  }
  return OperatorSum(n, std::move(terms));
}

/// Rescales H so that (1/2^n) Tr(H^2) = 1.
[[nodiscard]] inline OperatorSum normalize(const OperatorSum& h) {
  const double s2 = h.squared_norm();
  if (s2 == 0.0) throw ContractViolation("normalize: zero operator has no normalization");
  return h * (1.0 / std::sqrt(s2));
}

/// Empirical coupling bound max |alpha| of a 1/sqrt(n)-scaled chain: the
/// largest coefficient times sqrt(n).
[[nodiscard]] inline double empirical_alpha_bound(const OperatorSum& h) {
  return h.max_abs_coefficient() * std::sqrt(double(h.size()));
}

/// Edges of a p x p cyclic (torus) lattice, site index = row * p + col.
/// Parallel edges of small tori (p = 2) are merged.
[[nodiscard]] inline InteractionGraph cyclic_lattice(int p, const EdgeCoefficients& alpha) {
  if (p < 2) throw ContractViolation("cyclic_lattice: p must be >= 2");
  InteractionGraph g;
  g.n = p * p;
  std::set<std::pair<int, int>> seen;
  auto add = [&](int u, int v) {
    const std::pair<int, int> key = std::minmax(u, v);
    if (u != v && seen.insert(key).second) g.edges.push_back({key.first, key.second, alpha});
  };
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < p; ++c) {
      add(r * p + c, r * p + (c + 1) % p);
      add(r * p + c, ((r + 1) % p) * p + c);
    }
  }
  return g;
}

/// Nearest-neighbour ring (j, j+1 mod n) with the given couplings.
[[nodiscard]] inline InteractionGraph ring_graph(int n, const EdgeCoefficients& alpha) {
  InteractionGraph g;
  g.n = n;
  std::set<std::pair<int, int>> seen;
  for (int j = 0; j < n; ++j) {
    const int k = (j + 1) % n;
    const std::pair<int, int> key{std::min(j, k), std::max(j, k)};
    if (key.first != key.second && seen.insert(key).second) g.edges.push_back({key.first, key.second, alpha});
  }
  return g;
}

enum class ModelKind { nn, invariant, pair_only, general };

[[nodiscard]] inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::nn: return "nn";
    case ModelKind::invariant: return "invariant";
    case ModelKind::pair_only: return "pair_only";
    case ModelKind::general: return "general";
  }
  return "?";
}

[[nodiscard]] inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
  if (s == "nn") return ModelKind::nn;
  if (s == "invariant" || s == "inv") return ModelKind::invariant;
  if (s == "pair_only" || s == "pair") return ModelKind::pair_only;
  if (s == "general") return ModelKind::general;
  return std::nullopt;
}

/// Independent per-sample seed derived from (seed, sample_id) via seed_seq.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t sample_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(sample_id), static_cast<std::uint32_t>(sample_id >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

/// Generator used for every random coefficient: std::mt19937_64 seeded with
/// the 64-bit seed, feeding std::normal_distribution<double>(0, 1).
using CoefficientEngine = std::mt19937_64;

/// Draws i.i.d. standard normal couplings. Draw order is bond-major then slot
/// order (for general graphs: ring edges, then per-site fields).
struct SampledCoefficients {
  ModelKind kind = ModelKind::nn;
  ChainCoefficients chain;       // nn, invariant, pair_only
  InteractionGraph graph;        // general
};

[[nodiscard]] inline SampledCoefficients sample_coefficients(ModelKind kind, int n, std::uint64_t seed) {
  detail::require_ring(n, "sample_random");
  CoefficientEngine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SampledCoefficients out;
  out.kind = kind;
  switch (kind) {
    case ModelKind::nn: {
      out.chain = ChainCoefficients(n);
      for (auto& bond : out.chain.alpha) {
        for (double& v : bond) v = normal(rng);
      }
      break;
    }
    case ModelKind::invariant: {
      BondCoefficients a{};
      for (double& v : a) v = normal(rng);
      out.chain = ChainCoefficients::uniform(n, a);
      break;
    }
    case ModelKind::pair_only: {
      out.chain = ChainCoefficients(n);
      for (auto& bond : out.chain.alpha) {
        for (int a = 1; a <= 3; ++a) {
          for (int b = 1; b <= 3; ++b) bond[bond_slot(a, b)] = normal(rng);
        }
      }
      break;
    }
    case ModelKind::general: {
      out.graph = ring_graph(n, EdgeCoefficients{});
      for (Edge& e : out.graph.edges) {
        for (double& v : e.alpha) v = normal(rng);
      }
      out.graph.fields.assign(static_cast<std::size_t>(n), FieldCoefficients{});
      for (auto& f : out.graph.fields) {
        for (double& v : f) v = normal(rng);
      }
      break;
    }
  }
  return out;
}

/// Seeded random Hamiltonian of the given family. With `normalize_result`
/// the output has unit second moment (1/2^n) Tr(H^2) = 1.
[[nodiscard]] inline OperatorSum sample_random(ModelKind kind, int n, std::uint64_t seed,
                                               bool normalize_result = true) {
  const SampledCoefficients c = sample_coefficients(kind, n, seed);
  OperatorSum h;
  switch (kind) {
    case ModelKind::nn:
    case ModelKind::invariant: h = build_nn_chain(c.chain); break;
    case ModelKind::pair_only: h = build_pair_only(c.chain); break;
    case ModelKind::general: h = build_general(c.graph); break;
  }
  return normalize_result ? normalize(h) : h;
}

}  // namespace qchain
