#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "qchain/errors.hpp"
#include "qchain/hamiltonians.hpp"

namespace qchain {

/// JSON description of a Hamiltonian:
///   {"kind": ..., "n": int, "seed": int | "coefficients": {...}, "normalize": bool}
///
/// kind is one of nn, invariant, pair_only, general (random when "seed" is
/// given), ba, exyz. Coefficient layouts:
///   nn, pair_only: {"alpha": [[12 numbers] x n]}   slot 3a + (b - 1)
///   invariant:     {"alpha": [12 numbers]}
///   general:       {"edges": [{"j", "k", "alpha": [9]}], "fields": [[3] x n]}
///   ba:            {"alpha1": x, "alpha3": y}
///   exyz:          {"epsilon": x}
/// Sites are 0-based.
struct HamiltonianSpec {
  std::string kind;
  int n = 0;
  std::optional<std::uint64_t> seed;
  std::optional<nlohmann::json> coefficients;
  bool normalize = false;

  friend bool operator==(const HamiltonianSpec&, const HamiltonianSpec&) = default;
};

inline void to_json(nlohmann::json& j, const HamiltonianSpec& s) {
  j = nlohmann::json{{"kind", s.kind}, {"n", s.n}, {"normalize", s.normalize}};
  if (s.seed) j["seed"] = *s.seed;
  if (s.coefficients) j["coefficients"] = *s.coefficients;
}

namespace detail {

template <std::size_t N>
std::array<double, N> read_array(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw ContractViolation(std::string("HamiltonianSpec: ") + what + " needs " + std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = j[i].get<double>();
  return out;
}

inline ChainCoefficients read_chain(const nlohmann::json& c, int n) {
  const auto& alpha = c.at("alpha");
  if (!alpha.is_array() || alpha.size() != static_cast<std::size_t>(n)) {
    throw ContractViolation("HamiltonianSpec: alpha needs one 12-entry list per bond");
  }
  ChainCoefficients out(n);
  for (int j = 0; j < n; ++j) out.alpha[static_cast<std::size_t>(j)] = read_array<12>(alpha[static_cast<std::size_t>(j)], "bond alpha");
  return out;
}

inline InteractionGraph read_graph(const nlohmann::json& c, int n) {
  InteractionGraph g;
  g.n = n;
  for (const auto& e : c.at("edges")) {
    g.edges.push_back({e.at("j").get<int>(), e.at("k").get<int>(), read_array<9>(e.at("alpha"), "edge alpha")});
  }
  if (c.contains("fields")) {
    for (const auto& f : c.at("fields")) g.fields.push_back(read_array<3>(f, "field"));
  }
  g.validate();
  return g;
}

}  // namespace detail

/// Builds the operator. Random kinds draw from sample_coefficients.
[[nodiscard]] inline OperatorSum build(const HamiltonianSpec& s) {
  if (s.seed.has_value() == s.coefficients.has_value()) {
    throw ContractViolation("HamiltonianSpec: give exactly one of seed or coefficients");
  }
  OperatorSum h;
  if (s.seed) {
    const auto kind = parse_model_kind(s.kind);
    if (!kind) throw ContractViolation("HamiltonianSpec: kind '" + s.kind + "' cannot be sampled");
    h = sample_random(*kind, s.n, *s.seed, false);
  } else {
    const nlohmann::json& c = *s.coefficients;
    try {
      if (s.kind == "nn") {
        h = build_nn_chain(detail::read_chain(c, s.n));
      } else if (s.kind == "pair_only") {
        h = build_pair_only(detail::read_chain(c, s.n));
      } else if (s.kind == "invariant") {
        h = build_invariant(detail::read_array<12>(c.at("alpha"), "alpha"), s.n);
      } else if (s.kind == "general") {
        h = build_general(detail::read_graph(c, s.n));
      } else if (s.kind == "ba") {
        h = build_ba(c.at("alpha1").get<double>(), c.at("alpha3").get<double>(), s.n);
      } else if (s.kind == "exyz") {
        h = build_exyz(c.at("epsilon").get<double>(), s.n);
      } else {
        throw ContractViolation("HamiltonianSpec: unknown kind '" + s.kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw ContractViolation(std::string("HamiltonianSpec: malformed coefficients: ") + e.what());
    }
  }
  return s.normalize ? normalize(h) : h;
}

inline void from_json(const nlohmann::json& j, HamiltonianSpec& s) {
  try {
    s.kind = j.at("kind").get<std::string>();
    s.n = j.at("n").get<int>();
    s.normalize = j.value("normalize", false);
    s.seed = j.contains("seed") ? std::optional<std::uint64_t>(j.at("seed").get<std::uint64_t>()) : std::nullopt;
    s.coefficients = j.contains("coefficients") ? std::optional<nlohmann::json>(j.at("coefficients")) : std::nullopt;
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("HamiltonianSpec: ") + e.what());
  }
}

[[nodiscard]] inline HamiltonianSpec parse_hamiltonian_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractViolation(std::string("HamiltonianSpec: invalid JSON: ") + e.what());
  }
  HamiltonianSpec s = j.get<HamiltonianSpec>();
  (void)build(s);  // reject specs that do not describe a valid operator
  return s;
}

}  // namespace qchain
