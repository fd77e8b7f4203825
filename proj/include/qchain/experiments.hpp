#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qchain/dos_stats.hpp"
#include "qchain/entanglement.hpp"
#include "qchain/errors.hpp"
#include "qchain/free_fermion.hpp"
#include "qchain/hamiltonian_spec.hpp"
#include "qchain/hamiltonians.hpp"
#include "qchain/spectra.hpp"
#include "qchain/symmetry.hpp"
#include "qchain/version.hpp"

namespace qchain {

/// Bad flags, caps exceeded without acknowledgement, or invalid combinations.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr int kCliDenseCap = 13;
inline constexpr int kCliStreamCap = 28;
inline constexpr int kExitOk = 0;
inline constexpr int kExitBoundFailed = 1;
inline constexpr int kExitUsage = 2;

/// Parameters shared by all subcommands. Empty lists mean "command default".
struct ExperimentConfig {
  std::string command;
  std::vector<int> ns;
  std::vector<int> ls;
  std::string model;
  std::uint64_t seed = 1;
  int samples = 1;
  std::vector<double> epsilons;
  std::vector<double> ts;
  double alpha1 = 0.5;
  double alpha3 = 0.5;
  std::string out;
  std::string format;
  int dense_cap = kCliDenseCap;
  int stream_cap = kCliStreamCap;
  bool acknowledge_caps = false;
  double degeneracy_tolerance = kDefaultDegeneracyTolerance;
  double pair_tolerance = kPairOnlyTolerance;
  unsigned threads = 1;
  /// Optional Hamiltonian JSON (spectrum command); overrides model/seed.
  std::string hamiltonian_json;
};

struct ExperimentResult {
  int exit_code = kExitOk;
  /// File body in the requested format.
  std::string text;
  /// Machine-readable summary (the JSON body without bulky row data).
  nlohmann::json report;
};

namespace detail {

/// Shortest-enough round-trip formatting, independent of locale and stream state.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json config_json(const ExperimentConfig& c) {
  return {{"command", c.command},
          {"n", c.ns},
          {"l", c.ls},
          {"model", c.model},
          {"seed", c.seed},
          {"samples", c.samples},
          {"epsilon", c.epsilons},
          {"t", c.ts},
          {"alpha1", c.alpha1},
          {"alpha3", c.alpha3},
          {"format", c.format},
          {"dense_cap", c.dense_cap},
          {"hamiltonian", c.hamiltonian_json.empty() ? nlohmann::json() : nlohmann::json::parse(c.hamiltonian_json, nullptr, false)},
          {"stream_cap", c.stream_cap},
          {"version", kVersion},
          {"generator", "mt19937_64 + normal_distribution(0,1), per-sample seed = seed_seq(seed, sample_id)"},
          {"tolerances",
           {{"bound_slack", kBoundSlack},
            {"rdm", kRdmTolerance},
            {"degeneracy_relative", c.degeneracy_tolerance},
            {"pair_only", c.pair_tolerance},
            {"m2_identity", 1e-10}}}};
}

inline std::string csv_preamble(const ExperimentConfig& c) {
  return "# qchain " + std::string(kVersion) + " " + c.command + "\n# config: " + config_json(c).dump() + "\n";
}

inline void require_n(const ExperimentConfig& c, int n, int cap, const char* what) {
  if (n < 3) throw UsageError(std::string(what) + ": n must be >= 3");
  if (n > cap) {
    throw UsageError(std::string(what) + ": n = " + std::to_string(n) + " exceeds cap " + std::to_string(cap) +
                     " (raise the cap with --acknowledge-cost)");
  }
  (void)c;
}

inline ModelKind require_kind(const std::string& model, std::initializer_list<ModelKind> allowed, const char* what) {
  const auto k = parse_model_kind(model);
  if (!k || std::find(allowed.begin(), allowed.end(), *k) == allowed.end()) {
    throw UsageError(std::string(what) + ": model '" + model + "' not supported here");
  }
  return *k;
}

inline void finish_json(ExperimentResult& r, const ExperimentConfig& c) {
  r.report["config"] = config_json(c);
  r.text = r.report.dump(2) + "\n";
}

}  // namespace detail

/// Fills command defaults and validates. Throws UsageError.
inline ExperimentConfig resolve_config(ExperimentConfig c) {
  if (c.format.empty()) c.format = (c.command == "dos" || c.command == "ba-moments") ? "json" : "csv";
  if (c.format != "csv" && c.format != "json") throw UsageError("--format must be csv or json");
  if (c.samples < 1) throw UsageError("--samples must be >= 1");
  if (c.dense_cap > kCliDenseCap && !c.acknowledge_caps) {
    throw UsageError("--dense-cap above " + std::to_string(kCliDenseCap) + " needs --acknowledge-cost");
  }
  if (c.stream_cap > kCliStreamCap && !c.acknowledge_caps) {
    throw UsageError("--stream-cap above " + std::to_string(kCliStreamCap) + " needs --acknowledge-cost");
  }
  if (c.dense_cap < 1 || c.dense_cap > 16) throw UsageError("--dense-cap must be in 1..16");
  if (c.stream_cap < 1 || c.stream_cap > 40) throw UsageError("--stream-cap must be in 1..40");

  const std::string& cmd = c.command;
  if (cmd == "purity-sweep") {
    if (c.ns.empty()) c.ns = {8};
    if (c.ls.empty()) c.ls = {1, 2};
    if (c.model.empty()) c.model = "invariant";
    if (c.epsilons.empty()) c.epsilons = {0.2, 0.5};
  } else if (cmd == "dos") {
    if (c.ns.empty()) c.ns = {12, 16, 20, 24};
    if (c.model.empty()) c.model = "exyz";
    if (c.epsilons.empty()) c.epsilons = {0.5};
  } else if (cmd == "clt-check") {
    if (c.ns.empty()) c.ns = {10};
    if (c.ls.empty()) c.ls = {2, 3, 5};
    if (c.model.empty()) c.model = "nn";
    if (c.ts.empty()) c.ts = {0.0, 0.5, 1.0, 2.0};
  } else if (cmd == "degeneracy-scan") {
    if (c.ns.empty()) c.ns = {5};
    if (c.model.empty()) c.model = "invariant";
    if (c.epsilons.empty()) {
      for (int i = 0; i <= 10; ++i) c.epsilons.push_back(i / 10.0);
    }
  } else if (cmd == "ba-moments") {
    if (c.ns.empty()) c.ns = {10, 12, 13};
    if (c.model.empty()) c.model = "ba";
  } else if (cmd == "spectrum") {
    if (c.ns.empty()) c.ns = {8};
    if (c.model.empty()) c.model = "invariant";
    if (c.epsilons.empty()) c.epsilons = {0.5};
  } else {
    throw UsageError("unknown command '" + cmd + "'");
  }
  for (double e : c.epsilons) {
    if (!std::isfinite(e)) throw UsageError("--epsilon values must be finite");
  }
  for (double t : c.ts) {
    if (!std::isfinite(t)) throw UsageError("--t values must be finite");
  }
  return c;
}

/// Purity sweep: per-state linear entropies for s samples, the
/// rank-averaged curve, and the average-purity / Markov verdicts per sample.
inline ExperimentResult cmd_purity_sweep(const ExperimentConfig& c) {
  const ModelKind kind =
      detail::require_kind(c.model, {ModelKind::invariant, ModelKind::nn, ModelKind::pair_only}, "purity-sweep");
  const int n = c.ns.front();
  detail::require_n(c, n, c.dense_cap, "purity-sweep");
  for (int l : c.ls) {
    if (l < 1 || l >= n) throw UsageError("purity-sweep: every l must satisfy 1 <= l < n");
  }
  const std::size_t dim = std::size_t{1} << n;
  ExperimentResult res;
  std::ostringstream rows;
  std::vector<std::vector<double>> ranked(c.ls.size(), std::vector<double>(dim, 0.0));
  std::vector<double> ranked_eig(dim, 0.0);
  nlohmann::json samples = nlohmann::json::array();

  for (int i = 0; i < c.samples; ++i) {
    const std::uint64_t sample_seed = derive_seed(c.seed, static_cast<std::uint64_t>(i));
    const OperatorSum h = sample_random(kind, n, sample_seed);
    JointBasisOptions opts;
    opts.dense_cap = c.dense_cap;
    const EigenDecomposition e = kind == ModelKind::invariant ? joint_eigenbasis(h, opts) : diagonalize_dense(h, true, c.dense_cap);
    const auto purities = state_purities(e, c.ls);
    const DegeneracyReport deg = detect_degeneracy(e, c.degeneracy_tolerance);

    nlohmann::json js{{"sample_id", i},
                      {"seed", sample_seed},
                      {"joint_basis", e.is_joint_translation_basis()},
                      {"gauge", e.gauge()},
                      {"residual", e.residual().value_or(0.0)},
                      {"min_gap", deg.min_gap},
                      {"spectral_range", deg.spectral_range}};
    nlohmann::json per_l = nlohmann::json::array();
    for (std::size_t li = 0; li < c.ls.size(); ++li) {
      const int l = c.ls[li];
      const PurityAverage avg = summarize_purities(purities[li], n, l, e.is_joint_translation_basis());
      nlohmann::json jl{{"l", l},
                        {"mean_purity", avg.mean},
                        {"lower_bound", avg.lower_bound},
                        {"upper_bound", avg.upper_bound},
                        {"bound_claimed", avg.bound_claimed},
                        {"within_bounds", avg.within_bounds}};
      if (!avg.theorem_check_passes()) res.exit_code = kExitBoundFailed;
      if (!avg.joint_basis) jl["note"] = "bound not guaranteed: basis is not a joint (H, T) eigenbasis";
      nlohmann::json eps = nlohmann::json::array();
      for (double epsv : c.epsilons) {
        if (!(epsv > 0.0)) continue;
        const EpsilonFraction f = epsilon_fraction(avg.per_state, l, n, epsv);
        eps.push_back({{"epsilon", epsv}, {"fraction", f.fraction}, {"markov_bound", f.markov_bound}, {"within_bound", f.within_bound}});
        if (avg.bound_claimed && avg.joint_basis && !f.within_bound) res.exit_code = kExitBoundFailed;
      }
      jl["epsilon_fractions"] = eps;
      per_l.push_back(jl);
      for (std::size_t k = 0; k < dim; ++k) {
        const double s = 1.0 - avg.per_state[k];
        ranked[li][k] += s / c.samples;
        rows << k << ',' << detail::num(e.eigenvalues()[k]) << ',' << l << ',' << detail::num(s) << ',' << i << '\n';
      }
    }
    for (std::size_t k = 0; k < dim; ++k) ranked_eig[k] += e.eigenvalues()[k] / c.samples;
    js["per_l"] = per_l;
    if (kind == ModelKind::pair_only) {
      const PairOnlyReport pr = pair_only_checks(e, std::min(2, n - 1), c.pair_tolerance);
      js["pair_only"] = {{"hypothesis_met", pr.hypothesis_met},
                         {"min_relative_gap", pr.min_relative_gap},
                         {"max_single_site_deviation", pr.max_single_site_deviation},
                         {"max_odd_coefficient", pr.max_odd_coefficient},
                         {"max_even_coefficient", pr.max_even_coefficient},
                         {"passes", pr.passes(c.pair_tolerance)}};
      if (pr.hypothesis_met && !pr.passes(c.pair_tolerance)) res.exit_code = kExitBoundFailed;
    }
    samples.push_back(js);
  }

  nlohmann::json curves = nlohmann::json::array();
  std::ostringstream mean_rows;
  for (std::size_t li = 0; li < c.ls.size(); ++li) {
    const int l = c.ls[li];
    const std::size_t lo = dim / 4, hi = dim - dim / 4, edge = std::max<std::size_t>(1, dim / 16);
    double bulk = 0.0, edges = 0.0;
    for (std::size_t k = lo; k < hi; ++k) bulk += ranked[li][k];
    bulk /= static_cast<double>(hi - lo);
    for (std::size_t k = 0; k < edge; ++k) edges += ranked[li][k] + ranked[li][dim - 1 - k];
    edges /= static_cast<double>(2 * edge);
    const double threshold = 1.0 - std::ldexp(1.0, -l) - std::ldexp(1.0, l) / n;
    curves.push_back({{"l", l},
                      {"bulk_mean_linear_entropy", bulk},
                      {"bulk_threshold", threshold},
                      {"bulk_above_threshold", bulk >= threshold},
                      {"edge_mean_linear_entropy", edges},
                      {"edge_below_bulk", edges < bulk}});
    for (std::size_t k = 0; k < dim; ++k) {
      mean_rows << k << ',' << detail::num(ranked_eig[k]) << ',' << l << ',' << detail::num(ranked[li][k]) << ",mean\n";
    }
  }
  res.report = {{"command", "purity-sweep"}, {"n", n}, {"model", c.model}, {"samples", samples}, {"rank_average", curves}};
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  std::ostringstream os;
  os << detail::csv_preamble(c) << "# rank-averaged rows carry sample_id=mean\n";
  os << "state_index,eigenvalue,l,linear_entropy,sample_id\n" << rows.str() << mean_rows.str();
  for (const auto& s : samples) os << "# sample " << s.dump() << '\n';
  for (const auto& cv : curves) os << "# rank_average " << cv.dump() << '\n';
  res.text = os.str();
  res.report["config"] = detail::config_json(c);
  return res;
}

/// Spectrum of a model as a statistical population. exyz streams the
/// normalized analytic spectrum; other models use ED of a normalized sample.
inline EmpiricalDistribution dos_population(const ExperimentConfig& c, int n, nlohmann::json& info) {
  if (c.model == "exyz") {
    detail::require_n(c, n, c.stream_cap, "dos");
    const double eps = c.epsilons.front();
    const FreeFermionModes m = mode_energies(n, eps).scaled(normalization_scale(n, eps));
    EnumerationStats stats;
    info["epsilon"] = eps;
    info["analytic_exact_for_n"] = n % 2 == 1;
    if (n <= 24) {
      auto acc = enumerate_segmented<CollectingAccumulator>(m, [] { return CollectingAccumulator{}; }, &stats, c.threads, c.stream_cap);
      info["max_drift"] = stats.max_drift;
      return EmpiricalDistribution::exact(std::move(acc.values));
    }
    auto acc = enumerate_segmented<StreamingAccumulator>(m, [] { return StreamingAccumulator{}; }, &stats, c.threads, c.stream_cap);
    info["max_drift"] = stats.max_drift;
    return EmpiricalDistribution::streaming(std::move(acc));
  }
  detail::require_n(c, n, c.dense_cap, "dos");
  OperatorSum h;
  bool invariant = false;
  if (c.model == "ba") {
    h = normalize(build_ba(c.alpha1, c.alpha3, n));
    invariant = true;
  } else {
    const ModelKind kind = detail::require_kind(
        c.model, {ModelKind::nn, ModelKind::invariant, ModelKind::pair_only, ModelKind::general}, "dos");
    const std::uint64_t s = derive_seed(c.seed, 0);
    info["sample_seed"] = s;
    h = sample_random(kind, n, s);
    invariant = kind == ModelKind::invariant;
  }
  std::vector<double> spec = invariant ? invariant_spectrum(h, c.dense_cap) : diagonalize_dense(h, false, c.dense_cap).eigenvalues();
  return EmpiricalDistribution::exact(std::move(spec));
}

inline ExperimentResult cmd_dos(const ExperimentConfig& c) {
  ExperimentResult res;
  nlohmann::json results = nlohmann::json::array();
  std::ostringstream hist;
  std::vector<double> grid;
  for (int i = -6; i <= 6; ++i) grid.push_back(0.5 * i);
  std::vector<double> ks_list, m4_dev;
  for (int n : c.ns) {
    nlohmann::json r{{"n", n}, {"model", c.model}};
    const EmpiricalDistribution d = dos_population(c, n, r);
    const KsResult ks = ks_distance(d);
    const auto m = moments(d, kMaxMoment);
    r["count"] = d.count();
    r["exact_mode"] = d.is_exact();
    r["ks"] = ks.value;
    r["ks_uncertainty"] = ks.uncertainty;
    r["n_times_ks"] = n * ks.value;
    r["moments"] = m;
    r["normal_moments"] = {0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0};
    const bool m2_ok = std::abs(m[1] - 1.0) <= 1e-10;
    r["m2_identity_ok"] = m2_ok;
    if (!m2_ok) res.exit_code = kExitBoundFailed;
    nlohmann::json ct = nlohmann::json::array();
    for (const CRow& row : c_table(d, n, grid)) ct.push_back({{"x", row.x}, {"cdf_gap", row.cdf_gap}, {"c", row.c}});
    r["c_table"] = ct;
    results.push_back(r);
    ks_list.push_back(ks.value);
    m4_dev.push_back(std::abs(m[3] - 3.0));

    Histogram h = d.is_exact() ? Histogram::standard() : d.histogram();
    if (d.is_exact()) h(d.sorted());
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      if (h.counts[b] == 0) continue;
      hist << n << ',' << detail::num(h.edge(b)) << ',' << detail::num(h.edge(b + 1)) << ',' << h.counts[b] << '\n';
    }
  }
  auto strictly_decreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] < v[i - 1])) return false;
    }
    return true;
  };
  res.report = {{"command", "dos"},
                {"results", results},
                {"ks_strictly_decreasing", strictly_decreasing(ks_list)},
                {"m4_deviation_decreasing", strictly_decreasing(m4_dev)}};
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  res.text = detail::csv_preamble(c) + "n,bin_left,bin_right,count\n" + hist.str();
  for (const auto& r : results) {
    nlohmann::json s = r;
    s.erase("c_table");
    res.text += "# result " + s.dump() + "\n";
  }
  res.report["config"] = detail::config_json(c);
  return res;
}

inline ExperimentResult cmd_clt_check(const ExperimentConfig& c) {
  const ModelKind kind = detail::require_kind(c.model, {ModelKind::nn, ModelKind::invariant, ModelKind::general}, "clt-check");
  ExperimentResult res;
  std::ostringstream os;
  nlohmann::json rows = nlohmann::json::array();
  int failures = 0;
  for (int n : c.ns) {
    detail::require_n(c, n, c.dense_cap, "clt-check");
    for (int l : c.ls) {
      if (l < 2 || l > n) throw UsageError("clt-check: every l must satisfy 2 <= l <= n");
    }
    for (int i = 0; i < c.samples; ++i) {
      const std::uint64_t s = derive_seed(c.seed, static_cast<std::uint64_t>(i));
      const OperatorSum h = sample_random(kind, n, s);
      const double bound_c = empirical_alpha_bound(h);
      for (int l : c.ls) {
        const BlockLinkSplit split = block_link_split(h, l);
        const LyapunovQuantities q = lyapunov_quantities(h, l, bound_c, c.dense_cap);
        for (const CltRow& row : clt_bound_check(h, l, c.ts, bound_c, c.dense_cap)) {
          if (!row.pass) ++failures;
          os << i << ',' << n << ',' << l << ',' << detail::num(row.t) << ',' << detail::num(row.lhs) << ','
             << detail::num(row.rhs) << ',' << detail::num(row.rhs_coefficient.value_or(0.0)) << ',' << (row.pass ? 1 : 0)
             << ',' << detail::num(q.s_n2) << ',' << detail::num(split.links.squared_norm()) << ','
             << detail::num(q.fourth_sum) << ',' << detail::num(q.genbound3_rhs.value_or(0.0)) << '\n';
          rows.push_back({{"sample_id", i}, {"n", n}, {"l", l}, {"t", row.t}, {"lhs", row.lhs}, {"rhs", row.rhs},
                          {"rhs_coefficient", row.rhs_coefficient.value_or(0.0)}, {"pass", row.pass},
                          {"s_n2", q.s_n2}, {"link_norm2", split.links.squared_norm()}, {"fourth_sum", q.fourth_sum},
                          {"genbound3_rhs", q.genbound3_rhs.value_or(0.0)}, {"bound_c", bound_c}});
        }
      }
    }
  }
  if (failures > 0) res.exit_code = kExitBoundFailed;
  res.report = {{"command", "clt-check"}, {"rows", rows}, {"failures", failures}};
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  res.text = detail::csv_preamble(c) +
             "sample_id,n,l,t,lhs,rhs,rhs_coefficient,pass,s_n2,link_norm2,fourth_sum,genbound3_rhs\n" + os.str();
  res.report["config"] = detail::config_json(c);
  return res;
}

inline ExperimentResult cmd_degeneracy_scan(const ExperimentConfig& c) {
  ExperimentResult res;
  std::ostringstream os;
  nlohmann::json rows = nlohmann::json::array();
  int below = 0;
  for (int n : c.ns) {
    detail::require_n(c, n, std::min(c.stream_cap, 24), "degeneracy-scan");
    const GapScan scan = min_gap_scan(n, c.epsilons, std::min(c.stream_cap, 24));
    for (const GapRow& g : scan.rows) {
      const double rel = g.spectral_range > 0 ? g.min_gap / g.spectral_range : 0.0;
      os << "exyz," << n << ',' << detail::num(g.epsilon) << ",," << detail::num(g.min_gap) << ','
         << detail::num(g.spectral_range) << ',' << detail::num(rel) << ',' << (rel < c.degeneracy_tolerance ? 1 : 0) << ','
         << (scan.hypothesis_warning ? 1 : 0) << '\n';
      rows.push_back({{"family", "exyz"}, {"n", n}, {"epsilon", g.epsilon}, {"min_gap", g.min_gap},
                      {"spectral_range", g.spectral_range}, {"hypothesis_warning", scan.hypothesis_warning}});
    }
    if (n > c.dense_cap) continue;
    for (int i = 0; i < c.samples; ++i) {
      const OperatorSum h = sample_random(ModelKind::invariant, n, derive_seed(c.seed, static_cast<std::uint64_t>(i)));
      const DegeneracyReport d = detect_degeneracy(invariant_spectrum(h, c.dense_cap), c.degeneracy_tolerance);
      const double rel = d.spectral_range > 0 ? d.min_gap / d.spectral_range : 0.0;
      if (d.has_degeneracy()) ++below;
      os << "invariant," << n << ",," << i << ',' << detail::num(d.min_gap) << ',' << detail::num(d.spectral_range) << ','
         << detail::num(rel) << ',' << (d.has_degeneracy() ? 1 : 0) << ",0\n";
      rows.push_back({{"family", "invariant"}, {"n", n}, {"sample_id", i}, {"min_gap", d.min_gap},
                      {"spectral_range", d.spectral_range}, {"below_tolerance", d.has_degeneracy()}});
    }
  }
  res.report = {{"command", "degeneracy-scan"}, {"rows", rows}, {"random_samples_below_tolerance", below}};
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  res.text = detail::csv_preamble(c) +
             "family,n,epsilon,sample_id,min_gap,spectral_range,relative_gap,below_tolerance,hypothesis_warning\n" + os.str() +
             "# random_samples_below_tolerance " + std::to_string(below) + "\n";
  res.report["config"] = detail::config_json(c);
  return res;
}

/// Moments of a sorted spectrum, m_1..m_k, by pairwise summation.
[[nodiscard]] inline std::vector<double> spectrum_moments(const std::vector<double>& spec, int k_max) {
  std::vector<double> out;
  std::vector<double> pw(spec.size());
  for (int k = 1; k <= k_max; ++k) {
    for (std::size_t i = 0; i < spec.size(); ++i) pw[i] = std::pow(spec[i], k);
    out.push_back(pairwise_sum(pw) / static_cast<double>(spec.size()));
  }
  return out;
}

inline ExperimentResult cmd_ba_moments(const ExperimentConfig& c) {
  if (c.model != "ba") throw UsageError("ba-moments: model must be ba");
  ExperimentResult res;
  const double var = 1.0 + c.alpha1 * c.alpha1 + c.alpha3 * c.alpha3;
  nlohmann::json preds = nlohmann::json::array();
  for (int k = 1; k <= 3; ++k) {
    preds.push_back({{"k", k},
                     {"moment", 2 * k},
                     {"derivation_consistent", ba_prediction(c.alpha1, c.alpha3, k)},
                     {"printed_formula", ba_printed_prediction(c.alpha1, c.alpha3, k)}});
  }
  nlohmann::json rows = nlohmann::json::array();
  std::vector<double> dev;
  std::ostringstream os;
  for (int n : c.ns) {
    detail::require_n(c, n, c.dense_cap, "ba-moments");
    const OperatorSum h = build_ba(c.alpha1, c.alpha3, n);
    const auto spec = invariant_spectrum(h, c.dense_cap);
    const auto m = spectrum_moments(spec, 6);
    const double m2_alg = h.squared_norm();
    const double m4_alg = product(h, h).squared_norm();
    const double d4 = std::abs(m[3] - ba_prediction(c.alpha1, c.alpha3, 2));
    dev.push_back(d4);
    const bool ok = std::abs(m[1] - var) <= 1e-10 && std::abs(m[1] - m2_alg) <= 1e-10 &&
                    std::abs(m[3] - m4_alg) <= 1e-9 * std::max(1.0, m4_alg);
    if (!ok) res.exit_code = kExitBoundFailed;
    rows.push_back({{"n", n}, {"m2", m[1]}, {"m4", m[3]}, {"m6", m[5]}, {"m2_pauli", m2_alg}, {"m4_pauli", m4_alg},
                    {"m4_deviation", d4}, {"identities_ok", ok}});
    os << n << ',' << detail::num(m[1]) << ',' << detail::num(m[3]) << ',' << detail::num(m[5]) << ','
       << detail::num(m2_alg) << ',' << detail::num(m4_alg) << ',' << detail::num(d4) << '\n';
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < dev.size(); ++i) decreasing = decreasing && dev[i] < dev[i - 1];
  res.report = {{"command", "ba-moments"}, {"alpha1", c.alpha1}, {"alpha3", c.alpha3}, {"variance", var},
                {"predictions", preds}, {"rows", rows}, {"m4_deviation_decreasing", decreasing}};
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  res.text = detail::csv_preamble(c) + "n,m2,m4,m6,m2_pauli,m4_pauli,m4_deviation\n" + os.str();
  for (const auto& p : preds) res.text += "# prediction " + p.dump() + "\n";
  res.report["config"] = detail::config_json(c);
  return res;
}

inline ExperimentResult cmd_spectrum(const ExperimentConfig& c) {
  std::optional<HamiltonianSpec> spec;
  if (!c.hamiltonian_json.empty()) {
    try {
      spec = parse_hamiltonian_spec(c.hamiltonian_json);
    } catch (const ContractViolation& e) {
      throw UsageError(e.what());
    }
  }
  const int n = spec ? spec->n : c.ns.front();
  detail::require_n(c, n, c.dense_cap, "spectrum");
  OperatorSum h;
  bool invariant = true;
  if (spec) {
    h = build(*spec);
    invariant = commutator_norm(h, Translation{}) < 1e-10;
  } else if (c.model == "ba") {
    h = build_ba(c.alpha1, c.alpha3, n);
  } else if (c.model == "exyz") {
    h = build_exyz(c.epsilons.front(), n);
  } else {
    const ModelKind kind = detail::require_kind(
        c.model, {ModelKind::nn, ModelKind::invariant, ModelKind::pair_only, ModelKind::general}, "spectrum");
    h = sample_random(kind, n, derive_seed(c.seed, 0));
    invariant = kind == ModelKind::invariant;
  }
  JointBasisOptions opts;
  opts.dense_cap = c.dense_cap;
  opts.keep_vectors = false;
  const EigenDecomposition e = invariant ? joint_eigenbasis(h, opts) : diagonalize_dense(h, false, c.dense_cap);
  const DegeneracyReport d = detect_degeneracy(e, c.degeneracy_tolerance);
  ExperimentResult res;
  res.report = {{"command", "spectrum"},
                {"n", n},
                {"model", c.model},
                {"eigenvalues", e.eigenvalues()},
                {"min_gap", d.min_gap},
                {"spectral_range", d.spectral_range},
                {"has_degeneracy", d.has_degeneracy()},
                {"discriminant_log", nullptr}};
  // JSON has no infinities; an exact degeneracy gives log 0.
  const double dlog = discriminant_log(e);
  if (std::isfinite(dlog)) {
    res.report["discriminant_log"] = dlog;
  } else {
    res.report["discriminant_log"] = "-infinity";
  }
  if (e.momenta()) res.report["momenta"] = *e.momenta();
  if (c.format == "json") {
    detail::finish_json(res, c);
    return res;
  }
  std::ostringstream os;
  os << detail::csv_preamble(c);
  write_spectrum_csv(os, e, c.degeneracy_tolerance);
  res.text = os.str();
  res.report["config"] = detail::config_json(c);
  return res;
}

/// Dispatches on c.command after resolving defaults. Throws UsageError.
inline ExperimentResult run_experiment(const ExperimentConfig& raw) {
  const ExperimentConfig c = resolve_config(raw);
  try {
    if (c.command == "purity-sweep") return cmd_purity_sweep(c);
    if (c.command == "dos") return cmd_dos(c);
    if (c.command == "clt-check") return cmd_clt_check(c);
    if (c.command == "degeneracy-scan") return cmd_degeneracy_scan(c);
    if (c.command == "ba-moments") return cmd_ba_moments(c);
    return cmd_spectrum(c);
  } catch (const CapExceeded& e) {
    throw UsageError(e.what());
  }
}

}  // namespace qchain
