#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qchain/entanglement.hpp"
#include "qchain/errors.hpp"
#include "qchain/hamiltonians.hpp"
#include "qchain/operator_sum.hpp"
#include "qchain/pauli.hpp"

namespace qchain {

/// Phi(x) via erfc, which keeps full relative accuracy in both tails.
[[nodiscard]] inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// E[Z^k] for a standard normal: (k-1)!! for even k, 0 for odd k.
[[nodiscard]] inline double normal_moment(int k) {
  if (k < 0) throw ContractViolation("normal_moment: k must be >= 0");
  if (k % 2 == 1) return 0.0;
  double r = 1.0;
  for (int j = k - 1; j > 1; j -= 2) r *= j;
  return r;
}

inline constexpr int kMaxMoment = 8;

/// Raw power sums sum lambda^k, k = 1..8. Each batch is summed locally
/// before being added to the totals.
struct MomentAccumulator {
  std::uint64_t count = 0;
  std::array<double, kMaxMoment + 1> sums{};

  void operator()(std::span<const double> values) {
    std::array<double, kMaxMoment + 1> local{};
    for (double v : values) {
      double p = v;
      for (int k = 1; k <= kMaxMoment; ++k) {
        local[static_cast<std::size_t>(k)] += p;
        p *= v;
      }
    }
    for (int k = 1; k <= kMaxMoment; ++k) sums[static_cast<std::size_t>(k)] += local[static_cast<std::size_t>(k)];
    count += values.size();
  }

  void merge(const MomentAccumulator& o) {
    count += o.count;
    for (int k = 1; k <= kMaxMoment; ++k) sums[static_cast<std::size_t>(k)] += o.sums[static_cast<std::size_t>(k)];
  }

  [[nodiscard]] double moment(int k) const {
    if (k < 1 || k > kMaxMoment) throw ContractViolation("MomentAccumulator: k outside 1..8");
    if (count == 0) throw ContractViolation("MomentAccumulator: empty population");
    const double s = sums[static_cast<std::size_t>(k)];
    if (!std::isfinite(s)) throw NumericalError("MomentAccumulator: power sum overflow at k = " + std::to_string(k));
    return s / static_cast<double>(count);
  }
};

/// Fixed-bin histogram on [lo, hi) with explicit under/overflow counts.
struct Histogram {
  double lo = -8.0;
  double hi = 8.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t underflow = 0;
  std::uint64_t overflow = 0;

  Histogram() : counts(4096, 0) {}
  Histogram(double low, double high, std::size_t bins) : lo(low), hi(high), counts(bins, 0) {
    if (!(high > low) || bins == 0) throw ContractViolation("Histogram: need lo < hi and bins > 0");
  }

  /// 4096 bins over +-8 sigma.
  [[nodiscard]] static Histogram standard(double sigma = 1.0) { return Histogram(-8.0 * sigma, 8.0 * sigma, 4096); }

  [[nodiscard]] double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  [[nodiscard]] double edge(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
  [[nodiscard]] std::uint64_t total() const {
    std::uint64_t t = underflow + overflow;
    for (auto c : counts) t += c;
    return t;
  }

  void operator()(std::span<const double> values) {
    const double inv = static_cast<double>(counts.size()) / (hi - lo);
    const auto bins = static_cast<std::int64_t>(counts.size());
    for (double v : values) {
      if (v < lo) {
        ++underflow;
        continue;
      }
      const auto b = static_cast<std::int64_t>((v - lo) * inv);
      if (b >= bins) {
        ++overflow;
      } else {
        ++counts[static_cast<std::size_t>(b)];
      }
    }
  }

  void merge(const Histogram& o) {
    if (o.lo != lo || o.hi != hi || o.counts.size() != counts.size()) {
      throw ContractViolation("Histogram::merge: incompatible binning");
    }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    underflow += o.underflow;
    overflow += o.overflow;
  }
};

/// Moments plus histogram; the streaming-mode population summary.
struct StreamingAccumulator {
  MomentAccumulator moments;
  Histogram histogram;

  StreamingAccumulator() = default;
  explicit StreamingAccumulator(Histogram h) : histogram(std::move(h)) {}

  void operator()(std::span<const double> values) {
    moments(values);
    histogram(values);
  }
  void merge(const StreamingAccumulator& o) {
    moments.merge(o.moments);
    histogram.merge(o.histogram);
  }
};

/// Collects every value; the exact-mode accumulator.
struct CollectingAccumulator {
  std::vector<double> values;
  void operator()(std::span<const double> v) { values.insert(values.end(), v.begin(), v.end()); }
  void merge(const CollectingAccumulator& o) { values.insert(values.end(), o.values.begin(), o.values.end()); }
};

inline constexpr std::size_t kExactModeLimit = std::size_t{1} << 24;

/// A spectrum as a statistical population: either the sorted values (exact
/// mode) or a histogram plus power sums (streaming mode).
class EmpiricalDistribution {
 public:
  [[nodiscard]] static EmpiricalDistribution exact(std::vector<double> values) {
    if (values.size() > kExactModeLimit) throw CapExceeded("EmpiricalDistribution: exact mode limited to 2^24 values");
    EmpiricalDistribution d;
    std::sort(values.begin(), values.end());
    d.moments_(values);
    d.sorted_ = std::move(values);
    d.exact_ = true;
    return d;
  }

  [[nodiscard]] static EmpiricalDistribution streaming(StreamingAccumulator acc) {
    EmpiricalDistribution d;
    d.moments_ = acc.moments;
    d.histogram_ = std::move(acc.histogram);
    d.exact_ = false;
    return d;
  }

  [[nodiscard]] bool is_exact() const { return exact_; }
  [[nodiscard]] std::uint64_t count() const { return moments_.count; }
  [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }
  [[nodiscard]] const Histogram& histogram() const { return histogram_; }
  [[nodiscard]] const MomentAccumulator& power_sums() const { return moments_; }

  /// Fraction of the population <= x. In streaming mode the value is linearly
  /// interpolated inside the bin containing x.
  [[nodiscard]] double cdf(double x) const {
    if (count() == 0) throw ContractViolation("EmpiricalDistribution: empty population");
    const double total = static_cast<double>(count());
    if (exact_) return static_cast<double>(std::upper_bound(sorted_.begin(), sorted_.end(), x) - sorted_.begin()) / total;
    const Histogram& h = histogram_;
    if (x < h.lo) return 0.0;
    double below = static_cast<double>(h.underflow);
    if (x >= h.hi) return 1.0 - static_cast<double>(h.overflow) / total;
    const std::size_t b = std::min(h.counts.size() - 1, static_cast<std::size_t>((x - h.lo) / h.bin_width()));
    for (std::size_t i = 0; i < b; ++i) below += static_cast<double>(h.counts[i]);
    const double frac = (x - h.edge(b)) / h.bin_width();
    return (below + frac * static_cast<double>(h.counts[b])) / total;
  }

 private:
  bool exact_ = true;
  std::vector<double> sorted_;
  MomentAccumulator moments_;
  Histogram histogram_;
};

struct KsResult {
  double value = 0.0;
  /// Zero in exact mode. In streaming mode the true distance lies in
  /// [value, value + uncertainty].
  double uncertainty = 0.0;
  bool exact = true;
};

/// sup_x |F(x) - Phi(x)|.
[[nodiscard]] inline KsResult ks_distance(const EmpiricalDistribution& d) {
  if (d.count() == 0) throw ContractViolation("ks_distance: empty population");
  const double total = static_cast<double>(d.count());
  KsResult r;
  if (d.is_exact()) {
    const auto& v = d.sorted();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double phi = standard_normal_cdf(v[i]);
      r.value = std::max({r.value, (static_cast<double>(i) + 1.0) / total - phi, phi - static_cast<double>(i) / total});
    }
    return r;
  }
  // Between two edges F is monotone with known endpoint values, which
  // brackets the supremum.
  const Histogram& h = d.histogram();
  r.exact = false;
  double below = static_cast<double>(h.underflow);
  double lower = 0.0;
  double upper = 0.0;
  // (-inf, lo): F in [0, underflow/N], Phi in [0, Phi(lo)].
  upper = std::max(upper, std::max(below / total, standard_normal_cdf(h.lo)));
  for (std::size_t i = 0; i <= h.counts.size(); ++i) {
    const double x = h.edge(i);
    const double f = below / total;
    const double phi = standard_normal_cdf(x);
    lower = std::max(lower, std::abs(f - phi));
    if (i == h.counts.size()) break;
    const double f_next = (below + static_cast<double>(h.counts[i])) / total;
    const double phi_next = standard_normal_cdf(h.edge(i + 1));
    upper = std::max({upper, f_next - phi, phi_next - f});
    below += static_cast<double>(h.counts[i]);
  }
  // [hi, inf): F in [below/N, 1], Phi in [Phi(hi), 1].
  upper = std::max({upper, 1.0 - standard_normal_cdf(h.hi), 1.0 - below / total});
  r.value = lower;
  r.uncertainty = std::max(0.0, upper - lower);
  return r;
}

/// m_1..m_{k_max} with m_k = (1/count) sum lambda^k.
[[nodiscard]] inline std::vector<double> moments(const EmpiricalDistribution& d, int k_max = kMaxMoment) {
  if (k_max < 1 || k_max > kMaxMoment) throw ContractViolation("moments: k_max must be in 1..8");
  std::vector<double> out;
  for (int k = 1; k <= k_max; ++k) out.push_back(d.power_sums().moment(k));
  return out;
}

/// psi(t) = (1/N) sum_k exp(i t lambda_k), pairwise summed. Exact mode only.
[[nodiscard]] inline complex characteristic_fn(const EmpiricalDistribution& d, double t) {
  if (!d.is_exact()) throw ContractViolation("characteristic_fn: streaming distributions keep no eigenvalues");
  const auto& v = d.sorted();
  if (v.empty()) throw ContractViolation("characteristic_fn: empty population");
  std::vector<double> re(v.size()), im(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    re[i] = std::cos(t * v[i]);
    im[i] = std::sin(t * v[i]);
  }
  const double n = static_cast<double>(v.size());
  return {pairwise_sum(re) / n, pairwise_sum(im) / n};
}

/// Same quantity from a bare eigenvalue list.
[[nodiscard]] inline complex characteristic_fn(std::span<const double> eigenvalues, double t) {
  std::vector<double> re(eigenvalues.size()), im(eigenvalues.size());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    re[i] = std::cos(t * eigenvalues[i]);
    im[i] = std::sin(t * eigenvalues[i]);
  }
  const double n = static_cast<double>(eigenvalues.size());
  return {pairwise_sum(re) / n, pairwise_sum(im) / n};
}

struct CRow {
  double x = 0.0;
  double cdf_gap = 0.0;  // F_n(x) - Phi(x)
  double c = 0.0;        // n |F_n(x) - Phi(x)|
};

/// n |F_n(x) - Phi(x)| on the x grid.
[[nodiscard]] inline std::vector<CRow> c_table(const EmpiricalDistribution& d, int n, std::span<const double> xs) {
  std::vector<CRow> rows;
  for (double x : xs) {
    const double g = d.cdf(x) - standard_normal_cdf(x);
    rows.push_back({x, g, n * std::abs(g)});
  }
  return rows;
}

/// H = B + L with B = sum of blocks b_k on l consecutive sites and L the
/// removed links.
struct BlockLinkSplit {
  int n = 0;
  int l = 0;
  OperatorSum blocks_sum;
  OperatorSum links;
  std::vector<OperatorSum> blocks;
  /// Links are bonds p = 0, l, 2l, ... in the 0-based "bond p joins sites
  /// p-1 and p" labelling, so there are ceil(n / l) of them.
  int link_count = 0;
};

namespace detail {

/// Bond index (bond j joins sites j and j+1 mod n) owning a chain term.
/// Single-site terms on site s belong to bond s-1, as in the builders.
inline int owning_bond(const PauliString& p) {
  const int n = p.size();
  std::vector<int> sites;
  for (int s = 0; s < n; ++s) {
    if (p.support() & site_bit(n, s)) sites.push_back(s);
  }
  if (sites.size() == 1) return (sites[0] + n - 1) % n;
  if (sites.size() == 2) {
    if (sites[1] == sites[0] + 1) return sites[0];
    if (sites[0] == 0 && sites[1] == n - 1) return n - 1;
  }
  throw ContractViolation("block_link_split: term " + p.str() + " is not a nearest-neighbour chain term");
}

}  // namespace detail

[[nodiscard]] inline BlockLinkSplit block_link_split(const OperatorSum& h, int l) {
  const int n = h.size();
  if (n < 3) throw ContractViolation("block_link_split: ring needs n >= 3");
  if (l < 2 || l > n) throw ContractViolation("block_link_split: need 2 <= l <= n");
  BlockLinkSplit s;
  s.n = n;
  s.l = l;
  s.link_count = (n + l - 1) / l;
  std::vector<std::vector<Term<double>>> block_terms(static_cast<std::size_t>(s.link_count));
  std::vector<Term<double>> link_terms, all_block_terms;
  for (const auto& t : h.terms()) {
    const int p = (detail::owning_bond(t.string) + 1) % n;
    if (p % l == 0) {
      link_terms.push_back(t);
    } else {
      block_terms[static_cast<std::size_t>(p / l)].push_back(t);
      all_block_terms.push_back(t);
    }
  }
  s.links = OperatorSum(n, std::move(link_terms));
  s.blocks_sum = OperatorSum(n, std::move(all_block_terms));
  for (auto& bt : block_terms) s.blocks.emplace_back(n, std::move(bt));
  return s;
}

/// Eigenvalues of an operator restricted to its support (identity terms
/// allowed); an empty operator yields the single eigenvalue 0 on one site.
[[nodiscard]] inline std::vector<double> support_spectrum(const OperatorSum& op, int dense_cap = kDefaultDenseCap) {
  const auto r = restrict_to_support(op);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(to_dense(r.op, dense_cap), Eigen::EigenvaluesOnly);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

struct CltRow {
  double t = 0.0;
  double lhs = 0.0;  // |psi_n(t) - phi_n(t)|
  double rhs = 0.0;  // |t| sqrt(hs_inner(L, L))
  std::optional<double> rhs_coefficient;  // sqrt(t^2 ceil(n/l) 12 C^2 / n)
  bool pass = false;
};

/// Checks |psi_n(t) - phi_n(t)| <= |t| ||L||, with psi from the full spectrum
/// and phi = prod_k (1/2^{|supp b_k|}) Tr e^{i t b_k} from the blocks.
[[nodiscard]] inline std::vector<CltRow> clt_bound_check(const OperatorSum& h, int l, std::span<const double> ts,
                                                         std::optional<double> bound_c = std::nullopt,
                                                         int dense_cap = kDefaultDenseCap) {
  const int n = h.size();
  if (n > dense_cap) throw CapExceeded("clt_bound_check: n exceeds dense cap");
  const BlockLinkSplit split = block_link_split(h, l);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> full(to_dense(h, dense_cap), Eigen::EigenvaluesOnly);
  const std::vector<double> spectrum(full.eigenvalues().data(), full.eigenvalues().data() + full.eigenvalues().size());
  std::vector<std::vector<double>> block_spectra;
  for (const auto& b : split.blocks) {
    if (!b.empty()) block_spectra.push_back(support_spectrum(b, dense_cap));
  }
  const double link_norm = std::sqrt(split.links.squared_norm());
  std::vector<CltRow> rows;
  for (double t : ts) {
    CltRow row;
    row.t = t;
    const complex psi = characteristic_fn(spectrum, t);
    complex phi{1.0, 0.0};
    for (const auto& bs : block_spectra) phi *= characteristic_fn(bs, t);
    row.lhs = std::abs(psi - phi);
    row.rhs = std::abs(t) * link_norm;
    if (bound_c) row.rhs_coefficient = std::sqrt(t * t * split.link_count * 12.0 * *bound_c * *bound_c / n);
    row.pass = row.lhs <= row.rhs + kBoundSlack;
    rows.push_back(row);
  }
  return rows;
}

struct LyapunovQuantities {
  double s_n2 = 0.0;        // sum_k (1/2^n) Tr b_k^2
  double fourth_sum = 0.0;  // sum_k (1/2^n) Tr b_k^4
  std::optional<double> genbound3_rhs;  // 3^7 4^4 C^4 (l/n + l^2/n^2)
};

/// Block traces are evaluated on each block's support, where the normalized
/// trace equals the one on the full space.
[[nodiscard]] inline LyapunovQuantities lyapunov_quantities(const OperatorSum& h, int l,
                                                            std::optional<double> bound_c = std::nullopt,
                                                            int dense_cap = kDefaultDenseCap) {
  const int n = h.size();
  const BlockLinkSplit split = block_link_split(h, l);
  LyapunovQuantities q;
  for (const auto& b : split.blocks) {
    if (b.empty()) continue;
    const auto spec = support_spectrum(b, dense_cap);
    double s2 = 0.0, s4 = 0.0;
    for (double lam : spec) {
      s2 += lam * lam;
      s4 += lam * lam * lam * lam;
    }
    q.s_n2 += s2 / static_cast<double>(spec.size());
    q.fourth_sum += s4 / static_cast<double>(spec.size());
  }
  if (bound_c) {
    const double c4 = std::pow(*bound_c, 4);
    const double ratio = static_cast<double>(l) / n;
    q.genbound3_rhs = std::pow(3.0, 7) * std::pow(4.0, 4) * c4 * (ratio + ratio * ratio);
  }
  return q;
}

/// sigma^{2k} (2k-1)!!, sigma^2 = 1 + a1^2 + a3^2: the 2k-th moment of the
/// normal law with the variance the limit argument produces.
[[nodiscard]] inline double ba_prediction(double alpha1, double alpha3, int k) {
  if (k < 1) throw ContractViolation("ba_prediction: k must be >= 1");
  const double var = 1.0 + alpha1 * alpha1 + alpha3 * alpha3;
  return std::pow(var, k) * normal_moment(2 * k);
}

/// The conjecture as printed: (1 + a1^2 + a3^2)^{2k} (2k)! / (2^k k!).
[[nodiscard]] inline double ba_printed_prediction(double alpha1, double alpha3, int k) {
  if (k < 1) throw ContractViolation("ba_printed_prediction: k must be >= 1");
  const double var = 1.0 + alpha1 * alpha1 + alpha3 * alpha3;
  return std::pow(var, 2 * k) * normal_moment(2 * k);
}

struct GeometryConditions {
  int r = 0;  // edges crossing blocks
  int m = 0;  // block count
  int q = 0;  // largest block
  double r_over_n = 0.0;
  double mq2_over_n2 = 0.0;
};

[[nodiscard]] inline GeometryConditions geometry_conditions(const InteractionGraph& g,
                                                            const std::vector<std::vector<int>>& partition) {
  g.validate();
  std::vector<int> owner(static_cast<std::size_t>(g.n), -1);
  for (std::size_t b = 0; b < partition.size(); ++b) {
    if (partition[b].empty()) throw ContractViolation("geometry_conditions: empty block");
    for (int s : partition[b]) {
      if (s < 0 || s >= g.n) throw ContractViolation("geometry_conditions: site out of range");
      if (owner[static_cast<std::size_t>(s)] != -1) throw ContractViolation("geometry_conditions: blocks overlap");
      owner[static_cast<std::size_t>(s)] = static_cast<int>(b);
    }
  }
  if (std::find(owner.begin(), owner.end(), -1) != owner.end()) {
    throw ContractViolation("geometry_conditions: partition does not cover every site");
  }
  GeometryConditions c;
  for (const Edge& e : g.edges) {
    if (owner[static_cast<std::size_t>(e.j)] != owner[static_cast<std::size_t>(e.k)]) ++c.r;
  }
  c.m = static_cast<int>(partition.size());
  for (const auto& b : partition) c.q = std::max(c.q, static_cast<int>(b.size()));
  c.r_over_n = static_cast<double>(c.r) / g.n;
  c.mq2_over_n2 = static_cast<double>(c.m) * c.q * c.q / (static_cast<double>(g.n) * g.n);
  return c;
}

/// l x l tiles of a p x p lattice (site = row * p + col); edge tiles are
/// smaller when l does not divide p.
[[nodiscard]] inline std::vector<std::vector<int>> lattice_blocks(int p, int l) {
  if (p < 1 || l < 1) throw ContractViolation("lattice_blocks: p and l must be positive");
  std::vector<std::vector<int>> out;
  for (int r0 = 0; r0 < p; r0 += l) {
    for (int c0 = 0; c0 < p; c0 += l) {
      std::vector<int> tile;
      for (int r = r0; r < std::min(p, r0 + l); ++r) {
        for (int c = c0; c < std::min(p, c0 + l); ++c) tile.push_back(r * p + c);
      }
      out.push_back(std::move(tile));
    }
  }
  return out;
}

/// Consecutive runs of l sites on a ring of n (last run shorter if needed).
[[nodiscard]] inline std::vector<std::vector<int>> ring_blocks(int n, int l) {
  if (n < 1 || l < 1) throw ContractViolation("ring_blocks: n and l must be positive");
  std::vector<std::vector<int>> out;
  for (int s0 = 0; s0 < n; s0 += l) {
    std::vector<int> run;
    for (int s = s0; s < std::min(n, s0 + l); ++s) run.push_back(s);
    out.push_back(std::move(run));
  }
  return out;
}

}  // namespace qchain
