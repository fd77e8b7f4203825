#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "qchain/errors.hpp"
#include "qchain/hamiltonians.hpp"
#include "qchain/operator_sum.hpp"

namespace qchain {

inline constexpr int kDefaultStreamCap = 28;

/// Gray-code steps between from-scratch recomputations of lambda.
inline constexpr std::uint64_t kRecomputeInterval = std::uint64_t{1} << 20;

/// Mode data of H = sum_j (eps X_j Y_{j+1} + Z_j). Vectors are indexed by
/// j - 1 for modes j = 1..n.
struct FreeFermionModes {
  int n = 0;
  double epsilon = 0.0;
  std::vector<double> mu;     // sin(2 pi j / n)
  std::vector<double> delta;  // eps mu_j - sqrt(eps^2 mu_j^2 + 1), always < 0

  [[nodiscard]] double chi_plus(int j) const {
    const double m = mu.at(static_cast<std::size_t>(j - 1));
    return epsilon * m + std::sqrt(epsilon * epsilon * m * m + 1.0);
  }
  [[nodiscard]] double chi_minus(int j) const {
    const double m = mu.at(static_cast<std::size_t>(j - 1));
    return epsilon * m - std::sqrt(epsilon * epsilon * m * m + 1.0);
  }

  /// Same modes with every eigenvalue multiplied by s.
  [[nodiscard]] FreeFermionModes scaled(double s) const {
    FreeFermionModes out = *this;
    for (double& d : out.delta) d *= s;
    return out;
  }
};

[[nodiscard]] inline FreeFermionModes mode_energies(int n, double epsilon) {
  if (n < 3) throw ContractViolation("mode_energies: n must be >= 3");
  if (!std::isfinite(epsilon)) throw ContractViolation("mode_energies: epsilon must be finite");
  FreeFermionModes m;
  m.n = n;
  m.epsilon = epsilon;
  for (int j = 1; j <= n; ++j) {
    // sin(2 pi j / n) with the argument folded so mu_n is exactly 0 and
    // mu_{n-j} = -mu_j holds to the last bit.
    double mu = 0.0;
    if (j != n && 2 * j != n) mu = (2 * j < n ? 1.0 : -1.0) * std::sin(2.0 * std::numbers::pi * std::min(j, n - j) / n);
    m.mu.push_back(mu);
    m.delta.push_back(epsilon * mu - std::sqrt(epsilon * epsilon * mu * mu + 1.0));
  }
  return m;
}

/// 1 / sqrt(n (1 + eps^2)): the scale giving the spectrum unit second moment.
[[nodiscard]] inline double normalization_scale(int n, double epsilon) {
  return 1.0 / std::sqrt(n * (1.0 + epsilon * epsilon));
}

/// lambda_x = sum_j (2 x_j - 1) delta_j; bit j-1 of x is the occupation of mode j.
[[nodiscard]] inline double eigenvalue_of(const FreeFermionModes& m, std::uint64_t x) {
  double acc = 0.0;
  for (int j = 0; j < m.n; ++j) acc += ((x >> j) & 1) ? m.delta[static_cast<std::size_t>(j)] : -m.delta[static_cast<std::size_t>(j)];
  return acc;
}

/// Occupation parity r = sum_j x_j mod 2.
[[nodiscard]] inline int sector_of(std::uint64_t x) { return std::popcount(x) & 1; }

struct EnumerationStats {
  std::uint64_t count = 0;
  std::uint64_t checkpoints = 0;
  /// Largest |incremental - recomputed| seen at a checkpoint.
  double max_drift = 0.0;

  void merge(const EnumerationStats& o) {
    count += o.count;
    checkpoints += o.checkpoints;
    max_drift = std::max(max_drift, o.max_drift);
  }
};

namespace detail {

inline void require_stream_cap(int n, int cap) {
  if (n > cap) {
    throw CapExceeded("free-fermion enumeration: n = " + std::to_string(n) + " exceeds streaming cap " +
                      std::to_string(cap));
  }
  if (n > 62) throw CapExceeded("free-fermion enumeration: n > 62 not representable");
}

/// Emits lambda for Gray-code positions [begin, end) in batches.
template <class Consumer>
EnumerationStats enumerate_range(const FreeFermionModes& m, std::uint64_t begin, std::uint64_t end, Consumer& consumer) {
  constexpr std::size_t kBatch = 4096;
  std::vector<double> twice(m.delta.size());
  for (std::size_t j = 0; j < twice.size(); ++j) twice[j] = 2.0 * m.delta[j];

  EnumerationStats stats;
  std::uint64_t x = begin ^ (begin >> 1);
  double lambda = eigenvalue_of(m, x);
  std::vector<double> buf(kBatch);
  std::size_t fill = 0;
  for (std::uint64_t g = begin; g < end; ++g) {
    if (g != begin) {
      const int j = std::countr_zero(g);
      x ^= std::uint64_t{1} << j;
      lambda += ((x >> j) & 1) ? twice[static_cast<std::size_t>(j)] : -twice[static_cast<std::size_t>(j)];
      if (((g - begin) & (kRecomputeInterval - 1)) == 0) {
        const double exact = eigenvalue_of(m, x);
        stats.max_drift = std::max(stats.max_drift, std::abs(exact - lambda));
        ++stats.checkpoints;
        lambda = exact;
      }
    }
    buf[fill++] = lambda;
    if (fill == kBatch) {
      consumer(std::span<const double>(buf.data(), fill));
      fill = 0;
    }
  }
  if (fill > 0) consumer(std::span<const double>(buf.data(), fill));
  if (end > begin) {
    stats.max_drift = std::max(stats.max_drift, std::abs(eigenvalue_of(m, x) - lambda));
    ++stats.checkpoints;
  }
  stats.count = end - begin;
  return stats;
}

}  // namespace detail

/// Streams all 2^n eigenvalues in Gray-code order to consumer(span<const
/// double>). One addition per eigenvalue; lambda is recomputed from scratch
/// every kRecomputeInterval steps and at the end, and the drift is recorded.
template <class Consumer>
EnumerationStats enumerate_spectrum(const FreeFermionModes& m, Consumer&& consumer, int stream_cap = kDefaultStreamCap) {
  detail::require_stream_cap(m.n, stream_cap);
  return detail::enumerate_range(m, 0, std::uint64_t{1} << m.n, consumer);
}

/// Parallel enumeration over a fixed number of contiguous Gray-code
/// segments. make() builds one accumulator per segment; accumulators are
/// merged in segment order via acc.merge(other), so the result does not
/// depend on the thread count.
template <class Accumulator, class Factory>
Accumulator enumerate_segmented(const FreeFermionModes& m, Factory make, EnumerationStats* stats = nullptr,
                                unsigned threads = 0, int stream_cap = kDefaultStreamCap,
                                int segment_log2 = 6) {
  detail::require_stream_cap(m.n, stream_cap);
  const int seg_log = std::min(segment_log2, m.n);
  const std::uint64_t segments = std::uint64_t{1} << seg_log;
  const std::uint64_t seg_len = std::uint64_t{1} << (m.n - seg_log);
  std::vector<Accumulator> acc;
  acc.reserve(segments);
  for (std::uint64_t s = 0; s < segments; ++s) acc.push_back(make());
  std::vector<EnumerationStats> seg_stats(segments);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, segments));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t s = next++; s < segments; s = next++) {
      seg_stats[s] = detail::enumerate_range(m, s * seg_len, (s + 1) * seg_len, acc[s]);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (std::uint64_t s = 1; s < segments; ++s) {
    acc[0].merge(acc[s]);
    seg_stats[0].merge(seg_stats[s]);
  }
  if (stats != nullptr) *stats = seg_stats[0];
  return std::move(acc[0]);
}

/// All 2^n eigenvalues, sorted ascending.
[[nodiscard]] inline std::vector<double> analytic_spectrum(const FreeFermionModes& m, int cap = 24) {
  detail::require_stream_cap(m.n, cap);
  std::vector<double> out;
  out.reserve(std::size_t{1} << m.n);
  enumerate_spectrum(m, [&](std::span<const double> v) { out.insert(out.end(), v.begin(), v.end()); }, cap);
  std::sort(out.begin(), out.end());
  return out;
}

/// Which occupation parity carries eta = +1, found by matching analytic
/// parity classes against the dense spectra of the two eta blocks.
struct EtaAssignment {
  int n = 0;
  double epsilon = 0.0;
  /// Parity r mod 2 whose eigenvalues form the eta = +1 block.
  int parity_for_eta_plus = 0;
  /// Max deviation between the matched sorted lists (both blocks).
  double max_deviation = 0.0;
  /// The matched deviation is below tolerance; false when neither
  /// assignment reproduces the blocks (e.g. even n).
  bool consistent = false;
};

[[nodiscard]] inline EtaAssignment resolve_eta_assignment(int n, double epsilon, double tol = 1e-9,
                                                          int dense_cap = 12) {
  if (n > dense_cap) throw CapExceeded("resolve_eta_assignment: n exceeds dense cap");
  const DenseMatrix h = to_dense(build_exyz(epsilon, n), dense_cap);
  // eta = prod Z_j is diagonal: eta |b> = (-1)^popcount(b) |b>, and H never
  // mixes the two parities.
  std::vector<Eigen::Index> idx[2];
  for (Eigen::Index b = 0; b < h.rows(); ++b) idx[std::popcount(static_cast<std::uint64_t>(b)) & 1].push_back(b);
  std::vector<double> block[2];  // [0] eta = +1, [1] eta = -1
  for (int p = 0; p < 2; ++p) {
    const auto dim = static_cast<Eigen::Index>(idx[p].size());
    DenseMatrix sub(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) sub(r, c) = h(idx[p][static_cast<std::size_t>(r)], idx[p][static_cast<std::size_t>(c)]);
    }
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sub, Eigen::EigenvaluesOnly);
    block[p].assign(es.eigenvalues().data(), es.eigenvalues().data() + dim);
  }
  const FreeFermionModes m = mode_energies(n, epsilon);
  std::vector<double> by_parity[2];
  for (std::uint64_t x = 0; x < (std::uint64_t{1} << n); ++x) by_parity[sector_of(x)].push_back(eigenvalue_of(m, x));
  for (auto& v : by_parity) std::sort(v.begin(), v.end());

  auto deviation = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
  };
  const double even_plus = std::max(deviation(by_parity[0], block[0]), deviation(by_parity[1], block[1]));
  const double odd_plus = std::max(deviation(by_parity[1], block[0]), deviation(by_parity[0], block[1]));
  EtaAssignment r;
  r.n = n;
  r.epsilon = epsilon;
  r.parity_for_eta_plus = even_plus <= odd_plus ? 0 : 1;
  r.max_deviation = std::min(even_plus, odd_plus);
  r.consistent = r.max_deviation <= tol;
  return r;
}

[[nodiscard]] inline bool is_odd_prime(int n) {
  if (n < 3 || n % 2 == 0) return false;
  for (int d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

struct GapRow {
  double epsilon = 0.0;
  double min_gap = 0.0;
  double spectral_range = 0.0;
};

struct GapScan {
  int n = 0;
  /// n is not an odd prime, so the existence argument does not apply.
  bool hypothesis_warning = false;
  std::vector<GapRow> rows;
};

/// Minimum gap of the sorted analytic spectrum for each epsilon.
[[nodiscard]] inline GapScan min_gap_scan(int n, std::span<const double> eps_grid, int cap = 24) {
  GapScan scan;
  scan.n = n;
  scan.hypothesis_warning = !is_odd_prime(n);
  for (double eps : eps_grid) {
    const auto spec = analytic_spectrum(mode_energies(n, eps), cap);
    GapRow row;
    row.epsilon = eps;
    row.spectral_range = spec.back() - spec.front();
    row.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < spec.size(); ++i) row.min_gap = std::min(row.min_gap, spec[i] - spec[i - 1]);
    scan.rows.push_back(row);
  }
  return scan;
}

}  // namespace qchain
