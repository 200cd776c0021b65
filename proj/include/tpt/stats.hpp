#ifndef TPT_STATS_HPP
#define TPT_STATS_HPP

#include <cmath>
#include <optional>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/committor.hpp"
#include "tpt/errors.hpp"

namespace tpt {

/// Worst node-conservation defect and source/sink imbalance found in a set
/// of reactive currents.
struct ConservationReport {
  double max_node_violation = 0.0;
  int worst_slice = -1;
  int worst_state = -1;
  double boundary_residual = 0.0;

  bool pass(double tol) const {
    return max_node_violation <= tol && boundary_residual <= tol;
  }
};

/// Per-slice reactive statistics plus the regime-level aggregates.
///
/// Slice layout by regime:
///   stationary  mu/z: 1 slice; currents/rates: 1 slice
///   periodic    mu/z: M slices; current m couples slice m to m+1 (mod M);
///               rate_out_a[m] = k^{A->}_m, rate_in_b[m] = k^{->B}_m
///   finite      mu/z: N slices; current n = 0..N-2;
///               rate_out_a[n] = k^{A->}(n), n = 0..N-2;
///               rate_in_b[k]  = k^{->B}(k+1), k = 0..N-2
struct ReactiveStats {
  Regime regime = Regime::stationary;
  int n_states = 0;
  std::vector<std::vector<double>> mu;
  std::vector<std::optional<std::vector<double>>> mu_hat;  // nullopt where Z = 0
  std::vector<double> z;
  std::vector<double> rate_out_a;
  std::vector<double> rate_in_b;

  std::vector<Matrix> current;    // filled only when currents_stored
  std::vector<Matrix> effective;
  bool currents_stored = false;

  double k_ab = 0.0;               // k^AB / period-averaged / window-averaged rate
  double k_ab_from_inflow = 0.0;   // same aggregate computed from the B side
  std::optional<double> z_aggregate;  // Z^AB (stationary) or window average
  std::optional<double> t_aggregate;  // mean transition time, when defined

  ConservationReport conservation;
};

/// mu_i(n) = q-_i(n) * rho_i(n) * q+_i(n); identically zero on A and B.
inline std::vector<std::vector<double>> reactive_distribution(const CommittorField& committors,
                                                              const DensityFamily& densities,
                                                              const AbSets& sets) {
  const int slices = static_cast<int>(densities.slices.size());
  const int n_states = static_cast<int>(densities.slices.front().size());
  const auto roles = partition_roles(sets, n_states);
  std::vector<std::vector<double>> mu(slices, std::vector<double>(n_states, 0.0));
  for (int n = 0; n < slices; ++n) {
    const auto& qm = committors.backward_at(n);
    const auto& qp = committors.forward_at(n);
    const auto& rho = densities.slices[n];
    for (int i = 0; i < n_states; ++i)
      if (roles[i] == Role::C) mu[n][i] = qm[i] * rho[i] * qp[i];
  }
  return mu;
}

/// Normalizes each slice by Z(n) = sum_C mu(n); slices with Z = 0 come
/// back as an explicit undefined marker, never NaN.
inline std::vector<std::optional<std::vector<double>>> normalize_reactive(
    const std::vector<std::vector<double>>& mu) {
  std::vector<std::optional<std::vector<double>>> out(mu.size());
  for (std::size_t n = 0; n < mu.size(); ++n) {
    double z = 0.0;
    for (double v : mu[n]) z += v;
    if (z > 0.0) {
      std::vector<double> normalized(mu[n]);
      for (double& v : normalized) v /= z;
      out[n] = std::move(normalized);
    }
  }
  return out;
}

/// Number of slices carrying a reactive current: 1 (stationary),
/// M (periodic), N-1 (finite).
inline int current_slice_count(const ChainSpec& spec) {
  switch (regime_of(spec)) {
    case Regime::stationary: return 1;
    case Regime::periodic: return slice_count(spec);
    case Regime::finite: return slice_count(spec) - 1;
  }
  return 0;
}

namespace detail {

/// Committor slice the current at slice n couples into (the "n+1" of the
/// defining formula).
inline int next_slice(const ChainSpec& spec, int n) {
  switch (regime_of(spec)) {
    case Regime::stationary: return 0;
    case Regime::periodic: return (n + 1) % slice_count(spec);
    case Regime::finite: return n + 1;
  }
  return 0;
}

}  // namespace detail

/// f_ij(n) = q-_i(n) rho_i(n) P_ij(n) q+_j(n+1) for one slice.
inline Matrix reactive_current_slice(const CommittorField& committors,
                                     const DensityFamily& densities, const ChainSpec& spec,
                                     int n) {
  const int n_states = n_states_of(spec);
  const auto& p = slice_matrix(spec, n);
  const auto& qm = committors.backward_at(n);
  const auto& qp_next = committors.forward_at(detail::next_slice(spec, n));
  const auto& rho = densities.at(n);
  Matrix f(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    const double w = qm[i] * rho[i];
    if (w == 0.0) continue;
    const auto row = p.row(i);
    for (int j = 0; j < n_states; ++j)
      if (row[j] != 0.0) f(i, j) = w * row[j] * qp_next[j];
  }
  return f;
}

/// All current slices (1 stationary, M periodic, N-1 finite). For long
/// windows prefer compute_stats, which streams instead of storing.
inline std::vector<Matrix> reactive_current(const CommittorField& committors,
                                            const DensityFamily& densities, const ChainSpec& spec,
                                            const AbSets&) {
  std::vector<Matrix> out;
  const int count = current_slice_count(spec);
  out.reserve(count);
  for (int n = 0; n < count; ++n)
    out.push_back(reactive_current_slice(committors, densities, spec, n));
  return out;
}

/// f+_ij = max(f_ij - f_ji, 0). Negative inputs beyond roundoff are bugs.
inline Matrix effective_current(const Matrix& f) {
  const int n = f.rows();
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double fij = f(i, j);
      if (fij < 0.0) {
        if (fij < -1e-12) throw SolverError("effective_current: negative input current", -fij);
        fij = 0.0;
      }
      double fji = f(j, i);
      if (fji < 0.0) fji = 0.0;
      const double net = fij - fji;
      out(i, j) = net > 0.0 ? net : 0.0;
    }
  return out;
}

inline std::vector<Matrix> effective_current(const std::vector<Matrix>& currents) {
  std::vector<Matrix> out;
  out.reserve(currents.size());
  for (const auto& f : currents) out.push_back(effective_current(f));
  return out;
}

/// Per-slice departure/arrival rates read off a set of current slices,
/// plus the regime aggregate (k^AB, or the period/window average).
struct RateSeries {
  std::vector<double> out_a;  // k^{A->} per current slice
  std::vector<double> in_b;   // k^{->B}; entry k refers to arrival slice k+1 outside stationary
  double aggregate_out = 0.0;
  double aggregate_in = 0.0;
};

inline RateSeries rates(const std::vector<Matrix>& currents, const AbSets& sets, Regime regime) {
  RateSeries r;
  if (currents.empty()) return r;
  const int n_states = currents.front().rows();
  const auto roles = partition_roles(sets, n_states);
  for (const auto& f : currents) {
    double out_a = 0.0, in_b = 0.0;
    for (int i = 0; i < n_states; ++i) {
      const auto row = f.row(i);
      if (roles[i] == Role::A)
        for (int j = 0; j < n_states; ++j) out_a += row[j];
      for (int j = 0; j < n_states; ++j)
        if (roles[j] == Role::B) in_b += row[j];
    }
    r.out_a.push_back(out_a);
    r.in_b.push_back(in_b);
  }
  double total_out = 0.0, total_in = 0.0;
  for (double v : r.out_a) total_out += v;
  for (double v : r.in_b) total_in += v;
  // Stationary: the rate itself. Periodic: average over the M slices.
  // Finite: average over the window length N = (#currents) + 1.
  double denom = 1.0;
  if (regime == Regime::periodic) denom = static_cast<double>(r.out_a.size());
  if (regime == Regime::finite) denom = static_cast<double>(r.out_a.size() + 1);
  r.aggregate_out = total_out / denom;
  r.aggregate_in = total_in / denom;
  return r;
}

/// Node conservation and A-outflow/B-inflow balance of a set of currents.
inline ConservationReport check_conservation(const std::vector<Matrix>& currents,
                                             const AbSets& sets, Regime regime) {
  ConservationReport report;
  if (currents.empty()) return report;
  const int n_states = currents.front().rows();
  const auto roles = partition_roles(sets, n_states);
  const int count = static_cast<int>(currents.size());

  auto row_sum = [&](const Matrix& f, int i) {
    double s = 0.0;
    for (int j = 0; j < n_states; ++j) s += f(i, j);
    return s;
  };
  auto col_sum = [&](const Matrix& f, int i) {
    double s = 0.0;
    for (int j = 0; j < n_states; ++j) s += f(j, i);
    return s;
  };

  // Node law: outflow at slice n equals inflow at slice n-1 on C. In the
  // stationary regime both live on the single slice; the finite regime
  // checks interior slices only.
  for (int n = 0; n < count; ++n) {
    int prev = n - 1;
    if (regime == Regime::stationary) prev = 0;
    if (regime == Regime::periodic) prev = (n - 1 + count) % count;
    if (regime == Regime::finite && n == 0) continue;
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] != Role::C) continue;
      const double v = std::abs(row_sum(currents[n], i) - col_sum(currents[prev], i));
      if (v > report.max_node_violation) {
        report.max_node_violation = v;
        report.worst_slice = n;
        report.worst_state = i;
      }
    }
  }

  double total_out = 0.0, total_in = 0.0;
  for (int n = 0; n < count; ++n) {
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] == Role::A) total_out += row_sum(currents[n], i);
      if (roles[i] == Role::B) total_in += col_sum(currents[n], i);
    }
  }
  report.boundary_residual = std::abs(total_out - total_in);
  return report;
}

/// Mean transition time t = Z / k. Defined for the stationary and finite
/// regimes; undefined marker when the rate vanishes (or for periodic
/// statistics, which carry no such aggregate).
inline std::optional<double> mean_transition_time(const ReactiveStats& stats) {
  if (!stats.z_aggregate.has_value()) return std::nullopt;
  if (!(stats.k_ab > 0.0)) return std::nullopt;
  return *stats.z_aggregate / stats.k_ab;
}

struct StatsOptions {
  /// -1 = store full current matrices when slices * n^2 is small enough,
  /// 0 = never, 1 = always.
  int store_currents = -1;
  std::size_t store_budget = 4000000;
};

/// Drives the full statistics pipeline. Scalar series (mu, Z, rates,
/// conservation) are computed for every slice by streaming over the
/// transition structure; full current matrices are materialized only when
/// they fit the storage policy. Aggregates are accumulated in slice order
/// so repeated runs are bit-identical.
inline ReactiveStats compute_stats(const CommittorField& committors,
                                   const DensityFamily& densities, const ChainSpec& spec,
                                   const AbSets& sets, const StatsOptions& options = {}) {
  ReactiveStats stats;
  stats.regime = regime_of(spec);
  stats.n_states = n_states_of(spec);
  const int n_states = stats.n_states;
  const auto roles = partition_roles(sets, n_states);

  stats.mu = reactive_distribution(committors, densities, sets);
  stats.mu_hat = normalize_reactive(stats.mu);
  stats.z.resize(stats.mu.size());
  for (std::size_t n = 0; n < stats.mu.size(); ++n) {
    double z = 0.0;
    for (double v : stats.mu[n]) z += v;
    stats.z[n] = z;
  }

  const int current_count = current_slice_count(spec);
  const std::size_t dense_cost =
      static_cast<std::size_t>(current_count) * n_states * n_states;
  stats.currents_stored =
      options.store_currents == 1 ||
      (options.store_currents == -1 && dense_cost <= options.store_budget);

  // Per-slice out/inflow vectors; two passes over P(n) per slice.
  std::vector<std::vector<double>> outflow(current_count), inflow(current_count);
  for (int n = 0; n < current_count; ++n) {
    const auto& p = slice_matrix(spec, n);
    const auto& qm = committors.backward_at(n);
    const auto& qp_next = committors.forward_at(detail::next_slice(spec, n));
    const auto& rho = densities.at(n);
    std::vector<double>& out = outflow[n];
    std::vector<double>& in = inflow[n];
    out.assign(n_states, 0.0);
    in.assign(n_states, 0.0);
    for (int i = 0; i < n_states; ++i) {
      const double w = qm[i] * rho[i];
      if (w == 0.0) continue;
      const auto row = p.row(i);
      double s = 0.0;
      for (int j = 0; j < n_states; ++j) {
        const double fij = w * row[j] * qp_next[j];
        s += fij;
        in[j] += fij;
      }
      out[i] = s;
    }
    if (stats.currents_stored) {
      stats.current.push_back(reactive_current_slice(committors, densities, spec, n));
      stats.effective.push_back(effective_current(stats.current.back()));
    }
  }

  for (int n = 0; n < current_count; ++n) {
    double out_a = 0.0, in_b = 0.0;
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] == Role::A) out_a += outflow[n][i];
      if (roles[i] == Role::B) in_b += inflow[n][i];
    }
    stats.rate_out_a.push_back(out_a);
    stats.rate_in_b.push_back(in_b);
  }

  double total_out = 0.0, total_in = 0.0;
  for (double v : stats.rate_out_a) total_out += v;
  for (double v : stats.rate_in_b) total_in += v;
  switch (stats.regime) {
    case Regime::stationary:
      stats.k_ab = total_out;
      stats.k_ab_from_inflow = total_in;
      stats.z_aggregate = stats.z[0];
      break;
    case Regime::periodic:
      stats.k_ab = total_out / current_count;
      stats.k_ab_from_inflow = total_in / current_count;
      break;
    case Regime::finite: {
      const double horizon = static_cast<double>(slice_count(spec));
      stats.k_ab = total_out / horizon;
      stats.k_ab_from_inflow = total_in / horizon;
      double z_sum = 0.0;
      for (double v : stats.z) z_sum += v;
      stats.z_aggregate = z_sum / horizon;
      break;
    }
  }
  stats.t_aggregate = mean_transition_time(stats);

  // Conservation from the streamed flow vectors.
  ConservationReport& report = stats.conservation;
  for (int n = 0; n < current_count; ++n) {
    int prev = n - 1;
    if (stats.regime == Regime::stationary) prev = 0;
    if (stats.regime == Regime::periodic) prev = (n - 1 + current_count) % current_count;
    if (stats.regime == Regime::finite && n == 0) continue;
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] != Role::C) continue;
      const double v = std::abs(outflow[n][i] - inflow[prev][i]);
      if (v > report.max_node_violation) {
        report.max_node_violation = v;
        report.worst_slice = n;
        report.worst_state = i;
      }
    }
  }
  report.boundary_residual = std::abs(total_out - total_in);
  return stats;
}

}  // namespace tpt

#endif  // TPT_STATS_HPP
