#ifndef TPT_ORACLE_HPP
#define TPT_ORACLE_HPP

#include <cstdint>
#include <limits>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/committor.hpp"
#include "tpt/errors.hpp"
#include "tpt/rng.hpp"

namespace tpt {

/// Verification engines independent of the linear-algebra solvers:
/// truncated path-probability enumeration and seeded trajectory
/// estimators. Meant for toy-scale chains.

struct TrajectorySample {
  std::vector<int> states;
  long long slice_offset = 0;
  std::uint64_t rng_seed = 0;
};

inline constexpr long long kNeverForward = std::numeric_limits<long long>::max();
inline constexpr long long kNeverBackward = std::numeric_limits<long long>::min();

/// First entrance times at-or-after n and last exit times at-or-before n,
/// evaluated on the sampled window. inf of an empty set is the forward
/// sentinel, sup of an empty set the backward one.
struct HittingTimes {
  long long first_entrance_a = kNeverForward;
  long long first_entrance_b = kNeverForward;
  long long last_exit_a = kNeverBackward;
  long long last_exit_b = kNeverBackward;
};

inline HittingTimes hitting_times(const TrajectorySample& traj, const AbSets& sets, long long n) {
  const long long len = static_cast<long long>(traj.states.size());
  if (n < traj.slice_offset || n >= traj.slice_offset + len)
    throw PreconditionError("hitting_times: time outside trajectory window");
  int max_state = 0;
  for (int s : traj.states) max_state = std::max(max_state, s);
  for (int s : sets.set_a) max_state = std::max(max_state, s);
  for (int s : sets.set_b) max_state = std::max(max_state, s);
  const auto roles = partition_roles(sets, max_state + 1);

  HittingTimes out;
  for (long long t = n; t < traj.slice_offset + len; ++t) {
    const Role r = roles[traj.states[t - traj.slice_offset]];
    if (r == Role::A && out.first_entrance_a == kNeverForward) out.first_entrance_a = t;
    if (r == Role::B && out.first_entrance_b == kNeverForward) out.first_entrance_b = t;
    if (out.first_entrance_a != kNeverForward && out.first_entrance_b != kNeverForward) break;
  }
  for (long long t = n; t >= traj.slice_offset; --t) {
    const Role r = roles[traj.states[t - traj.slice_offset]];
    if (r == Role::A && out.last_exit_a == kNeverBackward) out.last_exit_a = t;
    if (r == Role::B && out.last_exit_b == kNeverBackward) out.last_exit_b = t;
    if (out.last_exit_a != kNeverBackward && out.last_exit_b != kNeverBackward) break;
  }
  return out;
}

enum class Direction { forward, backward };

/// Lower bound from all paths of length <= max_len plus an exact bound on
/// the omitted mass (the probability of staying in C for max_len steps,
/// evaluated by repeated restricted matrix-vector products). The finite
/// regime enumerates every admissible path, so its truncation bound is 0.
struct EnumerationResult {
  double lower_bound = 0.0;
  double truncation_bound = 0.0;
};

inline EnumerationResult enumerate_committor(const ChainSpec& spec, const AbSets& sets, int state,
                                             int slice, int max_len, Direction direction,
                                             const Tolerances& tol = default_tolerances()) {
  if (max_len < 1) throw PreconditionError("enumerate_committor: max_len must be >= 1");
  const int n_states = n_states_of(spec);
  const auto roles = partition_roles(sets, n_states);
  if (state < 0 || state >= n_states || roles[state] != Role::C)
    throw PreconditionError("enumerate_committor: state must lie in the transition region");

  const Regime regime = regime_of(spec);
  const Role target = direction == Direction::forward ? Role::B : Role::A;

  // Matrices the walk uses, indexed by slice. Backward walks use the
  // time-reversed family.
  std::vector<TransitionMatrix> reversed;
  if (direction == Direction::backward)
    reversed = reverse_transitions(spec, densities_for(spec, tol));
  auto step_matrix = [&](int tau) -> const TransitionMatrix& {  // tau = 1, 2, ...
    switch (regime) {
      case Regime::stationary:
        return direction == Direction::forward ? slice_matrix(spec, 0) : reversed[0];
      case Regime::periodic: {
        const int m_count = slice_count(spec);
        const int m = direction == Direction::forward
                          ? (slice + tau - 1) % m_count
                          : ((slice - tau + 1) % m_count + m_count) % m_count;
        return direction == Direction::forward ? slice_matrix(spec, m) : reversed[m];
      }
      case Regime::finite:
      default:
        // reversed[k] holds the matrix acting from slice k+1 down to k
        return direction == Direction::forward ? slice_matrix(spec, slice + tau - 1)
                                               : reversed[slice - tau + 1 - 1];
    }
  };

  int steps = max_len;
  if (regime == Regime::finite) {
    const int horizon = slice_count(spec);
    if (slice < 0 || slice >= horizon)
      throw PreconditionError("enumerate_committor: slice outside window");
    steps = direction == Direction::forward ? horizon - 1 - slice : slice;
  }

  // Row vector over C, advanced through the restricted dynamics.
  std::vector<double> v(n_states, 0.0);
  v[state] = 1.0;
  EnumerationResult result;
  for (int tau = 1; tau <= steps; ++tau) {
    const TransitionMatrix& p = step_matrix(tau);
    std::vector<double> next(n_states, 0.0);
    double entered = 0.0;
    for (int i = 0; i < n_states; ++i) {
      if (v[i] == 0.0) continue;
      const auto row = p.row(i);
      for (int j = 0; j < n_states; ++j) {
        if (row[j] == 0.0) continue;
        const double mass = v[i] * row[j];
        if (roles[j] == target)
          entered += mass;
        else if (roles[j] == Role::C)
          next[j] += mass;
      }
    }
    result.lower_bound += entered;
    v = std::move(next);
    double remaining = 0.0;
    for (double x : v) remaining += x;
    if (remaining == 0.0) {
      result.truncation_bound = 0.0;
      return result;
    }
  }
  if (regime != Regime::finite) {
    double remaining = 0.0;
    for (double x : v) remaining += x;
    result.truncation_bound = remaining;
  }
  return result;
}

/// Seeded sample path of the chain. Stationary and periodic chains start
/// from pi (resp. pi_0) at slice 0, the finite regime from lambda(0);
/// `length` is the number of states in the sample (ignored for the finite
/// regime, whose window is fixed).
inline TrajectorySample simulate(const ChainSpec& spec, long long length, std::uint64_t seed,
                                 const Tolerances& tol = default_tolerances()) {
  const Regime regime = regime_of(spec);
  TrajectorySample traj;
  traj.rng_seed = seed;
  Rng rng = Rng::substream(seed, 0);

  const DensityFamily densities = densities_for(spec, tol);
  const long long steps = regime == Regime::finite ? slice_count(spec) : length;
  if (steps <= 0) throw PreconditionError("simulate: length must be positive");
  const long long period = regime == Regime::periodic ? slice_count(spec) : 1;
  traj.states.reserve(steps);
  int state = rng.sample_index(densities.slices.front());
  traj.states.push_back(state);
  for (long long n = 1; n < steps; ++n) {
    const int slot = regime == Regime::periodic ? static_cast<int>((n - 1) % period)
                                                : static_cast<int>(regime == Regime::finite ? n - 1 : 0);
    state = rng.sample_index(slice_matrix(spec, slot).row(state));
    traj.states.push_back(state);
  }
  return traj;
}

/// K independent realizations of a finite-window chain; trajectory k draws
/// from substream (seed, k), so the ensemble is reproducible regardless of
/// evaluation order.
inline std::vector<TrajectorySample> simulate_ensemble(const FiniteSpec& spec, int count,
                                                       std::uint64_t seed) {
  std::vector<TrajectorySample> out;
  out.reserve(count);
  const int horizon = spec.horizon();
  for (int k = 0; k < count; ++k) {
    TrajectorySample traj;
    traj.rng_seed = seed;
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    int state = rng.sample_index(spec.initial_density);
    traj.states.push_back(state);
    for (int n = 1; n < horizon; ++n) {
      state = rng.sample_index(spec.matrices[n - 1].row(state));
      traj.states.push_back(state);
    }
    out.push_back(std::move(traj));
  }
  return out;
}

/// Trajectory averages of mu, f and k over one long stationary sample,
/// with batch-means standard errors (the samples are autocorrelated, so
/// naive binomial errors would understate the uncertainty). Current
/// standard errors are only materialized for n_states <= 64; the rest of
/// the estimates have no such limit.
struct ErgodicEstimates {
  std::vector<double> mu, mu_se;
  Matrix current, current_se;
  double rate = 0.0, rate_se = 0.0;
  double z = 0.0, z_se = 0.0;
  long long steps = 0;
};

inline ErgodicEstimates ergodic_estimates(const TrajectorySample& traj, const AbSets& sets,
                                          int n_states) {
  const long long len = static_cast<long long>(traj.states.size());
  if (len < 2) throw PreconditionError("ergodic_estimates: trajectory too short");
  const auto roles = partition_roles(sets, n_states);

  // prev[t]: whether the last visit to A u B at-or-before t was in A
  // (0 none, 1 A, 2 B); next[t]: same forward in time.
  std::vector<unsigned char> prev(len, 0), next(len, 0);
  for (long long t = 0; t < len; ++t) {
    const Role r = roles[traj.states[t]];
    prev[t] = r == Role::C ? (t > 0 ? prev[t - 1] : 0) : static_cast<unsigned char>(r);
  }
  for (long long t = len - 1; t >= 0; --t) {
    const Role r = roles[traj.states[t]];
    next[t] = r == Role::C ? (t + 1 < len ? next[t + 1] : 0) : static_cast<unsigned char>(r);
  }
  const unsigned char in_a = static_cast<unsigned char>(Role::A);
  const unsigned char in_b = static_cast<unsigned char>(Role::B);

  ErgodicEstimates est;
  est.steps = len;
  const long long terms = len - 1;  // t = 0 .. len-2 for pair statistics
  const int batches = static_cast<int>(std::min<long long>(200, std::max<long long>(1, terms / 50)));
  const bool track_matrix = n_states <= 64;

  est.mu.assign(n_states, 0.0);
  est.mu_se.assign(n_states, 0.0);
  est.current = Matrix(n_states, n_states);
  if (track_matrix) est.current_se = Matrix(n_states, n_states);

  std::vector<double> batch_rate(batches, 0.0), batch_z(batches, 0.0);
  std::vector<std::vector<double>> batch_mu(batches, std::vector<double>(n_states, 0.0));
  std::vector<Matrix> batch_f;
  if (track_matrix) batch_f.assign(batches, Matrix(n_states, n_states));
  std::vector<long long> batch_len(batches, 0);

  for (long long t = 0; t < terms; ++t) {
    const int b = static_cast<int>(t * batches / terms);
    ++batch_len[b];
    const int i = traj.states[t];
    const bool reactive_here = prev[t] == in_a && next[t] == in_b && roles[i] == Role::C;
    if (reactive_here) {
      batch_mu[b][i] += 1.0;
      batch_z[b] += 1.0;
    }
    // prev[t] == A already rules out X_t in B, so this is exactly the
    // indicator product of the trajectory-average formulas.
    const bool departs = prev[t] == in_a && next[t + 1] == in_b;
    if (departs) {
      if (roles[i] == Role::A) batch_rate[b] += 1.0;
      if (track_matrix) batch_f[b](i, traj.states[t + 1]) += 1.0;
    }
  }

  // per_batch_value(b) is the batch SUM of indicator terms.
  auto finalize = [&](auto per_batch_value, double& mean_out, double& se_out) {
    double total = 0.0;
    for (int b = 0; b < batches; ++b) total += per_batch_value(b);
    const double mean = total / static_cast<double>(terms);
    double var = 0.0;
    for (int b = 0; b < batches; ++b) {
      const double d = per_batch_value(b) / batch_len[b] - mean;
      var += d * d;
    }
    mean_out = mean;
    se_out = batches > 1 ? std::sqrt(var / (batches - 1) / batches) : 0.0;
  };

  finalize([&](int b) { return batch_rate[b]; }, est.rate, est.rate_se);
  finalize([&](int b) { return batch_z[b]; }, est.z, est.z_se);
  for (int i = 0; i < n_states; ++i)
    finalize([&](int b) { return batch_mu[b][i]; }, est.mu[i], est.mu_se[i]);
  if (track_matrix) {
    for (int i = 0; i < n_states; ++i)
      for (int j = 0; j < n_states; ++j)
        finalize([&](int b) { return batch_f[b](i, j); }, est.current(i, j), est.current_se(i, j));
  }
  return est;
}

/// Monte-Carlo estimate of the window-averaged departure rate from K
/// i.i.d. finite-window realizations, with the i.i.d. sample standard
/// error of the per-realization averages.
struct EnsembleRate {
  double rate = 0.0;
  double se = 0.0;
  int realizations = 0;
};

inline EnsembleRate ensemble_rate_estimate(const FiniteSpec& spec, const AbSets& sets, int count,
                                           std::uint64_t seed) {
  if (count < 1) throw PreconditionError("ensemble_rate_estimate: need at least one realization");
  const int horizon = spec.horizon();
  const int n_states = spec.matrices.front().n_states();
  const auto roles = partition_roles(sets, n_states);

  double sum = 0.0, sum_sq = 0.0;
  std::vector<unsigned char> next(horizon, 0);
  std::vector<int> states(horizon, 0);
  for (int k = 0; k < count; ++k) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    int state = rng.sample_index(spec.initial_density);
    states[0] = state;
    for (int n = 1; n < horizon; ++n) {
      state = rng.sample_index(spec.matrices[n - 1].row(state));
      states[n] = state;
    }
    for (int n = horizon - 1; n >= 0; --n) {
      const Role r = roles[states[n]];
      next[n] = r == Role::C ? (n + 1 < horizon ? next[n + 1] : 0) : static_cast<unsigned char>(r);
    }
    double departures = 0.0;
    for (int n = 0; n + 1 < horizon; ++n)
      if (roles[states[n]] == Role::A && next[n + 1] == static_cast<unsigned char>(Role::B))
        departures += 1.0;
    const double y = departures / static_cast<double>(horizon);
    sum += y;
    sum_sq += y * y;
  }
  EnsembleRate out;
  out.realizations = count;
  out.rate = sum / count;
  if (count > 1) {
    const double var = (sum_sq - sum * sum / count) / (count - 1);
    out.se = std::sqrt(std::max(0.0, var) / count);
  }
  return out;
}

}  // namespace tpt

#endif  // TPT_ORACLE_HPP
