#ifndef TPT_COMMITTOR_HPP
#define TPT_COMMITTOR_HPP

#include <cmath>
#include <string>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/errors.hpp"
#include "tpt/linalg.hpp"

namespace tpt {

/// Forward and backward committor values per time slice. Slicing follows
/// the regime: 1 slice (stationary), M slices (periodic), N slices
/// (finite). Residuals are the max-norm defect of the defining equations
/// measured after the solve.
struct CommittorField {
  Regime regime = Regime::stationary;
  std::vector<std::vector<double>> forward;
  std::vector<std::vector<double>> backward;
  double residual_forward = 0.0;
  double residual_backward = 0.0;

  const std::vector<double>& forward_at(int n) const { return forward[slice_index(n)]; }
  const std::vector<double>& backward_at(int n) const { return backward[slice_index(n)]; }

 private:
  int slice_index(int n) const {
    if (regime == Regime::stationary) return 0;
    if (regime == Regime::periodic) {
      const int m = static_cast<int>(forward.size());
      return ((n % m) + m) % m;
    }
    return n;
  }
};

/// M dynamical regimes with a row-stochastic switching matrix between
/// them. While the chain sits in regime m its state moves by `regimes[m]`;
/// the regime index then jumps according to `regime_transition`. With the
/// deterministic cyclic shift this is exactly the period-augmented chain.
struct SwitchingSpec {
  std::vector<TransitionMatrix> regimes;
  Matrix regime_transition;
};

namespace detail {

struct Restriction {
  std::vector<int> c_states;  // global indices of C, ascending
  std::vector<int> c_index;   // global index -> local index in C, or -1
};

inline Restriction make_restriction(const std::vector<Role>& roles) {
  Restriction r;
  r.c_index.assign(roles.size(), -1);
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == Role::C) {
      r.c_index[i] = static_cast<int>(r.c_states.size());
      r.c_states.push_back(static_cast<int>(i));
    }
  }
  return r;
}

inline Matrix restrict_cc(const TransitionMatrix& p, const Restriction& r) {
  const int c = static_cast<int>(r.c_states.size());
  Matrix out(c, c);
  for (int a = 0; a < c; ++a) {
    const auto row = p.row(r.c_states[a]);
    for (int b = 0; b < c; ++b) out(a, b) = row[r.c_states[b]];
  }
  return out;
}

/// (sum_{j in `target`} P_ij)_{i in C}.
inline std::vector<double> restrict_mass_to(const TransitionMatrix& p, const Restriction& r,
                                            const std::vector<Role>& roles, Role target) {
  std::vector<double> out(r.c_states.size(), 0.0);
  for (std::size_t a = 0; a < r.c_states.size(); ++a) {
    const auto row = p.row(r.c_states[a]);
    double s = 0.0;
    for (std::size_t j = 0; j < roles.size(); ++j)
      if (roles[j] == target) s += row[j];
    out[a] = s;
  }
  return out;
}

inline std::vector<double> assemble_full(const std::vector<double>& on_c, const Restriction& r,
                                         const std::vector<Role>& roles, Role one_on) {
  std::vector<double> q(roles.size(), 0.0);
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] == one_on)
      q[i] = 1.0;
    else if (roles[i] == Role::C)
      q[i] = on_c[r.c_index[i]];
  }
  return q;
}

/// Tie/underflow policy: clip pure roundoff into [0,1]; larger violations
/// are treated as solver bugs.
inline void clip_unit_interval(std::vector<double>& q, double clip_tol) {
  for (double& v : q) {
    if (v < 0.0) {
      if (v < -clip_tol) throw SolverError("committor value escapes [0,1]", -v);
      v = 0.0;
    } else if (v > 1.0) {
      if (v > 1.0 + clip_tol) throw SolverError("committor value escapes [0,1]", v - 1.0);
      v = 1.0;
    }
  }
}

/// max_{i in C} |q_i - sum_j P_ij next_j|.
inline double slice_residual(const TransitionMatrix& p, const std::vector<Role>& roles,
                             const std::vector<double>& q, const std::vector<double>& q_next) {
  double worst = 0.0;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    if (roles[i] != Role::C) continue;
    double s = 0.0;
    const auto row = p.row(static_cast<int>(i));
    for (std::size_t j = 0; j < q_next.size(); ++j) s += row[j] * q_next[j];
    worst = std::max(worst, std::abs(q[i] - s));
  }
  return worst;
}

/// Solves the one-slice boundary problem (I - P|_{C->C}) x = P|_{C->one_on} 1
/// and assembles the full vector with the boundary values filled in.
inline std::vector<double> solve_boundary_problem(const TransitionMatrix& p,
                                                  const std::vector<Role>& roles, Role one_on,
                                                  const Restriction& r) {
  const int c = static_cast<int>(r.c_states.size());
  std::vector<double> x;
  if (c > 0) {
    Matrix sys = restrict_cc(p, r);
    for (int a = 0; a < c; ++a) {
      for (int b = 0; b < c; ++b) sys(a, b) = -sys(a, b);
      sys(a, a) += 1.0;
    }
    x = solve_dense(std::move(sys), restrict_mass_to(p, r, roles, one_on));
  }
  return assemble_full(x, r, roles, one_on);
}

}  // namespace detail

/// Committors of a stationary, infinite-time chain: q+ solves the linear
/// system on C with boundary 0 on A / 1 on B, q- the mirrored system for
/// the time-reversed chain. Direct solve; unique under irreducibility.
inline CommittorField solve_stationary(const TransitionMatrix& p, const AbSets& sets,
                                       const Tolerances& tol = default_tolerances()) {
  const auto roles = partition_roles(sets, p.n_states());
  if (!is_strongly_connected(p.dense()))
    throw PreconditionError("solve_stationary: P is not irreducible");
  const auto restriction = detail::make_restriction(roles);

  std::vector<double> q_plus = detail::solve_boundary_problem(p, roles, Role::B, restriction);

  const auto pi = stationary_distribution(p, tol);
  DensityFamily family{Regime::stationary, {pi}};
  const ChainSpec as_spec = StationarySpec{p};
  const TransitionMatrix p_back = reverse_transitions(as_spec, family).front();
  std::vector<double> q_minus = detail::solve_boundary_problem(p_back, roles, Role::A, restriction);

  CommittorField field;
  field.regime = Regime::stationary;
  field.residual_forward = detail::slice_residual(p, roles, q_plus, q_plus);
  field.residual_backward = detail::slice_residual(p_back, roles, q_minus, q_minus);
  if (field.residual_forward > tol.committor_residual ||
      field.residual_backward > tol.committor_residual)
    throw SolverError("solve_stationary: residual above tolerance",
                      std::max(field.residual_forward, field.residual_backward));
  detail::clip_unit_interval(q_plus, tol.committor_clip);
  detail::clip_unit_interval(q_minus, tol.committor_clip);
  field.forward.push_back(std::move(q_plus));
  field.backward.push_back(std::move(q_minus));
  return field;
}

enum class PeriodicMethod { augmented, stacked };

namespace detail {

/// Stacked route: compose the M restricted slices into one |C| x |C|
/// system at slice 0, solve it, then roll the one-step equations through
/// the remaining slices. `order` lists the slice of the matrix applied at
/// step tau = 1..M; `advance` maps a slice to the one the recursion feeds
/// from when rolling out.
inline std::vector<std::vector<double>> periodic_stacked(
    const std::vector<const TransitionMatrix*>& mats, const std::vector<Role>& roles, Role one_on,
    const Restriction& r, const std::vector<int>& order, bool forward_rollout) {
  const int m_count = static_cast<int>(mats.size());
  const int c = static_cast<int>(r.c_states.size());
  std::vector<std::vector<double>> q(m_count);

  std::vector<double> x;
  if (c > 0) {
    // rhs = sum_tau (prefix of CC factors) * (slice tau's mass into the set)
    std::vector<double> rhs(c, 0.0);
    Matrix prefix;  // product of the first tau-1 CC blocks
    for (int tau = 0; tau < m_count; ++tau) {
      const TransitionMatrix& p_tau = *mats[order[tau]];
      std::vector<double> term = restrict_mass_to(p_tau, r, roles, one_on);
      if (tau > 0) term = right_apply(prefix, term);
      for (int a = 0; a < c; ++a) rhs[a] += term[a];
      Matrix cc = restrict_cc(p_tau, r);
      prefix = (tau == 0) ? std::move(cc) : multiply(prefix, cc);
    }
    Matrix sys(c, c);
    for (int a = 0; a < c; ++a)
      for (int b = 0; b < c; ++b) sys(a, b) = (a == b ? 1.0 : 0.0) - prefix(a, b);
    x = solve_dense(std::move(sys), std::move(rhs));
  }
  q[0] = assemble_full(x, r, roles, one_on);

  if (m_count > 1) {
    if (forward_rollout) {
      // q-_m = Pb_m|CC q-_{m-1} + Pb_m|C->A 1, m = 1..M-1
      for (int m = 1; m < m_count; ++m) {
        std::vector<double> on_c(c, 0.0);
        const TransitionMatrix& p_m = *mats[m];
        for (int a = 0; a < c; ++a) {
          const auto row = p_m.row(r.c_states[a]);
          double s = 0.0;
          for (std::size_t j = 0; j < roles.size(); ++j) s += row[j] * q[m - 1][j];
          on_c[a] = s;
        }
        q[m] = assemble_full(on_c, r, roles, one_on);
      }
    } else {
      // q+_m = P_m|CC q+_{m+1} + P_m|C->B 1, m = M-1..1, with q+_M = q+_0
      for (int m = m_count - 1; m >= 1; --m) {
        const std::vector<double>& next = q[(m + 1) % m_count];
        std::vector<double> on_c(c, 0.0);
        const TransitionMatrix& p_m = *mats[m];
        for (int a = 0; a < c; ++a) {
          const auto row = p_m.row(r.c_states[a]);
          double s = 0.0;
          for (std::size_t j = 0; j < roles.size(); ++j) s += row[j] * next[j];
          on_c[a] = s;
        }
        q[m] = assemble_full(on_c, r, roles, one_on);
      }
    }
  }
  return q;
}

/// Augmented route: one sparse-structured block system of size |C|*M with
/// block (m, link(m)) = slice m's CC restriction.
inline std::vector<std::vector<double>> periodic_augmented(
    const std::vector<const TransitionMatrix*>& mats, const std::vector<Role>& roles, Role one_on,
    const Restriction& r, const std::vector<int>& link) {
  const int m_count = static_cast<int>(mats.size());
  const int c = static_cast<int>(r.c_states.size());
  std::vector<std::vector<double>> q(m_count);
  std::vector<double> x;
  if (c > 0) {
    const int size = c * m_count;
    Matrix sys(size, size);
    std::vector<double> rhs(size, 0.0);
    for (int m = 0; m < m_count; ++m) {
      const Matrix cc = restrict_cc(*mats[m], r);
      const std::vector<double> mass = restrict_mass_to(*mats[m], r, roles, one_on);
      const int row0 = m * c;
      const int col0 = link[m] * c;
      for (int a = 0; a < c; ++a) {
        sys(row0 + a, row0 + a) += 1.0;
        for (int b = 0; b < c; ++b) sys(row0 + a, col0 + b) -= cc(a, b);
        rhs[row0 + a] = mass[a];
      }
    }
    x = solve_dense(std::move(sys), std::move(rhs));
  }
  for (int m = 0; m < m_count; ++m) {
    std::vector<double> on_c(x.begin() + static_cast<std::ptrdiff_t>(m) * c,
                             x.begin() + static_cast<std::ptrdiff_t>(m + 1) * c);
    q[m] = assemble_full(on_c, r, roles, one_on);
  }
  return q;
}

}  // namespace detail

/// Committors of an M-periodic chain, solved either through the augmented
/// |C|*M block system (default) or by composing one period into a single
/// |C| system and rolling the slices out (`stacked`). Both satisfy the
/// periodic boundary condition q_M = q_0 and agree to method_agreement.
inline CommittorField solve_periodic(const std::vector<TransitionMatrix>& matrices,
                                     const AbSets& sets,
                                     PeriodicMethod method = PeriodicMethod::augmented,
                                     const Tolerances& tol = default_tolerances()) {
  if (matrices.empty()) throw PreconditionError("solve_periodic: no matrices");
  const int m_count = static_cast<int>(matrices.size());
  const int n = matrices.front().n_states();
  const auto roles = partition_roles(sets, n);
  const auto restriction = detail::make_restriction(roles);

  const DensityFamily family = periodic_stationary_family(matrices, tol);  // gates irreducibility
  const ChainSpec as_spec = PeriodicSpec{matrices};
  const std::vector<TransitionMatrix> backward = reverse_transitions(as_spec, family);

  std::vector<const TransitionMatrix*> fwd(m_count), bwd(m_count);
  for (int m = 0; m < m_count; ++m) {
    fwd[m] = &matrices[m];
    bwd[m] = &backward[m];
  }

  CommittorField field;
  field.regime = Regime::periodic;
  if (method == PeriodicMethod::stacked) {
    // forward: factors applied in slice order 0,1,...,M-1
    std::vector<int> order_f(m_count), order_b(m_count);
    for (int t = 0; t < m_count; ++t) {
      order_f[t] = t;
      order_b[t] = (m_count - t) % m_count;  // 0, M-1, M-2, ..., 1
    }
    field.forward = detail::periodic_stacked(fwd, roles, Role::B, restriction, order_f, false);
    field.backward = detail::periodic_stacked(bwd, roles, Role::A, restriction, order_b, true);
  } else {
    std::vector<int> link_f(m_count), link_b(m_count);
    for (int m = 0; m < m_count; ++m) {
      link_f[m] = (m + 1) % m_count;
      link_b[m] = (m - 1 + m_count) % m_count;
    }
    field.forward = detail::periodic_augmented(fwd, roles, Role::B, restriction, link_f);
    field.backward = detail::periodic_augmented(bwd, roles, Role::A, restriction, link_b);
  }

  for (int m = 0; m < m_count; ++m) {
    field.residual_forward =
        std::max(field.residual_forward, detail::slice_residual(matrices[m], roles,
                                                                field.forward[m],
                                                                field.forward[(m + 1) % m_count]));
    field.residual_backward = std::max(
        field.residual_backward,
        detail::slice_residual(backward[m], roles, field.backward[m],
                               field.backward[(m - 1 + m_count) % m_count]));
  }
  if (field.residual_forward > tol.committor_residual ||
      field.residual_backward > tol.committor_residual)
    throw SolverError("solve_periodic: residual above tolerance",
                      std::max(field.residual_forward, field.residual_backward));
  for (auto& q : field.forward) detail::clip_unit_interval(q, tol.committor_clip);
  for (auto& q : field.backward) detail::clip_unit_interval(q, tol.committor_clip);
  return field;
}

/// Committors over a finite window: exact sweeps, no linear solve. The
/// forward field runs backward from q+(N-1) = 1_B, the backward field
/// forward from q-(0) = 1_A using the time-reversed matrices. States with
/// zero density get zero backward rows, hence backward committor 0.
inline CommittorField solve_finite(const FiniteSpec& spec, const AbSets& sets,
                                   const Tolerances& tol = default_tolerances()) {
  if (spec.matrices.empty()) throw PreconditionError("solve_finite: empty spec");
  const int n_states = spec.matrices.front().n_states();
  const int horizon = spec.horizon();
  const auto roles = partition_roles(sets, n_states);

  const DensityFamily densities = propagate_density(spec);

  CommittorField field;
  field.regime = Regime::finite;
  field.forward.assign(horizon, std::vector<double>(n_states, 0.0));
  field.backward.assign(horizon, std::vector<double>(n_states, 0.0));

  for (int i = 0; i < n_states; ++i) {
    field.forward[horizon - 1][i] = roles[i] == Role::B ? 1.0 : 0.0;
    field.backward[0][i] = roles[i] == Role::A ? 1.0 : 0.0;
  }
  for (int n = horizon - 2; n >= 0; --n) {
    const auto& p = spec.matrices[n];
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] == Role::A) continue;
      if (roles[i] == Role::B) {
        field.forward[n][i] = 1.0;
        continue;
      }
      double s = 0.0;
      const auto row = p.row(i);
      for (int j = 0; j < n_states; ++j) s += row[j] * field.forward[n + 1][j];
      field.forward[n][i] = s;
    }
  }
  // reversed slices are built one at a time; long windows stay cheap
  for (int n = 1; n < horizon; ++n) {
    const TransitionMatrix pb = detail::reverse_slice(spec.matrices[n - 1],
                                                      densities.slices[n - 1], densities.slices[n]);
    for (int i = 0; i < n_states; ++i) {
      if (roles[i] == Role::B) continue;
      if (roles[i] == Role::A) {
        field.backward[n][i] = 1.0;
        continue;
      }
      double s = 0.0;
      const auto row = pb.row(i);
      for (int j = 0; j < n_states; ++j) s += row[j] * field.backward[n - 1][j];
      field.backward[n][i] = s;
    }
  }
  for (auto& q : field.forward) detail::clip_unit_interval(q, tol.committor_clip);
  for (auto& q : field.backward) detail::clip_unit_interval(q, tol.committor_clip);
  return field;
}

inline CommittorField solve_committors(const ChainSpec& spec, const AbSets& sets,
                                       PeriodicMethod method = PeriodicMethod::augmented,
                                       const Tolerances& tol = default_tolerances()) {
  if (const auto* s = std::get_if<StationarySpec>(&spec)) return solve_stationary(s->matrix, sets, tol);
  if (const auto* p = std::get_if<PeriodicSpec>(&spec)) return solve_periodic(p->matrices, sets, method, tol);
  return solve_finite(std::get<FiniteSpec>(spec), sets, tol);
}

namespace detail {

/// Stochastic matrix of the regime-augmented chain on S x {0..M-1}:
/// entry ((m,i),(m',j)) = Phat_{m m'} * P_m(i,j).
inline TransitionMatrix switching_augmented_matrix(const SwitchingSpec& spec) {
  const int m_count = static_cast<int>(spec.regimes.size());
  const int n = spec.regimes.front().n_states();
  Matrix aug(m_count * n, m_count * n);
  for (int m = 0; m < m_count; ++m) {
    for (int mp = 0; mp < m_count; ++mp) {
      const double w = spec.regime_transition(m, mp);
      if (w == 0.0) continue;
      for (int i = 0; i < n; ++i) {
        const auto row = spec.regimes[m].row(i);
        for (int j = 0; j < n; ++j)
          if (row[j] != 0.0) aug(m * n + i, mp * n + j) = w * row[j];
      }
    }
  }
  return TransitionMatrix(std::move(aug));
}

/// Spectral radius estimate of a nonnegative matrix by normalized power
/// steps on a strictly positive start vector.
inline double spectral_radius_estimate(const Matrix& a, int iterations = 300) {
  const int n = a.rows();
  if (n == 0) return 0.0;
  std::vector<double> v(n, 1.0);
  double rho = 0.0;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> w = right_apply(a, v);
    double norm = 0.0;
    for (double x : w) norm = std::max(norm, std::abs(x));
    if (norm == 0.0) return 0.0;
    rho = norm;
    for (double& x : w) x /= norm;
    v = std::move(w);
  }
  return rho;
}

/// Stationary density of the augmented chain. Power iteration on the
/// half-lazy chain converges for every structure that occurs here
/// (including reducible block-diagonal switching); GTH is used when the
/// augmented chain is strongly connected and iteration stalls.
inline std::vector<double> augmented_stationary_density(const TransitionMatrix& aug,
                                                        const Tolerances& tol) {
  const int n = aug.n_states();
  std::vector<double> v(n, 1.0 / n);
  double residual = 1.0;
  for (std::uint64_t it = 0; it < tol.power_cap; ++it) {
    std::vector<double> w = left_apply(v, aug.dense());
    residual = max_abs_diff(w, v);
    if (residual < tol.power_target) return w;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = 0.5 * (v[i] + w[i]);
      total += v[i];
    }
    for (double& x : v) x /= total;
    if (it == 20000) {
      if (is_strongly_connected(aug.dense())) return gth_stationary(aug.dense());
    }
  }
  if (residual <= tol.committor_residual) return v;
  throw SolverError("solve_switching: augmented density did not converge", residual);
}

}  // namespace detail

/// Committors for stochastic regime switching, computed on the
/// regime-augmented state space and reported per regime (slice m = the
/// committor while the chain moves by P_m). Deterministic cyclic switching
/// reproduces the periodic solution slice for slice.
inline CommittorField solve_switching(const SwitchingSpec& spec, const AbSets& sets,
                                      const Tolerances& tol = default_tolerances()) {
  if (spec.regimes.empty()) throw PreconditionError("solve_switching: no regimes");
  const int m_count = static_cast<int>(spec.regimes.size());
  const int n = spec.regimes.front().n_states();
  if (spec.regime_transition.rows() != m_count || spec.regime_transition.cols() != m_count)
    throw PreconditionError("solve_switching: regime transition matrix has wrong shape");
  for (int m = 0; m < m_count; ++m) {
    double s = 0.0;
    for (int mp = 0; mp < m_count; ++mp) {
      if (spec.regime_transition(m, mp) < 0.0)
        throw PreconditionError("solve_switching: negative switching probability");
      s += spec.regime_transition(m, mp);
    }
    if (std::abs(s - 1.0) > tol.row_sum)
      throw PreconditionError("solve_switching: switching matrix row not stochastic");
  }
  const auto roles = partition_roles(sets, n);

  // Lift A, B and C to the augmented space.
  std::vector<int> a_aug, b_aug;
  for (int m = 0; m < m_count; ++m)
    for (int i = 0; i < n; ++i) {
      if (roles[i] == Role::A) a_aug.push_back(m * n + i);
      if (roles[i] == Role::B) b_aug.push_back(m * n + i);
    }
  const AbSets aug_sets(std::move(a_aug), std::move(b_aug));
  const auto aug_roles = partition_roles(aug_sets, m_count * n);
  const auto aug_restriction = detail::make_restriction(aug_roles);

  const TransitionMatrix aug = detail::switching_augmented_matrix(spec);

  if (!aug_restriction.c_states.empty()) {
    const Matrix cc = detail::restrict_cc(aug, aug_restriction);
    const double rho = detail::spectral_radius_estimate(cc);
    if (rho >= 1.0 - 1e-12)
      throw SolverError("solve_switching: restricted system is not contractive", rho);
  }

  std::vector<double> q_plus =
      detail::solve_boundary_problem(aug, aug_roles, Role::B, aug_restriction);

  const std::vector<double> density = detail::augmented_stationary_density(aug, tol);
  DensityFamily family{Regime::stationary, {density}};
  const ChainSpec aug_spec = StationarySpec{aug};
  const TransitionMatrix aug_back = reverse_transitions(aug_spec, family).front();
  std::vector<double> q_minus =
      detail::solve_boundary_problem(aug_back, aug_roles, Role::A, aug_restriction);

  CommittorField field;
  field.regime = Regime::periodic;
  field.residual_forward = detail::slice_residual(aug, aug_roles, q_plus, q_plus);
  field.residual_backward = detail::slice_residual(aug_back, aug_roles, q_minus, q_minus);
  if (field.residual_forward > tol.committor_residual ||
      field.residual_backward > tol.committor_residual)
    throw SolverError("solve_switching: residual above tolerance",
                      std::max(field.residual_forward, field.residual_backward));
  detail::clip_unit_interval(q_plus, tol.committor_clip);
  detail::clip_unit_interval(q_minus, tol.committor_clip);
  field.forward.resize(m_count);
  field.backward.resize(m_count);
  for (int m = 0; m < m_count; ++m) {
    field.forward[m].assign(q_plus.begin() + static_cast<std::ptrdiff_t>(m) * n,
                            q_plus.begin() + static_cast<std::ptrdiff_t>(m + 1) * n);
    field.backward[m].assign(q_minus.begin() + static_cast<std::ptrdiff_t>(m) * n,
                             q_minus.begin() + static_cast<std::ptrdiff_t>(m + 1) * n);
  }
  return field;
}

}  // namespace tpt

#endif  // TPT_COMMITTOR_HPP
