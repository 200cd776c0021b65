#ifndef TPT_CHAIN_HPP
#define TPT_CHAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tpt/errors.hpp"
#include "tpt/linalg.hpp"

namespace tpt {

/// Numerical tolerances shared by the whole library. Every bound used in a
/// validation or verification step lives here so tests and callers have a
/// single source of truth; functions take them as an optional argument.
struct Tolerances {
  double row_sum = 1e-12;             // row-stochasticity check
  double density_sum = 1e-12;         // initial-density normalization
  double density_family = 1e-10;      // equivariance of periodic densities
  double backward_row_sum = 1e-10;    // reversed rows with positive density
  double stationary_residual = 1e-12; // verification bound for pi^T P = pi^T
  double power_target = 1e-13;        // power-iteration convergence target
  std::uint64_t power_cap = 1000000;  // power-iteration cap
  double committor_residual = 1e-10;  // residual of committor equations
  double committor_clip = 1e-10;      // roundoff-vs-bug threshold for [0,1]
  double conservation = 1e-10;        // current conservation bound
  double method_agreement = 1e-8;     // stacked vs augmented periodic solve
};

inline const Tolerances& default_tolerances() {
  static const Tolerances t{};
  return t;
}

/// One time slice of dynamics: a row-stochastic matrix over the state
/// space. Immutable; copies share storage, so a time-homogeneous chain of
/// any horizon costs one matrix.
class TransitionMatrix {
 public:
  TransitionMatrix() = default;
  explicit TransitionMatrix(Matrix m) : m_(std::make_shared<const Matrix>(std::move(m))) {
    if (m_->rows() != m_->cols()) throw PreconditionError("TransitionMatrix: not square");
  }
  TransitionMatrix(int n_states, std::vector<double> row_major)
      : TransitionMatrix(Matrix(n_states, n_states, std::move(row_major))) {}

  static TransitionMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    const int n = static_cast<int>(rows.size());
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(n) * n);
    for (const auto& r : rows) {
      if (static_cast<int>(r.size()) != n)
        throw PreconditionError("TransitionMatrix: ragged rows");
      flat.insert(flat.end(), r.begin(), r.end());
    }
    return TransitionMatrix(n, std::move(flat));
  }

  int n_states() const { return m_ ? m_->rows() : 0; }
  double operator()(int i, int j) const { return (*m_)(i, j); }
  std::span<const double> row(int i) const { return m_->row(i); }
  const Matrix& dense() const { return *m_; }

 private:
  std::shared_ptr<const Matrix> m_;
};

enum class Regime { stationary, periodic, finite };

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::stationary: return "stationary";
    case Regime::periodic: return "periodic";
    case Regime::finite: return "finite";
  }
  return "?";
}

struct StationarySpec {
  TransitionMatrix matrix;
};

/// Periodically varying dynamics; matrices[m] acts at times n = m mod M.
struct PeriodicSpec {
  std::vector<TransitionMatrix> matrices;
  int period() const { return static_cast<int>(matrices.size()); }
};

/// Time window {0,...,N-1}: matrices[n] maps slice n to n+1 (so N-1
/// matrices), plus the density the chain starts from.
struct FiniteSpec {
  std::vector<TransitionMatrix> matrices;
  std::vector<double> initial_density;
  int horizon() const { return static_cast<int>(matrices.size()) + 1; }
};

using ChainSpec = std::variant<StationarySpec, PeriodicSpec, FiniteSpec>;

inline Regime regime_of(const ChainSpec& spec) {
  if (std::holds_alternative<StationarySpec>(spec)) return Regime::stationary;
  if (std::holds_alternative<PeriodicSpec>(spec)) return Regime::periodic;
  return Regime::finite;
}

inline int n_states_of(const ChainSpec& spec) {
  return std::visit(
      [](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, StationarySpec>)
          return s.matrix.n_states();
        else
          return s.matrices.empty() ? 0 : s.matrices.front().n_states();
      },
      spec);
}

/// Number of distinct time slices carrying densities/committors:
/// 1 (stationary), M (periodic), N (finite).
inline int slice_count(const ChainSpec& spec) {
  if (const auto* p = std::get_if<PeriodicSpec>(&spec)) return p->period();
  if (const auto* f = std::get_if<FiniteSpec>(&spec)) return f->horizon();
  return 1;
}

/// Transition matrix acting at slice n (mod M in the periodic regime).
inline const TransitionMatrix& slice_matrix(const ChainSpec& spec, int n) {
  if (const auto* s = std::get_if<StationarySpec>(&spec)) return s->matrix;
  if (const auto* p = std::get_if<PeriodicSpec>(&spec))
    return p->matrices[((n % p->period()) + p->period()) % p->period()];
  const auto& f = std::get<FiniteSpec>(spec);
  return f.matrices[n];
}

/// Disjoint nonempty source/target sets. The transition region C is the
/// complement of A and B; solvers accept an empty C (boundary-only case).
struct AbSets {
  std::vector<int> set_a;
  std::vector<int> set_b;

  AbSets(std::vector<int> a, std::vector<int> b) : set_a(std::move(a)), set_b(std::move(b)) {
    auto canon = [](std::vector<int>& v) {
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    canon(set_a);
    canon(set_b);
    if (set_a.empty() || set_b.empty()) throw PreconditionError("AbSets: A and B must be nonempty");
    for (int x : set_a)
      if (std::binary_search(set_b.begin(), set_b.end(), x))
        throw PreconditionError("AbSets: A and B must be disjoint");
  }
};

enum class Role : unsigned char { C = 0, A = 1, B = 2 };

inline std::vector<Role> partition_roles(const AbSets& sets, int n_states) {
  std::vector<Role> roles(n_states, Role::C);
  for (int i : sets.set_a) {
    if (i < 0 || i >= n_states) throw PreconditionError("AbSets: index out of range");
    roles[i] = Role::A;
  }
  for (int i : sets.set_b) {
    if (i < 0 || i >= n_states) throw PreconditionError("AbSets: index out of range");
    roles[i] = Role::B;
  }
  return roles;
}

inline std::vector<Diagnostic> validate_sets(const AbSets& sets, int n_states) {
  std::vector<Diagnostic> out;
  for (int i : sets.set_a)
    if (i < 0 || i >= n_states)
      out.push_back({Severity::error, "set_index_out_of_range", "set A index out of range"});
  for (int i : sets.set_b)
    if (i < 0 || i >= n_states)
      out.push_back({Severity::error, "set_index_out_of_range", "set B index out of range"});
  if (static_cast<int>(sets.set_a.size() + sets.set_b.size()) >= n_states && out.empty()) {
    std::vector<Role> roles = partition_roles(sets, n_states);
    bool any_c = false;
    for (Role r : roles) any_c |= (r == Role::C);
    if (!any_c)
      out.push_back({Severity::info, "empty_transition_region",
                     "A and B cover the whole state space; statistics on C are empty"});
  }
  return out;
}

/// Probability vectors per time slice: {pi} (stationary), the equivariant
/// family pi_0..pi_{M-1} (periodic), or lambda(0)..lambda(N-1) (finite).
struct DensityFamily {
  Regime regime = Regime::stationary;
  std::vector<std::vector<double>> slices;

  const std::vector<double>& at(int n) const {
    if (regime == Regime::periodic) {
      const int m = static_cast<int>(slices.size());
      return slices[((n % m) + m) % m];
    }
    return slices[regime == Regime::stationary ? 0 : n];
  }
};

namespace detail {

inline void check_matrix(const TransitionMatrix& p, const std::string& where, double tol,
                         std::vector<Diagnostic>& out) {
  const int n = p.n_states();
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    bool negative = false;
    for (double v : p.row(i)) {
      sum += v;
      negative |= (v < 0.0);
    }
    if (negative)
      out.push_back({Severity::error, "negative_entry",
                     where + ": row " + std::to_string(i) + " has a negative entry"});
    if (std::abs(sum - 1.0) > tol)
      out.push_back({Severity::error, "row_not_stochastic",
                     where + ": row " + std::to_string(i) + " sums to " + std::to_string(sum)});
  }
}

inline Matrix compose(const std::vector<TransitionMatrix>& mats) {
  Matrix acc = mats.front().dense();
  for (std::size_t m = 1; m < mats.size(); ++m) acc = multiply(acc, mats[m].dense());
  return acc;
}

}  // namespace detail

/// Checks every invariant of a chain description and, for the stationary
/// and periodic regimes, the irreducibility precondition the committor
/// solvers rely on (strong connectivity of P, resp. of the one-period
/// product). Violations come back as diagnostics rather than exceptions.
/// The finite-time regime has no irreducibility requirement; this is noted
/// as an informational diagnostic.
inline std::vector<Diagnostic> validate_chain(const ChainSpec& spec,
                                              const Tolerances& tol = default_tolerances()) {
  std::vector<Diagnostic> out;
  const int n = n_states_of(spec);
  if (n == 0) {
    out.push_back({Severity::error, "empty_spec", "chain has no states"});
    return out;
  }

  auto check_shared_size = [&](const std::vector<TransitionMatrix>& mats) {
    for (std::size_t m = 0; m < mats.size(); ++m)
      if (mats[m].n_states() != n)
        out.push_back({Severity::error, "dimension_mismatch",
                       "matrix " + std::to_string(m) + " has mismatching state count"});
  };

  if (const auto* s = std::get_if<StationarySpec>(&spec)) {
    detail::check_matrix(s->matrix, "P", tol.row_sum, out);
    if (!is_strongly_connected(s->matrix.dense()))
      out.push_back({Severity::error, "not_irreducible", "P is not irreducible"});
  } else if (const auto* p = std::get_if<PeriodicSpec>(&spec)) {
    if (p->matrices.empty()) {
      out.push_back({Severity::error, "empty_spec", "periodic spec has no matrices"});
      return out;
    }
    check_shared_size(p->matrices);
    for (std::size_t m = 0; m < p->matrices.size(); ++m)
      detail::check_matrix(p->matrices[m], "P_" + std::to_string(m), tol.row_sum, out);
    if (all_valid(out) && !is_strongly_connected(detail::compose(p->matrices)))
      out.push_back({Severity::error, "not_irreducible",
                     "one-period product P_0...P_{M-1} is not irreducible"});
  } else {
    const auto& f = std::get<FiniteSpec>(spec);
    if (f.matrices.empty()) {
      out.push_back({Severity::error, "empty_spec", "finite spec needs horizon >= 2"});
      return out;
    }
    check_shared_size(f.matrices);
    for (std::size_t m = 0; m < f.matrices.size(); ++m)
      detail::check_matrix(f.matrices[m], "P(" + std::to_string(m) + ")", tol.row_sum, out);
    if (static_cast<int>(f.initial_density.size()) != n) {
      out.push_back({Severity::error, "initial_density_invalid",
                     "initial density has wrong length"});
    } else {
      double sum = 0.0;
      bool negative = false;
      for (double v : f.initial_density) {
        sum += v;
        negative |= (v < 0.0);
      }
      if (negative || std::abs(sum - 1.0) > tol.density_sum)
        out.push_back({Severity::error, "initial_density_invalid",
                       "initial density is not a probability vector"});
    }
    out.push_back({Severity::info, "finite_no_irreducibility_check",
                   "irreducibility is not required in the finite-time regime; not checked"});
  }
  return out;
}

/// Unique stationary distribution of an irreducible P. Power iteration on
/// the half-lazy chain (P+I)/2 (same fixed point, provably aperiodic) with
/// a deterministic uniform start; falls back to GTH state reduction for
/// n <= 2000 when the iteration cannot reach its target within the cap —
/// metastable chains have spectral gaps far below any practical iteration
/// budget, and GTH keeps componentwise accuracy there.
inline std::vector<double> stationary_distribution(const TransitionMatrix& p,
                                                   const Tolerances& tol = default_tolerances()) {
  const int n = p.n_states();
  if (n == 0) throw PreconditionError("stationary_distribution: empty matrix");
  if (!is_strongly_connected(p.dense()))
    throw PreconditionError("stationary_distribution: P is not irreducible");

  std::vector<double> v(n, 1.0 / n);
  double residual = 1.0;
  double prev_checkpoint = -1.0;
  const std::uint64_t check_every = 1000;
  bool converged = false;
  for (std::uint64_t it = 0; it < tol.power_cap; ++it) {
    std::vector<double> w = left_apply(v, p.dense());
    residual = max_abs_diff(w, v);
    if (residual < tol.power_target) {
      v = std::move(w);
      converged = true;
      break;
    }
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      v[i] = 0.5 * (v[i] + w[i]);
      total += v[i];
    }
    for (double& x : v) x /= total;
    if ((it + 1) % check_every == 0) {
      // Bail out early when the geometric decay rate projects past the cap.
      if (prev_checkpoint > 0.0 && residual > 0.0) {
        const double rate = std::pow(residual / prev_checkpoint, 1.0 / check_every);
        if (rate >= 1.0 ||
            std::log(tol.power_target / residual) / std::log(rate) >
                static_cast<double>(tol.power_cap - it)) {
          break;
        }
      }
      prev_checkpoint = residual;
    }
  }

  if (!converged) {
    if (n > 2000)
      throw SolverError("stationary_distribution: power iteration did not converge", residual);
    v = gth_stationary(p.dense());
  }

  double total = 0.0;
  for (double x : v) total += x;
  for (double& x : v) x /= total;

  const double verify = max_abs_diff(left_apply(v, p.dense()), v);
  if (verify > tol.stationary_residual)
    throw SolverError("stationary_distribution: residual above tolerance", verify);
  for (double x : v)
    if (!(x > 0.0))
      throw SolverError("stationary_distribution: non-positive entry in result", verify);
  return v;
}

/// The unique equivariant family pi_0..pi_{M-1}: pi_0 is the stationary
/// vector of the one-period product and the rest are its pushforwards
/// pi_{m+1}^T = pi_m^T P_m.
inline DensityFamily periodic_stationary_family(const std::vector<TransitionMatrix>& matrices,
                                                const Tolerances& tol = default_tolerances()) {
  if (matrices.empty()) throw PreconditionError("periodic_stationary_family: no matrices");
  const int m_count = static_cast<int>(matrices.size());

  TransitionMatrix product =
      m_count == 1 ? matrices[0] : TransitionMatrix(detail::compose(matrices));
  DensityFamily family;
  family.regime = Regime::periodic;
  family.slices.resize(m_count);
  family.slices[0] = stationary_distribution(product, tol);
  for (int m = 1; m < m_count; ++m)
    family.slices[m] = left_apply(family.slices[m - 1], matrices[m - 1].dense());

  const double wrap = max_abs_diff(
      left_apply(family.slices[m_count - 1], matrices[m_count - 1].dense()), family.slices[0]);
  if (wrap > tol.density_family)
    throw SolverError("periodic_stationary_family: family fails to close up", wrap);
  return family;
}

/// lambda(n+1)^T = lambda(n)^T P(n) for the whole window.
inline DensityFamily propagate_density(const FiniteSpec& spec) {
  if (spec.matrices.empty()) throw PreconditionError("propagate_density: empty spec");
  DensityFamily family;
  family.regime = Regime::finite;
  family.slices.resize(spec.horizon());
  family.slices[0] = spec.initial_density;
  for (int n = 0; n + 1 < spec.horizon(); ++n)
    family.slices[n + 1] = left_apply(family.slices[n], spec.matrices[n].dense());
  return family;
}

/// Densities appropriate to the regime: {pi}, the periodic family, or the
/// propagated window densities.
inline DensityFamily densities_for(const ChainSpec& spec,
                                   const Tolerances& tol = default_tolerances()) {
  if (const auto* s = std::get_if<StationarySpec>(&spec)) {
    DensityFamily family;
    family.regime = Regime::stationary;
    family.slices.push_back(stationary_distribution(s->matrix, tol));
    return family;
  }
  if (const auto* p = std::get_if<PeriodicSpec>(&spec))
    return periodic_stationary_family(p->matrices, tol);
  return propagate_density(std::get<FiniteSpec>(spec));
}

namespace detail {

/// One time-reversed slice: rho_prev is the density at the slice being
/// mapped to, rho_here at the slice the reversed matrix acts from, forward
/// the matrix between them. Zero-density rows are set to zero.
inline TransitionMatrix reverse_slice(const TransitionMatrix& forward,
                                      const std::vector<double>& rho_prev,
                                      const std::vector<double>& rho_here) {
  const int n_states = forward.n_states();
  Matrix back(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    if (!(rho_here[i] > 0.0)) continue;  // zero-density convention
    for (int j = 0; j < n_states; ++j) {
      const double flux = rho_prev[j] * forward(j, i);
      if (flux != 0.0) back(i, j) = flux / rho_here[i];
    }
  }
  return TransitionMatrix(std::move(back));
}

}  // namespace detail

/// Transition matrices of the time-reversed chain, one per slice:
///   stationary: Pb_ij = pi_j P_ji / pi_i                      (1 matrix)
///   periodic:   Pb_{m,ij} = P_{m-1,ji} pi_{m-1,j} / pi_{m,i}  (M matrices)
///   finite:     Pb_ij(n) = lambda_j(n-1) P_ji(n-1) / lambda_i(n),
///               n = 1..N-1; entry k of the result is slice n = k+1.
/// Rows of states with zero density at the target slice are set to zero.
/// Materializes one dense matrix per slice; long homogeneous windows are
/// better served by the streaming committor/statistics drivers.
inline std::vector<TransitionMatrix> reverse_transitions(const ChainSpec& spec,
                                                         const DensityFamily& densities) {
  std::vector<TransitionMatrix> out;
  if (const auto* s = std::get_if<StationarySpec>(&spec)) {
    const auto& pi = densities.slices.at(0);
    out.push_back(detail::reverse_slice(s->matrix, pi, pi));
  } else if (const auto* p = std::get_if<PeriodicSpec>(&spec)) {
    const int m_count = p->period();
    for (int m = 0; m < m_count; ++m) {
      const int prev = (m - 1 + m_count) % m_count;
      out.push_back(
          detail::reverse_slice(p->matrices[prev], densities.slices[prev], densities.slices[m]));
    }
  } else {
    const auto& f = std::get<FiniteSpec>(spec);
    for (int n = 1; n < f.horizon(); ++n)
      out.push_back(
          detail::reverse_slice(f.matrices[n - 1], densities.slices[n - 1], densities.slices[n]));
  }
  return out;
}

/// States of the largest closed communicating class: the biggest strongly
/// connected component with no outgoing probability mass. Every finite
/// chain has at least one. Ulam estimates at small noise are the typical
/// customer: unreached cells form transient classes outside the core.
inline std::vector<int> largest_closed_class(const Matrix& p, double threshold = 0.0) {
  const int n = p.rows();
  if (n == 0) return {};
  // Kosaraju: order by finish time, then sweep the transpose.
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  for (int root = 0; root < n; ++root) {
    if (seen[root]) continue;
    std::vector<std::pair<int, int>> stack{{root, 0}};
    seen[root] = 1;
    while (!stack.empty()) {
      auto& [u, next] = stack.back();
      bool descended = false;
      for (int v = next; v < n; ++v) {
        if (p(u, v) > threshold && !seen[v]) {
          stack.back().second = v + 1;
          seen[v] = 1;
          stack.emplace_back(v, 0);
          descended = true;
          break;
        }
      }
      if (!descended) {
        order.push_back(u);
        stack.pop_back();
      }
    }
  }
  std::vector<int> component(n, -1);
  int component_count = 0;
  for (int idx = n - 1; idx >= 0; --idx) {
    const int root = order[idx];
    if (component[root] != -1) continue;
    std::vector<int> stack{root};
    component[root] = component_count;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v)
        if (p(v, u) > threshold && component[v] == -1) {
          component[v] = component_count;
          stack.push_back(v);
        }
    }
    ++component_count;
  }
  // closed = no edge leaving the component
  std::vector<char> closed(component_count, 1);
  std::vector<int> size(component_count, 0);
  for (int i = 0; i < n; ++i) {
    ++size[component[i]];
    for (int j = 0; j < n; ++j)
      if (p(i, j) > threshold && component[j] != component[i]) closed[component[i]] = 0;
  }
  int best = -1;
  for (int c = 0; c < component_count; ++c)
    if (closed[c] && (best == -1 || size[c] > size[best])) best = c;
  std::vector<int> out;
  for (int i = 0; i < n; ++i)
    if (component[i] == best) out.push_back(i);
  return out;
}

/// Stationary density supported on the largest closed class, zero
/// elsewhere. Coincides with stationary_distribution for irreducible
/// chains; for reducible ones it is the natural invariant vector to start
/// finite-window studies from (the finite-time theory never needs
/// irreducibility, and zero-density states are handled throughout).
inline std::vector<double> stationary_density_on_closed_class(
    const TransitionMatrix& p, const Tolerances& tol = default_tolerances()) {
  const int n = p.n_states();
  const std::vector<int> keep = largest_closed_class(p.dense());
  if (static_cast<int>(keep.size()) == n) return stationary_distribution(p, tol);
  if (keep.empty()) throw SolverError("stationary_density_on_closed_class: no closed class");
  Matrix restricted(static_cast<int>(keep.size()), static_cast<int>(keep.size()));
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b) restricted(a, b) = p(keep[a], keep[b]);
  const std::vector<double> pi_restricted =
      stationary_distribution(TransitionMatrix(std::move(restricted)), tol);
  std::vector<double> out(n, 0.0);
  for (std::size_t a = 0; a < keep.size(); ++a) out[keep[a]] = pi_restricted[a];
  return out;
}

}  // namespace tpt

#endif  // TPT_CHAIN_HPP
