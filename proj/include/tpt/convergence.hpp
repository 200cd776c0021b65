#ifndef TPT_CONVERGENCE_HPP
#define TPT_CONVERGENCE_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/committor.hpp"

namespace tpt {

/// l2 distance between the finite-window committors at the window center
/// and the stationary committors, for a growing symmetric window
/// {-N, ..., N} around the evaluation time.
struct ConvergencePoint {
  int window = 0;  // N
  double err_forward = 0.0;
  double err_backward = 0.0;
};

inline std::vector<ConvergencePoint> committor_convergence(const TransitionMatrix& p,
                                                           const AbSets& sets,
                                                           const std::vector<int>& windows,
                                                           const Tolerances& tol = default_tolerances()) {
  const CommittorField limit = solve_stationary(p, sets, tol);
  const std::vector<double> pi = stationary_distribution(p, tol);

  std::vector<ConvergencePoint> out;
  out.reserve(windows.size());
  for (int n : windows) {
    if (n < 0) throw PreconditionError("committor_convergence: negative window");
    const int horizon = 2 * n + 1;
    FiniteSpec spec;
    spec.matrices.assign(horizon - 1, p);  // shared storage, cheap
    spec.initial_density = pi;
    const CommittorField field = solve_finite(spec, sets, tol);
    auto l2 = [](const std::vector<double>& a, const std::vector<double>& b) {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
      return std::sqrt(s);
    };
    ConvergencePoint point;
    point.window = n;
    point.err_forward = l2(field.forward[n], limit.forward[0]);
    point.err_backward = l2(field.backward[n], limit.backward[0]);
    out.push_back(point);
  }
  return out;
}

/// Least-squares fit of log(y) against x over the points with y above
/// `floor` (errors at the rounding plateau carry no slope information).
struct LogLinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
};

inline LogLinearFit fit_log_linear(const std::vector<std::pair<double, double>>& xy,
                                   double floor = 1e-13) {
  LogLinearFit fit;
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : xy)
    if (y > floor) pts.emplace_back(x, std::log(y));
  fit.points_used = static_cast<int>(pts.size());
  if (pts.size() < 2) return fit;

  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / pts.size();
  const double my = sy / pts.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0 || syy == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace tpt

#endif  // TPT_CONVERGENCE_HPP
