#ifndef TPT_TEST_SUPPORT_HPP
#define TPT_TEST_SUPPORT_HPP

#include <algorithm>
#include <numeric>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/rng.hpp"

namespace tpt_test {

using tpt::AbSets;
using tpt::Rng;
using tpt::TransitionMatrix;

/// Strictly positive random row-stochastic matrix (hence irreducible).
inline TransitionMatrix random_dense_chain(int n, Rng& rng) {
  std::vector<double> flat(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = 0.05 + rng.uniform();
      flat[static_cast<std::size_t>(i) * n + j] = v;
      sum += v;
    }
    for (int j = 0; j < n; ++j) flat[static_cast<std::size_t>(i) * n + j] /= sum;
  }
  return TransitionMatrix(n, std::move(flat));
}

/// Sparse-ish random chain kept irreducible by a cyclic backbone.
inline TransitionMatrix random_sparse_chain(int n, Rng& rng, double keep_prob = 0.4) {
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    flat[static_cast<std::size_t>(i) * n + (i + 1) % n] = 0.2 + rng.uniform();
    for (int j = 0; j < n; ++j)
      if (rng.uniform() < keep_prob) flat[static_cast<std::size_t>(i) * n + j] += rng.uniform();
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += flat[static_cast<std::size_t>(i) * n + j];
    for (int j = 0; j < n; ++j) flat[static_cast<std::size_t>(i) * n + j] /= sum;
  }
  return TransitionMatrix(n, std::move(flat));
}

/// Reversible chain from a symmetric positive weight matrix; detailed
/// balance holds with pi proportional to the row sums of the weights.
inline TransitionMatrix random_reversible_chain(int n, Rng& rng) {
  std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = 0.05 + rng.uniform();
      w[i][j] = v;
      w[j][i] = v;
    }
  std::vector<double> flat(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double sum = std::accumulate(w[i].begin(), w[i].end(), 0.0);
    for (int j = 0; j < n; ++j) flat[static_cast<std::size_t>(i) * n + j] = w[i][j] / sum;
  }
  return TransitionMatrix(n, std::move(flat));
}

inline std::vector<double> random_density(int n, Rng& rng) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (double& x : v) {
    x = rng.uniform();
    sum += x;
  }
  for (double& x : v) x /= sum;
  return v;
}

/// Disjoint nonempty A and B leaving at least one transition state.
inline AbSets random_sets(int n, Rng& rng) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[i], order[static_cast<int>(rng.next_u64() % (i + 1))]);
  const int max_total = n - 1;
  const int a_size = 1 + static_cast<int>(rng.next_u64() % std::max(1, max_total / 2));
  const int b_size =
      1 + static_cast<int>(rng.next_u64() % std::max<std::size_t>(1, max_total - a_size));
  std::vector<int> a(order.begin(), order.begin() + a_size);
  std::vector<int> b(order.begin() + a_size, order.begin() + a_size + b_size);
  return AbSets(std::move(a), std::move(b));
}

/// Reflecting random walk on a path graph {0,...,n-1}; the classic
/// ruin-type chain whose forward committor from {0} to {n-1} is i/(n-1).
inline TransitionMatrix path_walk_chain(int n) {
  std::vector<double> flat(static_cast<std::size_t>(n) * n, 0.0);
  flat[1] = 1.0;
  flat[static_cast<std::size_t>(n - 1) * n + n - 2] = 1.0;
  for (int i = 1; i + 1 < n; ++i) {
    flat[static_cast<std::size_t>(i) * n + i - 1] = 0.5;
    flat[static_cast<std::size_t>(i) * n + i + 1] = 0.5;
  }
  return TransitionMatrix(n, std::move(flat));
}

inline TransitionMatrix two_state_chain(double a, double b) {
  return TransitionMatrix::from_rows({{1.0 - a, a}, {b, 1.0 - b}});
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace tpt_test

#endif  // TPT_TEST_SUPPORT_HPP
