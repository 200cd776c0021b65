#ifndef TPT_LINALG_HPP
#define TPT_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tpt/errors.hpp"

namespace tpt {

/// Dense row-major matrix. The state counts this library targets (up to a
/// few thousand) keep dense kernels exact, fast enough and dependency-free.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, 0.0) {}
  Matrix(int rows, int cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), a_(std::move(entries)) {
    if (a_.size() != static_cast<std::size_t>(rows) * cols)
      throw PreconditionError("Matrix: entry count does not match shape");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[idx(i, j)]; }
  double operator()(int i, int j) const { return a_[idx(i, j)]; }

  std::span<double> row(int i) { return {a_.data() + idx(i, 0), static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int i) const {
    return {a_.data() + idx(i, 0), static_cast<std::size_t>(cols_)};
  }

  const std::vector<double>& data() const { return a_; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * cols_ + j; }

  int rows_ = 0, cols_ = 0;
  std::vector<double> a_;
};

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw PreconditionError("multiply: shape mismatch");
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      auto crow = c.row(i);
      for (int j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// Row vector times matrix: (v^T A)^T.
inline std::vector<double> left_apply(std::span<const double> v, const Matrix& a) {
  if (static_cast<int>(v.size()) != a.rows()) throw PreconditionError("left_apply: shape mismatch");
  std::vector<double> out(a.cols(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    const double vi = v[i];
    if (vi == 0.0) continue;
    const auto arow = a.row(i);
    for (int j = 0; j < a.cols(); ++j) out[j] += vi * arow[j];
  }
  return out;
}

/// Matrix times column vector: A v.
inline std::vector<double> right_apply(const Matrix& a, std::span<const double> v) {
  if (static_cast<int>(v.size()) != a.cols()) throw PreconditionError("right_apply: shape mismatch");
  std::vector<double> out(a.rows(), 0.0);
  for (int i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const auto arow = a.row(i);
    for (int j = 0; j < a.cols(); ++j) s += arow[j] * v[j];
    out[i] = s;
  }
  return out;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Solves A x = b by LU factorization with partial pivoting (in place on a
/// copy). Throws SolverError on a (numerically) singular system.
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  const int n = a.rows();
  if (a.cols() != n || static_cast<int>(b.size()) != n)
    throw PreconditionError("solve_dense: shape mismatch");
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(a(i, k));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (!(best > 0.0)) throw SolverError("solve_dense: singular system", best);
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(b[k], b[piv]);
    }
    const double inv = 1.0 / a(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = a(i, k) * inv;
      if (f == 0.0) continue;
      a(i, k) = f;
      const auto krow = a.row(k);
      auto irow = a.row(i);
      for (int j = k + 1; j < n; ++j) irow[j] -= f * krow[j];
      b[i] -= f * b[k];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    const auto irow = a.row(i);
    for (int j = i + 1; j < n; ++j) s -= irow[j] * b[j];
    b[i] = s / a(i, i);
  }
  return b;
}

/// Stationary vector of a row-stochastic matrix by GTH elimination
/// (state-reduction without subtraction). All intermediate quantities stay
/// nonnegative, which gives componentwise relative accuracy even for
/// strongly metastable chains whose stationary weights span many orders of
/// magnitude. Requires irreducibility; a zero pivot mass means the chain
/// is reducible.
inline std::vector<double> gth_stationary(Matrix p) {
  const int n = p.rows();
  if (p.cols() != n || n == 0) throw PreconditionError("gth_stationary: not square");
  if (n == 1) return {1.0};
  for (int k = n - 1; k >= 1; --k) {
    double s = 0.0;
    const auto krow = p.row(k);
    for (int j = 0; j < k; ++j) s += krow[j];
    if (!(s > 0.0)) throw PreconditionError("gth_stationary: chain is not irreducible");
    for (int i = 0; i < k; ++i) p(i, k) /= s;
    for (int i = 0; i < k; ++i) {
      const double f = p(i, k);
      if (f == 0.0) continue;
      auto irow = p.row(i);
      for (int j = 0; j < k; ++j) irow[j] += f * krow[j];
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  double total = 1.0;
  for (int k = 1; k < n; ++k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += pi[i] * p(i, k);
    pi[k] = s;
    total += s;
  }
  for (double& v : pi) v /= total;
  return pi;
}

/// Strong connectivity of the support graph (entries > threshold), via one
/// forward and one backward reachability sweep from state 0.
inline bool is_strongly_connected(const Matrix& p, double threshold = 0.0) {
  const int n = p.rows();
  if (n == 0) return false;
  auto sweep = [&](bool transpose) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        const double w = transpose ? p(v, u) : p(u, v);
        if (w > threshold && !seen[v]) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return sweep(false) && sweep(true);
}

}  // namespace tpt

#endif  // TPT_LINALG_HPP
