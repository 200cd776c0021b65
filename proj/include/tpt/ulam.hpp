#ifndef TPT_ULAM_HPP
#define TPT_ULAM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tpt/chain.hpp"
#include "tpt/errors.hpp"
#include "tpt/rng.hpp"

namespace tpt {

/// Two-dimensional energy landscape: two deep wells near (-1,0) and (1,0),
/// a shallow well near (0,1.5), quartic confinement.
inline double triple_well_energy(double x, double y) {
  const double g1 = std::exp(-x * x - (y - 1.0 / 3.0) * (y - 1.0 / 3.0));
  const double g2 = std::exp(-x * x - (y - 5.0 / 3.0) * (y - 5.0 / 3.0));
  const double g3 = std::exp(-(x - 1.0) * (x - 1.0) - y * y);
  const double g4 = std::exp(-(x + 1.0) * (x + 1.0) - y * y);
  const double x4 = x * x * x * x;
  const double ym = y - 1.0 / 3.0;
  return 0.75 * g1 - 0.75 * g2 - 1.25 * g3 - 1.25 * g4 + 0.05 * x4 + 0.05 * ym * ym * ym * ym;
}

inline void triple_well_gradient(double x, double y, double& dx, double& dy) {
  const double g1 = std::exp(-x * x - (y - 1.0 / 3.0) * (y - 1.0 / 3.0));
  const double g2 = std::exp(-x * x - (y - 5.0 / 3.0) * (y - 5.0 / 3.0));
  const double g3 = std::exp(-(x - 1.0) * (x - 1.0) - y * y);
  const double g4 = std::exp(-(x + 1.0) * (x + 1.0) - y * y);
  dx = 0.75 * g1 * (-2.0 * x) - 0.75 * g2 * (-2.0 * x) - 1.25 * g3 * (-2.0 * (x - 1.0)) -
       1.25 * g4 * (-2.0 * (x + 1.0)) + 0.2 * x * x * x;
  dy = 0.75 * g1 * (-2.0 * (y - 1.0 / 3.0)) - 0.75 * g2 * (-2.0 * (y - 5.0 / 3.0)) -
       1.25 * g3 * (-2.0 * y) - 1.25 * g4 * (-2.0 * y) +
       0.2 * (y - 1.0 / 3.0) * (y - 1.0 / 3.0) * (y - 1.0 / 3.0);
}

/// Named potential descriptor. `zero` and `linear` exist for calibration
/// runs and tests (a linear potential produces a constant drift).
struct Potential {
  enum class Kind { triple_well, zero, linear };
  Kind kind = Kind::triple_well;
  double slope_x = 0.0, slope_y = 0.0;  // linear only: V = slope_x*x + slope_y*y

  static Potential triple_well() { return {Kind::triple_well, 0.0, 0.0}; }
  static Potential zero() { return {Kind::zero, 0.0, 0.0}; }
  static Potential linear(double sx, double sy) { return {Kind::linear, sx, sy}; }

  double value(double x, double y) const {
    switch (kind) {
      case Kind::triple_well: return triple_well_energy(x, y);
      case Kind::zero: return 0.0;
      case Kind::linear: return slope_x * x + slope_y * y;
    }
    return 0.0;
  }
  void gradient(double x, double y, double& dx, double& dy) const {
    switch (kind) {
      case Kind::triple_well: triple_well_gradient(x, y, dx, dy); return;
      case Kind::zero: dx = dy = 0.0; return;
      case Kind::linear: dx = slope_x; dy = slope_y; return;
    }
  }
  const char* name() const {
    switch (kind) {
      case Kind::triple_well: return "triple_well";
      case Kind::zero: return "zero";
      case Kind::linear: return "linear";
    }
    return "?";
  }
};

/// Time-periodic circulation F(x,y,t) = amplitude * cos(2 pi t / period) * (-y, x):
/// anti-clockwise at t = 0, clockwise half a period later.
struct Forcing {
  double amplitude = 0.0;
  double period = 1.0;

  void eval(double x, double y, double t, double& fx, double& fy) const {
    constexpr double two_pi = 6.283185307179586476925287;
    const double c = amplitude * std::cos(two_pi * t / period);
    fx = -c * y;
    fy = c * x;
  }
};

/// Overdamped Langevin setup driving the discretization:
/// dX = (-grad V + F) dt + sigma dW, observed every lag time tau.
struct LangevinSpec {
  Potential potential;
  std::optional<Forcing> forcing;
  double sigma = 1.0;
  double tau = 0.3;
  double euler_dt = 0.01;  // inner Euler-Maruyama step
  int samples_per_cell = 10000;
};

/// Rectangular partition of a box into a regular cell grid, row-major in
/// x. Box edges must be integer multiples of the cell size (within 1e-9).
class UlamGrid {
 public:
  UlamGrid(double x_min, double x_max, double y_min, double y_max, double cell_dx, double cell_dy)
      : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), dx_(cell_dx), dy_(cell_dy) {
    if (!(cell_dx > 0.0) || !(cell_dy > 0.0))
      throw PreconditionError("UlamGrid: cell size must be positive");
    if (!(x_max > x_min) || !(y_max > y_min))
      throw PreconditionError("UlamGrid: empty box");
    const double fx = (x_max - x_min) / cell_dx;
    const double fy = (y_max - y_min) / cell_dy;
    nx_ = static_cast<int>(std::llround(fx));
    ny_ = static_cast<int>(std::llround(fy));
    if (std::abs(nx_ * cell_dx - (x_max - x_min)) > 1e-9 ||
        std::abs(ny_ * cell_dy - (y_max - y_min)) > 1e-9)
      throw PreconditionError("UlamGrid: box edges are not multiples of the cell size");
  }

  static UlamGrid square(double x_min, double x_max, double y_min, double y_max, double cell) {
    return UlamGrid(x_min, x_max, y_min, y_max, cell, cell);
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int cell_count() const { return nx_ * ny_; }
  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  double cell_dx() const { return dx_; }
  double cell_dy() const { return dy_; }

  int cell_index(int ix, int iy) const { return iy * nx_ + ix; }

  /// Cell containing (x, y). Points outside the box clamp to the nearest
  /// boundary cell, which keeps every sampled endpoint accounted for.
  int locate(double x, double y) const {
    int ix = static_cast<int>(std::floor((x - x_min_) / dx_));
    int iy = static_cast<int>(std::floor((y - y_min_) / dy_));
    ix = std::min(std::max(ix, 0), nx_ - 1);
    iy = std::min(std::max(iy, 0), ny_ - 1);
    return cell_index(ix, iy);
  }

  void midpoint(int cell, double& x, double& y) const {
    const int ix = cell % nx_;
    const int iy = cell / nx_;
    x = x_min_ + (ix + 0.5) * dx_;
    y = y_min_ + (iy + 0.5) * dy_;
  }

  void cell_origin(int cell, double& x, double& y) const {
    const int ix = cell % nx_;
    const int iy = cell / nx_;
    x = x_min_ + ix * dx_;
    y = y_min_ + iy * dy_;
  }

 private:
  double x_min_, x_max_, y_min_, y_max_, dx_, dy_;
  int nx_ = 0, ny_ = 0;
};

namespace detail {

inline void require_valid(const LangevinSpec& spec) {
  if (!(spec.sigma > 0.0)) throw PreconditionError("LangevinSpec: sigma must be positive");
  if (!(spec.tau > 0.0)) throw PreconditionError("LangevinSpec: tau must be positive");
  if (!(spec.euler_dt > 0.0) || spec.euler_dt > spec.tau)
    throw PreconditionError("LangevinSpec: need 0 < euler_dt <= tau");
  if (spec.samples_per_cell < 1)
    throw PreconditionError("LangevinSpec: samples_per_cell must be >= 1");
}

/// Euler-Maruyama over [start_phase, start_phase + tau].
inline void evolve(const LangevinSpec& spec, double start_phase, double& x, double& y, Rng& rng) {
  const long long steps = std::max<long long>(1, std::llround(spec.tau / spec.euler_dt));
  const double dt = spec.tau / static_cast<double>(steps);
  const double noise = spec.sigma * std::sqrt(dt);
  double t = start_phase;
  for (long long s = 0; s < steps; ++s) {
    double gx = 0.0, gy = 0.0;
    spec.potential.gradient(x, y, gx, gy);
    double fx = 0.0, fy = 0.0;
    if (spec.forcing) spec.forcing->eval(x, y, t, fx, fy);
    double z0, z1;
    rng.normal_pair(z0, z1);
    x += (fx - gx) * dt + noise * z0;
    y += (fy - gy) * dt + noise * z1;
    t += dt;
  }
}

}  // namespace detail

/// Midpoint-evaluated Boltzmann weights exp(-2 V / sigma^2) over the grid
/// cells, normalized to a probability vector. Equilibrium formula; only
/// valid without forcing.
inline std::vector<double> boltzmann_density(const UlamGrid& grid, const LangevinSpec& spec) {
  if (spec.forcing && spec.forcing->amplitude != 0.0)
    throw PreconditionError("boltzmann_density: equilibrium formula requires no forcing");
  const int cells = grid.cell_count();
  std::vector<double> v(cells, 0.0);
  double v_min = std::numeric_limits<double>::infinity();
  for (int c = 0; c < cells; ++c) {
    double x, y;
    grid.midpoint(c, x, y);
    v[c] = spec.potential.value(x, y);
    v_min = std::min(v_min, v[c]);
  }
  const double beta = 2.0 / (spec.sigma * spec.sigma);
  double total = 0.0;
  for (double& w : v) {
    w = std::exp(-beta * (w - v_min));  // shift keeps the exponents in range
    total += w;
  }
  for (double& w : v) w /= total;
  return v;
}

/// Ulam estimate of the lag-tau transition matrix: C points per cell,
/// drawn uniformly from the cell by a per-cell substream of `seed`, evolved
/// by Euler-Maruyama starting at time `start_phase`, endpoints binned.
/// Rows are exact sample frequencies, so the matrix is row-stochastic to
/// machine precision; results are bit-identical for a fixed seed no matter
/// how many threads run.
inline TransitionMatrix estimate_transition_matrix(const UlamGrid& grid, const LangevinSpec& spec,
                                                   double start_phase, std::uint64_t seed,
                                                   int threads = 0) {
  detail::require_valid(spec);
  const int cells = grid.cell_count();
  const int samples = spec.samples_per_cell;
  Matrix p(cells, cells);

  auto work = [&](int begin, int end) {
    for (int cell = begin; cell < end; ++cell) {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(cell));
      double ox, oy;
      grid.cell_origin(cell, ox, oy);
      auto row = p.row(cell);
      for (int s = 0; s < samples; ++s) {
        double x = ox + rng.uniform() * grid.cell_dx();
        double y = oy + rng.uniform() * grid.cell_dy();
        detail::evolve(spec, start_phase, x, y, rng);
        row[grid.locate(x, y)] += 1.0;
      }
      const double inv = 1.0 / static_cast<double>(samples);
      for (double& v : row) v *= inv;
    }
  };

  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, cells));
  if (n_threads == 1) {
    work(0, cells);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
      const int begin = static_cast<int>(static_cast<long long>(cells) * t / n_threads);
      const int end = static_cast<int>(static_cast<long long>(cells) * (t + 1) / n_threads);
      pool.emplace_back(work, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  return TransitionMatrix(std::move(p));
}

/// Transition matrices P_0..P_{M-1} for dynamics with a time-periodic
/// forcing whose period equals M * tau; P_m starts its sampling window at
/// phase m * tau. Slice m draws from the derived seed (seed, m).
inline std::vector<TransitionMatrix> build_periodic_family(const UlamGrid& grid,
                                                           const LangevinSpec& spec, int slices,
                                                           std::uint64_t seed, int threads = 0) {
  detail::require_valid(spec);
  if (slices < 1) throw PreconditionError("build_periodic_family: need at least one slice");
  if (!spec.forcing)
    throw PreconditionError("build_periodic_family: spec carries no forcing");
  if (std::abs(spec.forcing->period - slices * spec.tau) > 1e-9)
    throw PreconditionError("build_periodic_family: forcing period must equal slices * tau");
  std::vector<TransitionMatrix> family;
  family.reserve(slices);
  for (int m = 0; m < slices; ++m)
    family.push_back(estimate_transition_matrix(
        grid, spec, m * spec.tau, detail::derive_seed(seed, static_cast<std::uint64_t>(m)),
        threads));
  return family;
}

/// Cells whose midpoint lies in the closed disk. Source/target sets must
/// be nonempty, so an empty result is an error.
inline std::vector<int> cells_in_disk(const UlamGrid& grid, double cx, double cy, double radius) {
  if (!(radius > 0.0)) throw PreconditionError("cells_in_disk: radius must be positive");
  std::vector<int> out;
  for (int c = 0; c < grid.cell_count(); ++c) {
    double x, y;
    grid.midpoint(c, x, y);
    const double dx = x - cx, dy = y - cy;
    if (dx * dx + dy * dy <= radius * radius) out.push_back(c);
  }
  if (out.empty()) throw PreconditionError("cells_in_disk: no cell midpoint inside the disk");
  return out;
}

}  // namespace tpt

#endif  // TPT_ULAM_HPP
