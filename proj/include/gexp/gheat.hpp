#pragma once

// Fully nonlinear heat equation  du/dt = G(D^2 u)  by an explicit monotone
// finite-difference scheme.
//
// Scheme notes.
//   * Central second differences; the generator G is evaluated nodewise
//     through the ThetaSet fast paths (closed form for the scalar interval
//     and the diagonal box, enumeration for a finite set).
//   * Explicit Euler in time under the CFL bound dt <= dx^2 / (d sigma1^2),
//     which makes the update a monotone (positive-weight) average; the
//     constructor enforces it by raising the step count.
//   * Domain [-L, L]^d with L >= 6 sigma1 sqrt(T); bounded Lipschitz data
//     feel the truncation only through a Gaussian-tail-size error.
//   * Boundary: either frozen at the datum value (default) or zero-gradient
//     copy from the adjacent interior node.  Both choices preserve
//     monotonicity and the min/max-datum bounds.
//   * d=2 exists for single solves; the 4-point cross stencil is only
//     monotone when gamma gamma* is (near) diagonal, which covers the
//     shapes used here.
//
// Time convention: slab level l holds the solution a duration l*dt *away
// from the datum*.  Initial-value readers (expectation of phi(B_t)) use it
// directly; terminal-datum readers (BackwardTables) flip t -> T - t.

#include "gexp/parallel.hpp"
#include "gexp/theta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

using Datum = std::function<double(std::span<const double>)>;
using Datum1 = std::function<double(double)>;

enum class BoundaryMode { kClampDatum, kNeumannCopy };

struct HeatGrid {
  int dim = 1;
  double L = 6.0;
  int nx = 241;  // nodes per axis, odd so x = 0 is a node
  double T = 1.0;
  int nt = 1;
  BoundaryMode boundary = BoundaryMode::kClampDatum;

  static HeatGrid make(const ThetaSet& theta, double T, int nx,
                       double L = 0.0,
                       BoundaryMode boundary = BoundaryMode::kClampDatum,
                       int nt_min = 0) {
    if (theta.dim() > 2) throw std::invalid_argument("heat solver: d <= 2");
    if (!(T > 0.0) || T > 1.0)
      throw std::invalid_argument("heat solver: T in (0, 1]");
    HeatGrid g;
    g.dim = theta.dim();
    g.nx = nx % 2 == 0 ? nx + 1 : nx;
    const double s1 = theta.sigma1();
    g.L = std::max(L, 6.0 * s1 * std::sqrt(T));
    g.T = T;
    g.boundary = boundary;
    const double dx = 2.0 * g.L / (g.nx - 1);
    const double dt_max = dx * dx / (g.dim * s1 * s1);
    g.nt = std::max(nt_min, static_cast<int>(std::ceil(T / dt_max)));
    return g;
  }

  double dx() const { return 2.0 * L / (nx - 1); }
  double dt() const { return T / nt; }
  double x(int i) const { return -L + i * dx(); }
  int center() const { return (nx - 1) / 2; }
  int nodes() const { return dim == 1 ? nx : nx * nx; }
};

struct HeatSolution {
  HeatGrid grid;
  std::vector<double> slab;  // (nt+1) * nodes
  std::string datum_name;

  double at(int level, int node) const {
    return slab[static_cast<size_t>(level) * grid.nodes() + node];
  }
  // u at duration T from the datum, at the spatial origin (exact node).
  double center_value() const {
    return at(grid.nt, grid.dim == 1
                           ? grid.center()
                           : grid.center() * grid.nx + grid.center());
  }
};

namespace detail {

inline void heat_step_1d(const ThetaSet& theta, const double* u, double* un,
                         const HeatGrid& g) {
  const int nx = g.nx;
  const double inv_dx2 = 1.0 / (g.dx() * g.dx());
  const double dt = g.dt();
  if (theta.is_scalar_interval()) {
    // closed form hoisted out of the node loop
    const double lo2 = theta.scalar().lo * theta.scalar().lo;
    const double hi2 = theta.scalar().hi * theta.scalar().hi;
    for (int i = 1; i < nx - 1; ++i) {
      const double a = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
      un[i] = u[i] + dt * 0.5 * (a >= 0.0 ? hi2 * a : lo2 * a);
    }
  } else {
    for (int i = 1; i < nx - 1; ++i) {
      const double a = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_dx2;
      un[i] = u[i] + dt * theta.generator1(a);
    }
  }
  if (g.boundary == BoundaryMode::kClampDatum) {
    un[0] = u[0];
    un[nx - 1] = u[nx - 1];
  } else {
    un[0] = un[1];
    un[nx - 1] = un[nx - 2];
  }
}

inline void heat_step_2d(const ThetaSet& theta, const double* u, double* un,
                         const HeatGrid& g) {
  const int nx = g.nx;
  const double inv_dx2 = 1.0 / (g.dx() * g.dx());
  const double dt = g.dt();
  for (int iy = 1; iy < nx - 1; ++iy)
    for (int ix = 1; ix < nx - 1; ++ix) {
      const int n = iy * nx + ix;
      const double axx = (u[n + 1] - 2.0 * u[n] + u[n - 1]) * inv_dx2;
      const double ayy = (u[n + nx] - 2.0 * u[n] + u[n - nx]) * inv_dx2;
      const double axy = (u[n + nx + 1] + u[n - nx - 1] - u[n + nx - 1] -
                          u[n - nx + 1]) *
                         0.25 * inv_dx2;
      un[n] = u[n] + dt * theta.generator2(axx, axy, ayy);
    }
  auto edge = [&](int n, int neighbor) {
    un[n] = g.boundary == BoundaryMode::kClampDatum ? u[n] : un[neighbor];
  };
  for (int ix = 0; ix < nx; ++ix) {
    edge(ix, nx + std::clamp(ix, 1, nx - 2));
    edge((nx - 1) * nx + ix, (nx - 2) * nx + std::clamp(ix, 1, nx - 2));
  }
  for (int iy = 1; iy < nx - 1; ++iy) {
    edge(iy * nx, iy * nx + 1);
    edge(iy * nx + nx - 1, iy * nx + nx - 2);
  }
}

// March datum_nodes forward nt steps; optionally record every level.
inline std::vector<double> heat_evolve(const ThetaSet& theta,
                                       std::vector<double> u,
                                       const HeatGrid& g,
                                       std::vector<double>* slab_out) {
  std::vector<double> un(u.size());
  if (slab_out) {
    slab_out->resize(static_cast<size_t>(g.nt + 1) * g.nodes());
    std::copy(u.begin(), u.end(), slab_out->begin());
  }
  for (int l = 0; l < g.nt; ++l) {
    if (g.dim == 1)
      heat_step_1d(theta, u.data(), un.data(), g);
    else
      heat_step_2d(theta, u.data(), un.data(), g);
    u.swap(un);
    if (slab_out)
      std::copy(u.begin(), u.end(),
                slab_out->begin() + static_cast<size_t>(l + 1) * g.nodes());
  }
  return u;
}

}  // namespace detail

inline std::vector<double> sample_datum(const Datum& phi, const HeatGrid& g) {
  std::vector<double> u(static_cast<size_t>(g.nodes()));
  if (g.dim == 1) {
    for (int i = 0; i < g.nx; ++i) {
      const double xv = g.x(i);
      u[i] = phi(std::span<const double>(&xv, 1));
    }
  } else {
    for (int iy = 0; iy < g.nx; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const double xy[2] = {g.x(ix), g.x(iy)};
        u[iy * g.nx + ix] = phi(std::span<const double>(xy, 2));
      }
  }
  return u;
}

inline HeatSolution solve_gheat_nodes(const ThetaSet& theta,
                                      std::vector<double> datum_nodes,
                                      const HeatGrid& grid,
                                      std::string datum_name = "") {
  if (static_cast<int>(datum_nodes.size()) != grid.nodes())
    throw std::invalid_argument("datum nodes do not match the grid");
  HeatSolution sol;
  sol.grid = grid;
  sol.datum_name = std::move(datum_name);
  detail::heat_evolve(theta, std::move(datum_nodes), grid, &sol.slab);
  for (double v : sol.slab)
    if (!std::isfinite(v))
      throw std::runtime_error("heat solver produced a non-finite value");
  return sol;
}

inline HeatSolution solve_gheat(const ThetaSet& theta, const Datum& phi,
                                const HeatGrid& grid,
                                std::string datum_name = "") {
  return solve_gheat_nodes(theta, sample_datum(phi, grid), grid,
                           std::move(datum_name));
}

inline HeatSolution solve_gheat1(const ThetaSet& theta, const Datum1& phi,
                                 const HeatGrid& grid,
                                 std::string datum_name = "") {
  return solve_gheat(
      theta, [&phi](std::span<const double> x) { return phi(x[0]); }, grid,
      std::move(datum_name));
}

struct GheatParams {
  int nx = 481;
  double L = 0.0;  // 0 = auto (6 sigma1 sqrt(T))
  BoundaryMode boundary = BoundaryMode::kClampDatum;
  int nt_min = 0;
};

// Expectation of phi(B_t): solve for a duration t and read the origin.
inline double g_expectation_cylinder_1(const ThetaSet& theta,
                                       const Datum1& phi, double t,
                                       const GheatParams& p = {}) {
  const HeatGrid g = HeatGrid::make(theta, t, p.nx, p.L, p.boundary, p.nt_min);
  if (g.dim != 1)
    throw std::invalid_argument("cylinder expectation implemented for d=1");
  return solve_gheat1(theta, phi, g).center_value();
}

// Expectation of psi(B_{t_1}, .., B_{t_n}), n <= 3, d = 1: backward
// recursion collapsing one time at a time.  For each frozen value b of the
// earlier argument the datum y -> psi(.., b, y) is evolved over the last
// interval and read at y = b (increments start at the frozen state).
struct MultistepParams {
  int nx = 161;
  double L = 0.0;
  int workers = 0;  // frozen-node solves are independent
};

inline double g_expectation_multistep(
    const ThetaSet& theta,
    const std::function<double(std::span<const double>)>& psi,
    std::vector<double> times, const MultistepParams& p = {}) {
  if (theta.dim() != 1)
    throw std::invalid_argument("multistep expectation implemented for d=1");
  const int n = static_cast<int>(times.size());
  if (n < 1 || n > 3)
    throw std::invalid_argument("multistep expectation: 1 <= n <= 3");
  for (int i = 0; i < n; ++i)
    if (!(times[i] > 0.0) || times[i] > 1.0 ||
        (i > 0 && !(times[i] > times[i - 1])))
      throw std::invalid_argument("multistep times must be increasing in (0,1]");

  const HeatGrid base = HeatGrid::make(theta, 1.0, p.nx, p.L);
  const int nx = base.nx;
  auto grid_for = [&](double duration) {
    return HeatGrid::make(theta, duration, nx, base.L);
  };

  // psi sampled on the full tensor grid of its earlier arguments, last
  // argument collapsed first.
  auto collapse = [&](const std::function<double(double, double)>& f2,
                      double duration) {
    // returns g(b) = E[f2(b, b + increment over `duration`)] on the nodes
    std::vector<double> out(static_cast<size_t>(nx));
    parallel_chunks(nx, p.workers <= 0 ? default_workers() : p.workers,
                    [&](long b, long e) {
                      const HeatGrid g = grid_for(duration);
                      for (long i = b; i < e; ++i) {
                        std::vector<double> datum(static_cast<size_t>(nx));
                        for (int j = 0; j < nx; ++j)
                          datum[j] = f2(base.x(static_cast<int>(i)), g.x(j));
                        const std::vector<double> fin = detail::heat_evolve(
                            theta, std::move(datum), g, nullptr);
                        out[static_cast<size_t>(i)] = fin[i];
                      }
                    });
    return out;
  };

  std::vector<double> layer;  // psi_{n-1} on the node grid
  if (n == 1) {
    layer.resize(static_cast<size_t>(nx));
    for (int i = 0; i < nx; ++i) {
      const double xv = base.x(i);
      layer[i] = psi(std::span<const double>(&xv, 1));
    }
  } else if (n == 2) {
    layer = collapse(
        [&](double b1, double y) {
          const double args[2] = {b1, y};
          return psi(std::span<const double>(args, 2));
        },
        times[1] - times[0]);
  } else {
    // innermost collapse per frozen (b1, b2), then per frozen b1
    std::vector<double> psi2(static_cast<size_t>(nx) * nx);
    parallel_chunks(
        nx, p.workers <= 0 ? default_workers() : p.workers, [&](long b, long e) {
          const HeatGrid g = grid_for(times[2] - times[1]);
          for (long i = b; i < e; ++i)
            for (int j = 0; j < nx; ++j) {
              std::vector<double> datum(static_cast<size_t>(nx));
              for (int k = 0; k < nx; ++k) {
                const double args[3] = {base.x(static_cast<int>(i)), base.x(j),
                                        g.x(k)};
                datum[k] = psi(std::span<const double>(args, 3));
              }
              const std::vector<double> fin =
                  detail::heat_evolve(theta, std::move(datum), g, nullptr);
              psi2[static_cast<size_t>(i) * nx + j] = fin[j];
            }
        });
    layer = collapse(
        [&](double b1, double y) {
          // b1 is a node value exactly; interpolate psi2 linearly in y
          const int i = std::clamp(
              static_cast<int>(std::lround((b1 + base.L) / base.dx())), 0,
              nx - 1);
          const double pos =
              std::clamp((y + base.L) / base.dx(), 0.0,
                         static_cast<double>(nx - 1));
          const int j0 = std::min(static_cast<int>(pos), nx - 2);
          const double fr = pos - j0;
          return (1.0 - fr) * psi2[static_cast<size_t>(i) * nx + j0] +
                 fr * psi2[static_cast<size_t>(i) * nx + j0 + 1];
        },
        times[1] - times[0]);
  }

  const HeatGrid g0 = grid_for(times[0]);
  const std::vector<double> fin =
      detail::heat_evolve(theta, std::move(layer), g0, nullptr);
  return fin[g0.center()];
}

// --- terminal-datum tables (feedback fields) ----------------------------

// Solution of  u_t + G(u_xx) = 0 on [0, T],  u(T, .) = datum, stored with
// first differences; accessors take martingale time t in [0, T] and
// bilinearly interpolate.  With log_mode the tables U = log u and
// grad U = u_x / u are added (datum must stay positive; the monotone
// scheme preserves positivity of a positive datum).
struct BackwardTables {
  HeatGrid grid;
  std::vector<double> u, ux, uxx;
  bool log_mode = false;
  std::vector<double> U, gradU;

  double lookup(const std::vector<double>& tab, double t, double x) const {
    const double lev = (grid.T - t) / grid.dt();
    const double pos = (x + grid.L) / grid.dx();
    const double lc = std::clamp(lev, 0.0, static_cast<double>(grid.nt));
    const double pc = std::clamp(pos, 0.0, static_cast<double>(grid.nx - 1));
    const int l0 = std::min(static_cast<int>(lc), grid.nt - 1);
    const int i0 = std::min(static_cast<int>(pc), grid.nx - 2);
    const double a = lc - l0, b = pc - i0;
    const size_t n0 = static_cast<size_t>(l0) * grid.nx + i0;
    const size_t n1 = n0 + grid.nx;
    return (1 - a) * ((1 - b) * tab[n0] + b * tab[n0 + 1]) +
           a * ((1 - b) * tab[n1] + b * tab[n1 + 1]);
  }
  double u_at(double t, double x) const { return lookup(u, t, x); }
  double ux_at(double t, double x) const { return lookup(ux, t, x); }
  double uxx_at(double t, double x) const { return lookup(uxx, t, x); }
  double U_at(double t, double x) const { return lookup(U, t, x); }
  double gradU_at(double t, double x) const { return lookup(gradU, t, x); }
};

inline BackwardTables backward_tables(const ThetaSet& theta,
                                      const Datum1& datum,
                                      const HeatGrid& grid, bool log_mode) {
  if (grid.dim != 1)
    throw std::invalid_argument("backward tables implemented for d=1");
  BackwardTables bt;
  bt.grid = grid;
  bt.log_mode = log_mode;
  {
    HeatSolution sol = solve_gheat1(theta, datum, grid);
    bt.u = std::move(sol.slab);
  }
  const int nx = grid.nx;
  const long levels = grid.nt + 1;
  const double dx = grid.dx();
  bt.ux.resize(bt.u.size());
  bt.uxx.resize(bt.u.size());
  for (long l = 0; l < levels; ++l) {
    const double* row = &bt.u[static_cast<size_t>(l) * nx];
    double* gx = &bt.ux[static_cast<size_t>(l) * nx];
    double* gxx = &bt.uxx[static_cast<size_t>(l) * nx];
    for (int i = 1; i < nx - 1; ++i) {
      gx[i] = (row[i + 1] - row[i - 1]) / (2.0 * dx);
      gxx[i] = (row[i + 1] - 2.0 * row[i] + row[i - 1]) / (dx * dx);
    }
    gx[0] = (row[1] - row[0]) / dx;
    gx[nx - 1] = (row[nx - 1] - row[nx - 2]) / dx;
    gxx[0] = gxx[1];
    gxx[nx - 1] = gxx[nx - 2];
  }
  if (log_mode) {
    bt.U.resize(bt.u.size());
    bt.gradU.resize(bt.u.size());
    for (size_t i = 0; i < bt.u.size(); ++i) {
      if (!(bt.u[i] > 0.0))
        throw std::runtime_error(
            "log transform: solution lost positivity (scheme error)");
      bt.U[i] = std::log(bt.u[i]);
      bt.gradU[i] = bt.ux[i] / bt.u[i];
    }
  }
  return bt;
}

// Tables for the exponential datum e^phi, with U = log u and grad U.
inline BackwardTables log_transform_solution(const ThetaSet& theta,
                                             const Datum1& phi,
                                             const HeatGrid& grid) {
  return backward_tables(
      theta, [&phi](double x) { return std::exp(phi(x)); }, grid, true);
}

}  // namespace gexp
