#pragma once

// Small-noise asymptotics: the rate functions
//
//   I(x)    = 1/2 int inf_{gamma in Theta} |gamma^{-1} xdot|^2 dt
//   J(x,y)  = 1/2 int xdot . (ydot^{-1} xdot) dt   (+inf unless ydot stays
//             inside {gamma gamma* : gamma in Theta})
//
// on piecewise-linear paths, where both integrals are exact segment sums,
// together with the two sides of the Laplace limit
//
//   eps log E_sup[ exp(Phi(sqrt(eps) B)/eps) ]  ->  sup_x { Phi(x) - I(x) }.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gexp/gheat.hpp"
#include "gexp/pathsim.hpp"
#include "gexp/theta.hpp"
#include "gexp/upperexp.hpp"
#include "gexp/variational.hpp"

namespace gexp {

constexpr double kInfRate = std::numeric_limits<double>::infinity();

// --- piecewise-linear paths ----------------------------------------------

// A path on [0,1], linear between breakpoints, starting at the origin; may
// carry a matrix companion path (a candidate quadratic variation).
struct AbsContPath {
  int dim = 1;
  std::vector<double> s;  // breakpoints, 0 = s_0 < ... < s_m = 1
  std::vector<double> x;  // (m+1) * dim node values
  std::vector<double> y;  // optional (m+1) * dim * dim matrix node values

  int segments() const { return static_cast<int>(s.size()) - 1; }
  bool has_matrix() const { return !y.empty(); }

  double xnode(int j, int i = 0) const {
    return x[static_cast<size_t>(j) * dim + i];
  }
  double ynode(int j, int i, int l) const {
    return y[(static_cast<size_t>(j) * dim + i) * dim + l];
  }

  // linear interpolation of component i at time t
  double value(double t, int i = 0) const {
    const double tc = std::clamp(t, 0.0, 1.0);
    auto it = std::upper_bound(s.begin(), s.end(), tc);
    int j = static_cast<int>(it - s.begin()) - 1;
    j = std::clamp(j, 0, segments() - 1);
    const double w =
        (tc - s[static_cast<size_t>(j)]) /
        (s[static_cast<size_t>(j + 1)] - s[static_cast<size_t>(j)]);
    return (1.0 - w) * xnode(j, i) + w * xnode(j + 1, i);
  }
  double yvalue(double t, int i, int l) const {
    const double tc = std::clamp(t, 0.0, 1.0);
    auto it = std::upper_bound(s.begin(), s.end(), tc);
    int j = static_cast<int>(it - s.begin()) - 1;
    j = std::clamp(j, 0, segments() - 1);
    const double w =
        (tc - s[static_cast<size_t>(j)]) /
        (s[static_cast<size_t>(j + 1)] - s[static_cast<size_t>(j)]);
    return (1.0 - w) * ynode(j, i, l) + w * ynode(j + 1, i, l);
  }

  static AbsContPath pwl(int dim, std::vector<double> s,
                         std::vector<double> x) {
    if (s.size() < 2 || s.front() != 0.0 || s.back() != 1.0)
      throw std::invalid_argument("breakpoints must run from 0 to 1");
    for (size_t j = 1; j < s.size(); ++j)
      if (!(s[j] > s[j - 1]))
        throw std::invalid_argument("breakpoints must increase");
    if (x.size() != s.size() * static_cast<size_t>(dim))
      throw std::invalid_argument("node value count mismatch");
    for (int i = 0; i < dim; ++i)
      if (x[static_cast<size_t>(i)] != 0.0)
        throw std::invalid_argument("paths start at the origin");
    AbsContPath p;
    p.dim = dim;
    p.s = std::move(s);
    p.x = std::move(x);
    return p;
  }

  static AbsContPath pwl1(std::vector<double> s, std::vector<double> x) {
    return pwl(1, std::move(s), std::move(x));
  }

  // x(t) = slope * t in one dimension
  static AbsContPath line1(double slope) {
    return pwl1({0.0, 1.0}, {0.0, slope});
  }

  // attach a scalar companion path on the same breakpoints (d = 1)
  void attach_qv1(std::vector<double> yvals) {
    if (dim != 1 || yvals.size() != s.size())
      throw std::invalid_argument("companion path shape mismatch");
    if (yvals.front() != 0.0)
      throw std::invalid_argument("companion path starts at 0");
    y = std::move(yvals);
  }
};

// Values of a uniformly sampled fine path re-expressed on n uniform
// breakpoints, linear between; matches the fine path at every breakpoint.
inline AbsContPath polygonal_approx(std::span<const double> fine, int dim,
                                    int n) {
  const long nodes = static_cast<long>(fine.size()) / dim;
  const long steps = nodes - 1;
  if (n < 1 || n > steps)
    throw std::invalid_argument("polygonal resolution exceeds the fine grid");
  AbsContPath p;
  p.dim = dim;
  p.s.resize(static_cast<size_t>(n) + 1);
  p.x.resize((static_cast<size_t>(n) + 1) * dim);
  for (int k = 0; k <= n; ++k) {
    p.s[static_cast<size_t>(k)] = static_cast<double>(k) / n;
    const double pos = static_cast<double>(k) * steps / n;
    const long i0 = std::min<long>(static_cast<long>(pos), steps - 1);
    const double w = pos - static_cast<double>(i0);
    for (int i = 0; i < dim; ++i)
      p.x[static_cast<size_t>(k) * dim + i] =
          (1.0 - w) * fine[static_cast<size_t>(i0) * dim + i] +
          w * fine[(static_cast<size_t>(i0) + 1) * dim + i];
  }
  return p;
}

// Sup-distance between a uniformly sampled fine path and a piecewise-linear
// one, probed at the fine nodes.
inline double sup_distance(std::span<const double> fine, int dim,
                           const AbsContPath& a) {
  const long nodes = static_cast<long>(fine.size()) / dim;
  double m = 0.0;
  for (long k = 0; k < nodes; ++k) {
    const double t = static_cast<double>(k) / (nodes - 1);
    for (int i = 0; i < dim; ++i)
      m = std::max(m, std::abs(fine[static_cast<size_t>(k) * dim + i] -
                               a.value(t, i)));
  }
  return m;
}

// The simulated path as a piecewise-linear path: x = xscale * B on the
// uniform grid, companion y = the path's (unscaled) quadratic variation.
inline AbsContPath to_abscont(const SamplePath& p, double xscale) {
  AbsContPath a;
  a.dim = p.dim;
  const int M = p.grid.M;
  a.s.resize(static_cast<size_t>(M) + 1);
  a.x.resize((static_cast<size_t>(M) + 1) * p.dim);
  for (int k = 0; k <= M; ++k) {
    a.s[static_cast<size_t>(k)] = p.grid.t(k);
    for (int i = 0; i < p.dim; ++i)
      a.x[static_cast<size_t>(k) * p.dim + i] = xscale * p.b(k, i);
  }
  a.y = p.QV;
  return a;
}

// --- measurable selection and rate functions ------------------------------

struct Selection {
  double gamma[kMaxDim * kMaxDim] = {};
  double cost2 = 0.0;  // |gamma^{-1} xi|^2 at the minimizer
};

// Gamma(xi): the Theta element minimizing |gamma^{-1} xi|.  Interval and
// box sets take the largest volatility per axis; finite sets enumerate,
// keeping the first matrix on ties so the selection is deterministic.
inline Selection measurable_selection(const ThetaSet& theta,
                                      std::span<const double> xi) {
  const int d = theta.dim();
  if (static_cast<int>(xi.size()) != d)
    throw std::invalid_argument("direction dimension mismatch");
  Selection sel;
  if (theta.is_scalar_interval()) {
    const double hi = theta.scalar().hi;
    sel.gamma[0] = hi;
    sel.cost2 = (xi[0] / hi) * (xi[0] / hi);
    return sel;
  }
  if (theta.is_diagonal_box()) {
    sel.cost2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const double hi = theta.box().hi[static_cast<size_t>(i)];
      sel.gamma[i * d + i] = hi;
      sel.cost2 += (xi[static_cast<size_t>(i)] / hi) *
                   (xi[static_cast<size_t>(i)] / hi);
    }
    return sel;
  }
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = xi[static_cast<size_t>(i)];
  double best = kInfRate;
  const Eigen::MatrixXd* pick = nullptr;
  for (const auto& m : theta.finite().mats) {
    const double c = m.partialPivLu().solve(v).squaredNorm();
    if (c < best) {
      best = c;
      pick = &m;
    }
  }
  sel.cost2 = best;
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l) sel.gamma[i * d + l] = (*pick)(i, l);
  return sel;
}

// I(x): exact sum of the per-segment minima.
inline double rate_I(const ThetaSet& theta, const AbsContPath& xp) {
  const int d = theta.dim();
  if (xp.dim != d) throw std::invalid_argument("path dimension mismatch");
  double acc = 0.0;
  double slope[kMaxDim];
  for (int j = 0; j < xp.segments(); ++j) {
    const double ds =
        xp.s[static_cast<size_t>(j + 1)] - xp.s[static_cast<size_t>(j)];
    for (int i = 0; i < d; ++i)
      slope[i] = (xp.xnode(j + 1, i) - xp.xnode(j, i)) / ds;
    acc += 0.5 * measurable_selection(theta, {slope, slope + d}).cost2 * ds;
  }
  return acc;
}

// Is a candidate quadratic-variation slope attainable from Theta?
inline bool qv_slope_admissible(const ThetaSet& theta, const double* ydot,
                                double tol = 1e-9) {
  const int d = theta.dim();
  if (theta.is_scalar_interval()) {
    const double lo = theta.scalar().lo, hi = theta.scalar().hi;
    return ydot[0] >= lo * lo - tol && ydot[0] <= hi * hi + tol;
  }
  if (theta.is_diagonal_box()) {
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l)
        if (i != l && std::abs(ydot[i * d + l]) > tol) return false;
    for (int i = 0; i < d; ++i) {
      const double lo = theta.box().lo[static_cast<size_t>(i)];
      const double hi = theta.box().hi[static_cast<size_t>(i)];
      const double v = ydot[i * d + i];
      if (v < lo * lo - tol || v > hi * hi + tol) return false;
    }
    return true;
  }
  for (const auto& g : theta.finite_ggt()) {
    double dist = 0.0;
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l)
        dist = std::max(dist, std::abs(ydot[i * d + l] - g(i, l)));
    if (dist <= tol) return true;
  }
  return false;
}

// J(x, y): +inf off the admissible set, else the exact segment sum.  Paths
// on different breakpoints are refined to the common set first.
inline double rate_J(const ThetaSet& theta, const AbsContPath& xp,
                     const AbsContPath& yp, double tol = 1e-9) {
  const int d = theta.dim();
  if (xp.dim != d || yp.dim != d)
    throw std::invalid_argument("path dimension mismatch");
  if (yp.y.empty())
    throw std::invalid_argument("second argument carries no matrix path");
  std::vector<double> s;
  std::merge(xp.s.begin(), xp.s.end(), yp.s.begin(), yp.s.end(),
             std::back_inserter(s));
  s.erase(std::unique(s.begin(), s.end()), s.end());

  double acc = 0.0;
  double xd[kMaxDim], yd[kMaxDim * kMaxDim];
  for (size_t j = 0; j + 1 < s.size(); ++j) {
    const double ds = s[j + 1] - s[j];
    for (int i = 0; i < d; ++i)
      xd[i] = (xp.value(s[j + 1], i) - xp.value(s[j], i)) / ds;
    for (int i = 0; i < d; ++i)
      for (int l = 0; l < d; ++l)
        yd[i * d + l] =
            (yp.yvalue(s[j + 1], i, l) - yp.yvalue(s[j], i, l)) / ds;
    if (!qv_slope_admissible(theta, yd, tol)) return kInfRate;
    if (d == 1) {
      acc += 0.5 * xd[0] * xd[0] / yd[0] * ds;
    } else {
      Eigen::MatrixXd m(d, d);
      Eigen::VectorXd v(d);
      for (int i = 0; i < d; ++i) {
        v(i) = xd[i];
        for (int l = 0; l < d; ++l) m(i, l) = yd[i * d + l];
      }
      acc += 0.5 * v.dot(m.ldlt().solve(v)) * ds;
    }
  }
  return acc;
}

// --- deterministic path optimization ---------------------------------------

using PathwiseFunctional = std::function<double(const AbsContPath&)>;

struct PathSearch {
  int segments = 4;
  double box = 0.0;  // coordinate bound; 0 = auto (4 sigma1)
  int line_points = 33;
  int refinements = 3;
  // Cyclic ascent on chained node values converges like Gauss-Seidel, so
  // the cap is generous; the per-sweep gain test exits long before it.
  int sweeps = 400;
};

namespace detail {

// Cyclic coordinate ascent with a refining line search per coordinate.
// Purely deterministic: fixed grids, strict improvement, no RNG.
inline double coordinate_ascent(
    const std::function<double(const std::vector<double>&)>& objective,
    std::vector<double>& coords, const std::vector<double>& lo,
    const std::vector<double>& hi, int line_points, int refinements,
    int sweeps) {
  double best = objective(coords);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const double before = best;
    for (size_t c = 0; c < coords.size(); ++c) {
      double wlo = lo[c], whi = hi[c];
      for (int r = 0; r <= refinements; ++r) {
        double arg = coords[c];
        for (int i = 0; i < line_points; ++i) {
          const double v =
              wlo + (whi - wlo) * i / static_cast<double>(line_points - 1);
          coords[c] = v;
          const double val = objective(coords);
          if (val > best) {
            best = val;
            arg = v;
          }
        }
        coords[c] = arg;
        const double halfw = (whi - wlo) / (line_points - 1);
        wlo = std::max(lo[c], arg - halfw);
        whi = std::min(hi[c], arg + halfw);
      }
    }
    if (best - before < 1e-12) break;
  }
  return best;
}

inline AbsContPath path_from_coords(int d, int m,
                                    const std::vector<double>& coords) {
  AbsContPath p;
  p.dim = d;
  p.s.resize(static_cast<size_t>(m) + 1);
  p.x.assign((static_cast<size_t>(m) + 1) * d, 0.0);
  for (int j = 0; j <= m; ++j)
    p.s[static_cast<size_t>(j)] = static_cast<double>(j) / m;
  for (int j = 1; j <= m; ++j)
    for (int i = 0; i < d; ++i)
      p.x[static_cast<size_t>(j) * d + i] =
          coords[static_cast<size_t>(j - 1) * d + i];
  return p;
}

}  // namespace detail

struct LaplaceRhs {
  double value = 0.0;
  AbsContPath argmax;
};

// sup over m-segment piecewise-linear paths of Phi(x) - I(x), coordinates
// box-bounded.  Restarts from the zero path and from straight ramps to the
// box corners.
inline LaplaceRhs laplace_rhs(const ThetaSet& theta,
                              const PathwiseFunctional& Phi,
                              const PathSearch& ps = {}) {
  const int d = theta.dim();
  const int m = std::clamp(ps.segments, 1, 8);
  const double box = ps.box > 0.0 ? ps.box : 4.0 * theta.sigma1();
  const size_t n = static_cast<size_t>(m) * d;
  const std::vector<double> lo(n, -box), hi(n, box);

  auto objective = [&](const std::vector<double>& c) {
    const AbsContPath p = detail::path_from_coords(d, m, c);
    return Phi(p) - rate_I(theta, p);
  };

  double best = -kInfRate;
  std::vector<double> best_coords;
  for (int restart = 0; restart < 3; ++restart) {
    std::vector<double> coords(n, 0.0);
    if (restart > 0) {
      const double sign = restart == 1 ? 1.0 : -1.0;
      for (int j = 1; j <= m; ++j)
        for (int i = 0; i < d; ++i)
          coords[static_cast<size_t>(j - 1) * d + i] =
              sign * box * j / static_cast<double>(m);
    }
    const double v = detail::coordinate_ascent(
        objective, coords, lo, hi, ps.line_points, ps.refinements, ps.sweeps);
    if (v > best) {
      best = v;
      best_coords = coords;
    }
  }
  return {best, detail::path_from_coords(d, m, best_coords)};
}

// Joint version (d = 1): sup over (x, y) of Psi(x, y) - J(x, y), with the
// companion slope per segment constrained to [sigma0^2, sigma1^2].
inline LaplaceRhs laplace_rhs_joint(
    const ThetaSet& theta,
    const std::function<double(const AbsContPath&, const AbsContPath&)>& Psi,
    const PathSearch& ps = {}) {
  if (theta.dim() != 1)
    throw std::invalid_argument("joint optimization implemented for d=1");
  const int m = std::clamp(ps.segments, 1, 8);
  const double box = ps.box > 0.0 ? ps.box : 4.0 * theta.sigma1();
  const double q0 = theta.sigma0() * theta.sigma0();
  const double q1 = theta.sigma1() * theta.sigma1();
  const size_t n = 2 * static_cast<size_t>(m);  // x nodes then y slopes
  std::vector<double> lo(n), hi(n);
  for (size_t c = 0; c < n; ++c) {
    lo[c] = c < static_cast<size_t>(m) ? -box : q0;
    hi[c] = c < static_cast<size_t>(m) ? box : q1;
  }

  auto build = [m](const std::vector<double>& c) {
    AbsContPath xp = detail::path_from_coords(
        1, m, std::vector<double>(c.begin(), c.begin() + m));
    AbsContPath yp = xp;
    yp.y.assign(static_cast<size_t>(m) + 1, 0.0);
    for (int j = 1; j <= m; ++j)
      yp.y[static_cast<size_t>(j)] =
          yp.y[static_cast<size_t>(j - 1)] +
          c[static_cast<size_t>(m + j - 1)] / m;
    return std::pair<AbsContPath, AbsContPath>(std::move(xp), std::move(yp));
  };
  auto objective = [&](const std::vector<double>& c) {
    auto [xp, yp] = build(c);
    return Psi(xp, yp) - rate_J(theta, xp, yp);
  };

  double best = -kInfRate;
  std::vector<double> best_coords;
  for (int restart = 0; restart < 3; ++restart) {
    std::vector<double> coords(n, 0.0);
    const double sign = restart == 1 ? 1.0 : (restart == 2 ? -1.0 : 0.0);
    for (int j = 1; j <= m; ++j)
      coords[static_cast<size_t>(j - 1)] =
          sign * box * j / static_cast<double>(m);
    for (int j = 0; j < m; ++j)
      coords[static_cast<size_t>(m + j)] = 0.5 * (q0 + q1);
    const double v = detail::coordinate_ascent(
        objective, coords, lo, hi, ps.line_points, ps.refinements, ps.sweeps);
    if (v > best) {
      best = v;
      best_coords = coords;
    }
  }
  auto [xp, yp] = build(best_coords);
  LaplaceRhs out;
  out.value = best;
  out.argmax = std::move(xp);
  out.argmax.y = std::move(yp.y);
  return out;
}

// --- the prelimit --------------------------------------------------------

// eps log E_sup[ exp(phi(sqrt(eps) B_1)/eps) ] by the endpoint PDE; the
// datum is shifted by sup phi before exponentiating so the solve stays in
// range.  Tolerance from one grid halving.
inline PdeValue laplace_lhs_pde1(const ThetaSet& theta,
                                 const NamedFunction& phi, double eps,
                                 const GheatParams& p = {}) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("eps must lie in (0, 1]");
  const double c = phi.bound;
  const double se = std::sqrt(eps);
  const Datum1 datum = [fn = phi.fn, c, se, eps](double xx) {
    return std::exp((fn(se * xx) - c) / eps);
  };
  auto eval = [&](const GheatParams& gp) {
    return eps * std::log(g_expectation_cylinder_1(theta, datum, 1.0, gp)) +
           c;
  };
  const double fine = eval(p);
  GheatParams coarse = p;
  coarse.nx = detail::coarsen_nodes(p.nx);
  const double rough = eval(coarse);
  return {fine, std::max(std::abs(fine - rough), 1e-8)};
}

struct LaplaceMcParams {
  TimeGrid grid{100};
  long n_paths = 20'000;
  std::uint64_t seed = 11;
  int workers = 0;
  int theta_points = 5;
  double cov_warn = 10.0;  // coefficient-of-variation alarm threshold
};

struct LaplaceLhsMc {
  double value = 0.0;
  double stderr_ = 0.0;  // delta-method stderr of the eps-scaled log
  double cov = 0.0;
  bool cov_ok = true;
};

// Monte Carlo prelimit for a general bounded path functional: the path is
// handed to Phi as (sqrt(eps) B, <B>) -- the companion matrix path stays
// unscaled.
inline LaplaceLhsMc laplace_lhs_mc(const ThetaSet& theta,
                                   const PathwiseFunctional& Phi,
                                   double phi_max, double eps,
                                   const LaplaceMcParams& mp = {}) {
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("eps must lie in (0, 1]");
  const double se = std::sqrt(eps);
  PathFunctional f = [Phi, phi_max, se, eps](const SamplePath& p) {
    const double v = Phi(to_abscont(p, se));
    if (!(std::abs(v) <= phi_max + 1e-12))
      throw std::domain_error("functional exceeded its declared bound");
    return std::exp((v - phi_max) / eps);
  };
  const ControlFamily fam =
      ControlFamily::constant_grid(theta, mp.grid, mp.theta_points);
  const UpperEstimate e =
      estimate_upper(theta, f, fam, mp.n_paths, mp.seed, mp.workers);
  LaplaceLhsMc out;
  out.value = phi_max + eps * std::log(e.value);
  out.stderr_ = eps * e.stderr_ / e.value;
  out.cov = e.value > 0.0
                ? e.stderr_ * std::sqrt(static_cast<double>(e.n_paths)) /
                      e.value
                : kInfRate;
  out.cov_ok = out.cov <= mp.cov_warn;
  return out;
}

// --- convergence tables ----------------------------------------------------

struct LaplaceRow {
  double eps = 0.0;
  double lhs = 0.0;
  double tol = 0.0;  // pde tolerance or mc stderr
  double rhs = 0.0;
  double gap = 0.0;  // lhs - rhs
  std::string method;
  long n_paths = 0;
};

struct LaplaceReport {
  std::vector<LaplaceRow> rows;
  double rhs = 0.0;
  AbsContPath argmax;
  double final_threshold = 0.05;
  bool pass_final = false;
  bool pass_monotone = false;
  bool pass = false;

  void finish() {
    pass_final =
        !rows.empty() && std::abs(rows.back().gap) <= final_threshold;
    pass_monotone = true;
    for (size_t i = 1; i < rows.size(); ++i) {
      const double slack = std::max({rows[i - 1].tol, rows[i].tol, 1e-3});
      if (std::abs(rows[i].gap) > std::abs(rows[i - 1].gap) + slack)
        pass_monotone = false;
    }
    pass = pass_final && pass_monotone;
  }
};

// PDE prelimits against the path-space supremum for an endpoint functional;
// eps values are visited largest first so the gap column should shrink.
inline LaplaceReport verify_laplace(const ThetaSet& theta,
                                    const NamedFunction& phi,
                                    std::vector<double> eps_list,
                                    const PathSearch& ps = {},
                                    const GheatParams& gp = {},
                                    double final_threshold = 0.05) {
  std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
  LaplaceReport rep;
  rep.final_threshold = final_threshold;
  const LaplaceRhs rhs = laplace_rhs(
      theta,
      [&phi](const AbsContPath& x) { return phi.fn(x.value(1.0)); }, ps);
  rep.rhs = rhs.value;
  rep.argmax = rhs.argmax;
  for (double eps : eps_list) {
    const PdeValue lhs = laplace_lhs_pde1(theta, phi, eps, gp);
    LaplaceRow row;
    row.eps = eps;
    row.lhs = lhs.value;
    row.tol = lhs.tol;
    row.rhs = rhs.value;
    row.gap = lhs.value - rhs.value;
    row.method = "pde";
    rep.rows.push_back(std::move(row));
  }
  rep.finish();
  return rep;
}

// Joint variant: Psi reads the endpoint of the scaled path and the endpoint
// of its (unscaled) quadratic variation; the supremum runs over path pairs
// with admissible companion slopes.  Monte Carlo prelimit.
inline LaplaceReport verify_laplace_joint(
    const ThetaSet& theta, const std::function<double(double, double)>& psi,
    double psi_max, std::vector<double> eps_list, const PathSearch& ps = {},
    const LaplaceMcParams& mp = {}, double final_threshold = 0.1) {
  if (theta.dim() != 1)
    throw std::invalid_argument("joint check implemented for d=1");
  std::sort(eps_list.begin(), eps_list.end(), std::greater<double>());
  LaplaceReport rep;
  rep.final_threshold = final_threshold;
  const LaplaceRhs rhs = laplace_rhs_joint(
      theta,
      [&psi](const AbsContPath& x, const AbsContPath& y) {
        return psi(x.value(1.0), y.y.back());
      },
      ps);
  rep.rhs = rhs.value;
  rep.argmax = rhs.argmax;
  const PathwiseFunctional Phi = [psi](const AbsContPath& a) {
    return psi(a.value(1.0), a.y.back());
  };
  for (double eps : eps_list) {
    const LaplaceLhsMc lhs = laplace_lhs_mc(theta, Phi, psi_max, eps, mp);
    LaplaceRow row;
    row.eps = eps;
    row.lhs = lhs.value;
    row.tol = 3.0 * lhs.stderr_;
    row.rhs = rhs.value;
    row.gap = lhs.value - rhs.value;
    row.method = "mc";
    row.n_paths = mp.n_paths;
    rep.rows.push_back(std::move(row));
  }
  rep.finish();
  return rep;
}

}  // namespace gexp
