#pragma once

// Variational representation of the log upper-expectation of e^f:
//
//   log E_sup[e^{f(B)}]  =  sup_h E_sup[ f(B + int d<B> h) - 1/2 int h.(d<B> h) ]
//
// This header computes both sides, builds the near-optimal Clark-Ocone
// feedback control grad log u from the nonlinear heat tables, constructs the
// companion controls solving the fixed-point relations
//
//   hbar_t = h_t(B - int d<B> hbar)      and      h_t = hhat_t(B - int d<B> h),
//
// and bundles the lemma-level Monte Carlo checks (Girsanov shift identity,
// density normalization, symmetry, moment and entropy bounds, L1 continuity
// of densities) that back the CLI verbs.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gexp/gheat.hpp"
#include "gexp/functions.hpp"
#include "gexp/pathsim.hpp"
#include "gexp/rng.hpp"
#include "gexp/stats.hpp"
#include "gexp/theta.hpp"
#include "gexp/upperexp.hpp"

namespace gexp {

// --- generic inequality reporting --------------------------------------

// One inequality lhs <= rhs + slack; equality checks store |difference| as
// lhs with rhs = 0.
struct CheckLine {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // tolerance granted (usually 3 pooled stderr)
  double stderr_ = 0.0;
  bool pass = true;
};

struct CheckReport {
  std::string title;
  std::vector<CheckLine> lines;
  bool pass = true;

  void add(CheckLine l) {
    pass = pass && l.pass;
    lines.push_back(std::move(l));
  }
};

namespace detail {

inline CheckLine ineq_line(std::string label, double lhs, double rhs,
                           double slack, double se) {
  CheckLine l;
  l.label = std::move(label);
  l.lhs = lhs;
  l.rhs = rhs;
  l.slack = slack;
  l.stderr_ = se;
  l.pass = lhs <= rhs + slack;
  return l;
}

}  // namespace detail

// --- multi-statistic Monte Carlo ----------------------------------------

// Per-path column statistics reduced in index order (same determinism
// contract as mc_mean).  F fills out[0..ncols) for each completed path.
template <class F>
std::vector<MeanStderr> mc_columns(const ThetaSet& theta,
                                   const ControlProcess& ctrl, int ncols,
                                   long n_paths, std::uint64_t seed,
                                   int workers, F f) {
  std::vector<double> vals(static_cast<size_t>(n_paths) * ncols);
  parallel_chunks(n_paths, workers <= 0 ? default_workers() : workers,
                  [&, ctrl, f](long b, long e) mutable {
                    SamplePath buf;
                    for (long p = b; p < e; ++p) {
                      simulate_path(buf, theta, ctrl, ctrl.grid, seed, p);
                      f(buf, &vals[static_cast<size_t>(p) * ncols]);
                    }
                  });
  std::vector<MeanStderr> out(static_cast<size_t>(ncols));
  std::vector<double> col(static_cast<size_t>(n_paths));
  for (int c = 0; c < ncols; ++c) {
    for (long p = 0; p < n_paths; ++p)
      col[static_cast<size_t>(p)] = vals[static_cast<size_t>(p) * ncols + c];
    for (double v : col)
      if (!std::isfinite(v))
        throw std::runtime_error("non-finite value in mc_columns");
    out[static_cast<size_t>(c)] = mean_stderr(col);
  }
  return out;
}

// --- integrand algebra ---------------------------------------------------

// a + c*b on a shared grid; both operands advance together per step, so
// stateful rules stay on their k-ascending contract.
inline SimpleIntegrand add_scaled(const SimpleIntegrand& a,
                                  const SimpleIntegrand& b, double c) {
  if (!(a.grid == b.grid) || a.dim != b.dim)
    throw std::invalid_argument("integrand grid mismatch in add_scaled");
  SimpleIntegrand out;
  out.grid = a.grid;
  out.dim = a.dim;
  out.h_max = a.h_max + std::abs(c) * b.h_max;
  out.descriptor = a.descriptor + (c < 0 ? "-" : "+") +
                   std::to_string(std::abs(c)) + "*" + b.descriptor;
  out.step = [a, b, c, d = a.dim](const SamplePath& p, int k,
                                  double* xi) mutable {
    double tmp[kMaxDim];
    a.step(p, k, xi);
    b.step(p, k, tmp);
    for (int i = 0; i < d; ++i) xi[i] += c * tmp[i];
  };
  return out;
}

inline SimpleIntegrand scale_integrand(const SimpleIntegrand& h, double c) {
  SimpleIntegrand out = h;
  out.h_max = std::abs(c) * h.h_max;
  out.descriptor = std::to_string(c) + "*" + h.descriptor;
  out.step = [h, c, d = h.dim](const SamplePath& p, int k,
                               double* xi) mutable {
    h.step(p, k, xi);
    for (int i = 0; i < d; ++i) xi[i] *= c;
  };
  return out;
}

// Step-function integrand with `blocks` blocks of values uniform in
// [-amp, amp], reproducible from (seed, id).
inline SimpleIntegrand random_step_integrand(TimeGrid g, int d, int blocks,
                                             double amp, std::uint64_t seed,
                                             int id) {
  const CounterRng rng(derive_seed(seed, 0x5E9u + static_cast<unsigned>(id)),
                       static_cast<std::uint64_t>(RngStream::kIntegrands));
  std::vector<double> v(static_cast<size_t>(g.M) * d);
  for (int k = 0; k < g.M; ++k) {
    const int blk = std::min(blocks - 1, k * blocks / g.M);
    for (int i = 0; i < d; ++i)
      v[static_cast<size_t>(k) * d + i] =
          amp * (2.0 * rng.u01(static_cast<std::uint64_t>(blk) * d + i) - 1.0);
  }
  return SimpleIntegrand::deterministic(g, d, std::move(v),
                                        "rand-step#" + std::to_string(id));
}

// Bounded one-block feedback integrand xi_k = amp * tanh(B_k) per axis;
// handy wherever a genuinely path-dependent h is needed.
inline SimpleIntegrand tanh_feedback_integrand(TimeGrid g, int d, double amp) {
  SimpleIntegrand h;
  h.grid = g;
  h.dim = d;
  h.h_max = std::abs(amp) * std::sqrt(static_cast<double>(d));
  h.step = [amp, d](const SamplePath& p, int k, double* xi) {
    for (int i = 0; i < d; ++i) xi[i] = amp * std::tanh(p.b(k, i));
  };
  h.descriptor = "tanh-feedback";
  return h;
}

// --- fixed-point companion controls -------------------------------------

namespace detail {

// Forward state of Y = B + sign * int d<B> xi, advanced one grid step per
// call with the previous integrand value.  Every consumer of the companion
// path goes through this one implementation, so the recursion is the same
// floating-point arithmetic everywhere (feedback-time and offline replays
// produce bitwise-identical states).
struct CompanionState {
  int d = 1;
  std::array<double, kMaxDim> y{};

  void reset(int dim) {
    d = dim;
    y.fill(0.0);
  }

  // Bring y from time k-1 to time k (k >= 1).
  void advance(const SamplePath& p, int k, const double* prev_xi,
               double sign) {
    for (int i = 0; i < d; ++i) {
      double drift = 0.0;
      for (int j = 0; j < d; ++j) drift += p.dqv(k - 1, i, j) * prev_xi[j];
      y[static_cast<size_t>(i)] = y[static_cast<size_t>(i)] +
                                  (p.b(k, i) - p.b(k - 1, i)) + sign * drift;
    }
  }
};

// Control solving out_k(B) = h_k(Z) with Z = B + sign * int d<B> out.
// The synthetic path fed to h carries Z in its B slots and the original
// quadratic variation (a drift shift leaves <B> unchanged); dW and theta
// stay zero, so h must be a function of (path, qv) only -- which is the
// integrand contract.
inline SimpleIntegrand companion_control(SimpleIntegrand h, double sign,
                                         const std::string& tag) {
  SimpleIntegrand out;
  out.grid = h.grid;
  out.dim = h.dim;
  out.h_max = h.h_max;  // values are h-values along another path
  out.descriptor = tag + "(" + h.descriptor + ")";
  out.step = [h, sign, d = h.dim, z = SamplePath{}, cs = CompanionState{},
              prev = std::vector<double>(static_cast<size_t>(h.dim))](
                 const SamplePath& p, int k, double* xi) mutable {
    if (k == 0) {
      z.reset(p.grid, d);
      cs.reset(d);
    } else {
      cs.advance(p, k, prev.data(), sign);
      for (int i = 0; i < d; ++i)
        z.B[static_cast<size_t>(k) * d + i] = cs.y[static_cast<size_t>(i)];
    }
    // mirror the qv slot for time k so h sees <Z> = <B> up to its horizon
    std::copy(p.QV.begin() + static_cast<size_t>(k) * d * d,
              p.QV.begin() + static_cast<size_t>(k + 1) * d * d,
              z.QV.begin() + static_cast<size_t>(k) * d * d);
    h.step(z, k, xi);
    std::copy(xi, xi + d, prev.begin());
  };
  return out;
}

}  // namespace detail

// hbar with hbar_t = h_t(B - int d<B> hbar): the control whose density
// weights reproduce h-shifted statistics on the original paths.
inline SimpleIntegrand build_bar_control(const SimpleIntegrand& h) {
  return detail::companion_control(h, -1.0, "bar");
}

// hhat with h_t = hhat_t(B - int d<B> h): evaluating hhat along the
// un-shifted path replays h along the shifted one.
inline SimpleIntegrand build_hat_control(const SimpleIntegrand& h) {
  return detail::companion_control(h, +1.0, "hat");
}

// Max pathwise violation of the defining relation over a path bundle:
// for bar,  | hbar_k(B) - h_k(B - int d<B> hbar) |,
// for hat,  | h_k(B) - hhat_k(B - int d<B> h) |.
// The shifted path is rebuilt with the same incremental recursion the
// construction uses.  The bar relation replays that recursion verbatim and
// scores exactly zero; the hat relation reconstructs B through (B - s) + s,
// so it carries a few ulps of cancellation roundoff.
inline double companion_relation_error(const ThetaSet& theta,
                                       const ControlProcess& ctrl,
                                       const SimpleIntegrand& h, bool bar,
                                       int n_paths, std::uint64_t seed) {
  const int d = h.dim;
  SimpleIntegrand built = bar ? build_bar_control(h) : build_hat_control(h);
  SimpleIntegrand inner = bar ? h : built;   // evaluated along the shift
  SimpleIntegrand outer = bar ? built : h;   // evaluated along B
  // shift sign: both relations shift by -(density control)
  const SimpleIntegrand& weight = bar ? built : h;
  double err = 0.0;
  SamplePath p;
  std::vector<double> xw, xo, xi;
  SamplePath z;
  for (int n = 0; n < n_paths; ++n) {
    simulate_path(p, theta, ctrl, ctrl.grid, seed, n);
    eval_integrand(weight, p, xw);
    eval_integrand(outer, p, xo);
    // rebuild B - int d<B> weight incrementally and evaluate `inner` on it
    z.reset(p.grid, d);
    z.QV = p.QV;
    detail::CompanionState cs;
    cs.reset(d);
    SimpleIntegrand in_copy = inner;
    for (int k = 0; k < p.grid.M; ++k) {
      if (k > 0) {
        cs.advance(p, k, &xw[static_cast<size_t>(k - 1) * d], -1.0);
        for (int i = 0; i < d; ++i)
          z.B[static_cast<size_t>(k) * d + i] = cs.y[static_cast<size_t>(i)];
      }
      xi.resize(static_cast<size_t>(d));
      in_copy.step(z, k, xi.data());
      for (int i = 0; i < d; ++i)
        err = std::max(err,
                       std::abs(xi[static_cast<size_t>(i)] -
                                xo[static_cast<size_t>(k) * d + i]));
    }
  }
  return err;
}

// --- the two sides of the representation ---------------------------------

// f(B + int d<B> h) - 1/2 int h.(d<B> h) as a path functional.  Scratch
// lives in the closure; mc_mean copies it per worker.
inline PathFunctional shifted_penalized(const PathFunctional& f,
                                        const SimpleIntegrand& h) {
  return [f, h, xi = std::vector<double>(), q = QvIntegrals{},
          sp = SamplePath{}](const SamplePath& p) mutable {
    eval_integrand(h, p, xi);
    qv_integrals(xi.data(), p, q);
    sp = p;
    for (size_t i = 0; i < sp.B.size(); ++i) sp.B[i] += q.vector_path[i];
    return f(sp) - 0.5 * q.quad_form;
  };
}

// Right side for one fixed h: sup over the volatility family of the
// shifted, penalized mean.
inline UpperEstimate rhs_value(const ThetaSet& theta, const PathFunctional& f,
                               const SimpleIntegrand& h,
                               const ControlFamily& family, long n_paths,
                               std::uint64_t seed, int workers = 0) {
  return estimate_upper(theta, shifted_penalized(f, h), family, n_paths, seed,
                        workers);
}

// phi(B_1) as a path functional.
inline PathFunctional endpoint_functional(const Datum1& phi) {
  return [phi](const SamplePath& p) { return phi(p.b(p.grid.M)); };
}

// psi(B_{t_1}, .., B_{t_n}) for d = 1; times are snapped to grid nodes.
inline PathFunctional cylinder_functional1(
    const std::function<double(std::span<const double>)>& psi,
    const std::vector<double>& times) {
  return [psi, times](const SamplePath& p) {
    double args[8];
    for (size_t i = 0; i < times.size(); ++i) {
      const int k = static_cast<int>(std::lround(times[i] * p.grid.M));
      args[i] = p.b(k);
    }
    return psi(std::span<const double>(args, times.size()));
  };
}

// Left side, PDE route: log of the nonlinear heat solution with datum
// e^phi, with a convergence tolerance from one grid halving.
struct PdeValue {
  double value = 0.0;
  double tol = 0.0;
};

namespace detail {

inline int coarsen_nodes(int nx) { return (nx - 1) / 2 + 1; }

}  // namespace detail

inline PdeValue lhs_log_mgf_pde1(const ThetaSet& theta, const Datum1& phi,
                                 double t, const GheatParams& p = {}) {
  const Datum1 ephi = [phi](double x) { return std::exp(phi(x)); };
  const double fine = std::log(g_expectation_cylinder_1(theta, ephi, t, p));
  GheatParams coarse = p;
  coarse.nx = detail::coarsen_nodes(p.nx);
  const double rough =
      std::log(g_expectation_cylinder_1(theta, ephi, t, coarse));
  return {fine, std::max(std::abs(fine - rough), 1e-8)};
}

// Left side for a two/three-time cylinder functional (d = 1).
inline PdeValue lhs_log_mgf_pde_multi(
    const ThetaSet& theta,
    const std::function<double(std::span<const double>)>& psi,
    const std::vector<double>& times, const MultistepParams& p = {}) {
  auto epsi = [psi](std::span<const double> x) { return std::exp(psi(x)); };
  const double fine =
      std::log(g_expectation_multistep(theta, epsi, times, p));
  MultistepParams coarse = p;
  coarse.nx = detail::coarsen_nodes(p.nx);
  const double rough =
      std::log(g_expectation_multistep(theta, epsi, times, coarse));
  return {fine, std::max(std::abs(fine - rough), 1e-8)};
}

// Left side, Monte Carlo route: log estimate_upper(e^f).  Biased (log of a
// mean), so the value is audited against its own first half: moving less
// than one stderr when the sample doubles.
struct McLogMgf {
  double value = 0.0;
  double stderr_ = 0.0;   // delta-method stderr of the log
  double bias_move = 0.0; // |log at n - log at n/2|
  bool bias_ok = true;
  UpperEstimate raw;
};

inline McLogMgf lhs_log_mgf_mc(const ThetaSet& theta, const PathFunctional& f,
                               double f_max, const ControlFamily& family,
                               long n_paths, std::uint64_t seed,
                               int workers = 0) {
  PathFunctional ef = [f, f_max](const SamplePath& p) {
    const double v = f(p);
    if (!(std::abs(v) <= f_max))
      throw std::domain_error("functional exceeded its declared bound");
    return std::exp(v);
  };
  const UpperEstimate full =
      estimate_upper(theta, ef, family, n_paths, seed, workers);
  const UpperEstimate half =
      estimate_upper(theta, ef, family, std::max<long>(2, n_paths / 2), seed,
                     workers);
  McLogMgf out;
  out.raw = full;
  out.value = std::log(full.value);
  out.stderr_ = full.stderr_ / full.value;
  out.bias_move = std::abs(out.value - std::log(half.value));
  out.bias_ok = out.bias_move <= out.stderr_;
  return out;
}

// --- Clark-Ocone feedback control ---------------------------------------

// Occurrences of clamping / table-edge excursions, shared across worker
// copies of the rule.
struct ClarkOconeStats {
  std::atomic<long> calls{0};
  std::atomic<long> clamped{0};
  std::atomic<long> outside{0};

  double clamped_fraction() const {
    const long c = calls.load();
    return c == 0 ? 0.0 : static_cast<double>(clamped.load()) / c;
  }
  double outside_fraction() const {
    const long c = calls.load();
    return c == 0 ? 0.0 : static_cast<double>(outside.load()) / c;
  }
};

// h_k(path) = grad log u(t_k, B_{t_k}) from an existing e^phi table.
// Values are clamped at the a-priori bound e^{2 sup|phi|} Lip(phi); states
// beyond the table's x-range read the edge value and are counted.
inline SimpleIntegrand clark_ocone_from_tables(
    std::shared_ptr<const BackwardTables> tab, const NamedFunction& phi,
    TimeGrid grid, std::shared_ptr<ClarkOconeStats> stats = nullptr) {
  if (!tab->log_mode)
    throw std::invalid_argument("Clark-Ocone control needs log-mode tables");
  const double bound = std::exp(2.0 * phi.bound) * phi.lip;
  SimpleIntegrand h;
  h.grid = grid;
  h.dim = 1;
  h.h_max = bound;
  h.descriptor = "clark-ocone(" + phi.name + ")";
  h.step = [tab, bound, stats, L = tab->grid.L](const SamplePath& p, int k,
                                                double* xi) {
    const double x = p.b(k);
    double g = tab->gradU_at(p.grid.t(k), x);
    const double c = std::clamp(g, -bound, bound);
    if (stats) {
      stats->calls.fetch_add(1, std::memory_order_relaxed);
      if (c != g) stats->clamped.fetch_add(1, std::memory_order_relaxed);
      if (std::abs(x) > L)
        stats->outside.fetch_add(1, std::memory_order_relaxed);
    }
    xi[0] = c;
  };
  return h;
}

// Convenience wrapper that solves for the tables first.
inline SimpleIntegrand clark_ocone_control(
    const ThetaSet& theta, const NamedFunction& phi, TimeGrid grid,
    const GheatParams& p = {},
    std::shared_ptr<ClarkOconeStats> stats = nullptr) {
  if (theta.dim() != 1)
    throw std::invalid_argument("Clark-Ocone control implemented for d=1");
  auto tab = std::make_shared<BackwardTables>(log_transform_solution(
      theta, phi.fn,
      HeatGrid::make(theta, 1.0, p.nx, p.L, p.boundary, p.nt_min)));
  return clark_ocone_from_tables(tab, phi, grid, std::move(stats));
}

// Bang-bang volatility feedback from the second-derivative table of the
// same solve: sigma1 where u_xx >= 0, sigma0 below.  With `companion`
// set, the sign is read along Y = B + int d<B> companion instead of B
// (the rule keeps its own copy of the companion integrand to advance Y,
// via the shared CompanionState recursion).
inline ControlProcess bang_bang_feedback1(
    const ThetaSet& theta, std::shared_ptr<const BackwardTables> tab,
    TimeGrid grid, const SimpleIntegrand* companion = nullptr) {
  if (theta.dim() != 1)
    throw std::invalid_argument("bang-bang feedback implemented for d=1");
  ControlProcess c;
  c.grid = grid;
  c.dim = 1;
  if (!companion) {
    c.feedback = [theta, tab](const SamplePath& p, int k, double* out) {
      out[0] = theta.bang_bang1(tab->uxx_at(p.grid.t(k), p.b(k)));
    };
    c.descriptor = "bang-bang";
  } else {
    c.feedback = [theta, tab, h = *companion, cs = detail::CompanionState{},
                  prev = 0.0](const SamplePath& p, int k,
                              double* out) mutable {
      if (k == 0)
        cs.reset(1);
      else
        cs.advance(p, k, &prev, +1.0);
      out[0] = theta.bang_bang1(tab->uxx_at(p.grid.t(k), cs.y[0]));
      double xi;
      h.step(p, k, &xi);  // companion value to carry Y to the next step
      prev = xi;
    };
    c.descriptor = "bang-bang@" + companion->descriptor;
  }
  return c;
}

// --- Girsanov density checks ---------------------------------------------

// Under a fixed volatility, the density of the shift tilts the law back:
// E[ D^h F(B - int d<B> h) ] = E[ F(B) ].  Checked as a common-noise
// difference estimator per (control, functional) pair.
inline CheckReport girsanov_shift_check(
    const ThetaSet& theta, const std::vector<ControlProcess>& ctrls,
    const SimpleIntegrand& h,
    const std::vector<std::pair<std::string, PathFunctional>>& fs,
    long n_paths, std::uint64_t seed, int workers = 0) {
  CheckReport rep;
  rep.title = "girsanov shift identity";
  for (const auto& ctrl : ctrls)
    for (const auto& [fname, F] : fs) {
      auto diff = [h, F, xi = std::vector<double>(), q = QvIntegrals{},
                   sp = SamplePath{}](const SamplePath& p) mutable {
        eval_integrand(h, p, xi);
        qv_integrals(xi.data(), p, q);
        const double logd = ito_integral(xi.data(), p) - 0.5 * q.quad_form;
        sp = p;
        for (size_t i = 0; i < sp.B.size(); ++i) sp.B[i] -= q.vector_path[i];
        return std::exp(logd) * F(sp) - F(p);
      };
      const MeanStderr d = mc_mean(theta, ctrl, n_paths, seed, workers, diff);
      rep.add(detail::ineq_line(ctrl.descriptor + " / " + fname,
                                std::abs(d.mean), 0.0, 3.0 * d.stderr_,
                                d.stderr_));
    }
  return rep;
}

// Normalization E[D^h] = 1 and the symmetry E[ (int h dBbar) D^h ] = 0
// with Bbar = B - int d<B> h (integrand along B, increments of Bbar).
inline CheckReport girsanov_density_checks(
    const ThetaSet& theta, const std::vector<ControlProcess>& ctrls,
    const std::vector<SimpleIntegrand>& hs, long n_paths, std::uint64_t seed,
    int workers = 0) {
  CheckReport rep;
  rep.title = "density normalization and symmetry";
  for (const auto& ctrl : ctrls)
    for (const auto& h : hs) {
      auto cols = [h, xi = std::vector<double>(), q = QvIntegrals{}](
                      const SamplePath& p, double* out) mutable {
        eval_integrand(h, p, xi);
        qv_integrals(xi.data(), p, q);
        const double ito = ito_integral(xi.data(), p);
        const double dens = std::exp(ito - 0.5 * q.quad_form);
        out[0] = dens - 1.0;
        // int h dBbar = int h dB - int h.(d<B> h)
        out[1] = (ito - q.quad_form) * dens;
      };
      const auto ms =
          mc_columns(theta, ctrl, 2, n_paths, seed, workers, cols);
      const std::string tag = ctrl.descriptor + " / " + h.descriptor;
      rep.add(detail::ineq_line("mean-one " + tag, std::abs(ms[0].mean), 0.0,
                                3.0 * ms[0].stderr_, ms[0].stderr_));
      rep.add(detail::ineq_line("symmetry " + tag, std::abs(ms[1].mean), 0.0,
                                3.0 * ms[1].stderr_, ms[1].stderr_));
    }
  return rep;
}

// Moment bound: E[(D^h)^q] <= exp(q(q-1)/2 sigma1^2 h_max^2), granted a 5%
// margin for sampling noise.
inline CheckReport moment_bound_check(const ThetaSet& theta,
                                      const std::vector<ControlProcess>& ctrls,
                                      const SimpleIntegrand& h,
                                      const std::vector<double>& qs,
                                      long n_paths, std::uint64_t seed,
                                      int workers = 0) {
  if (!std::isfinite(h.h_max))
    throw std::invalid_argument("moment bound needs a bounded integrand");
  CheckReport rep;
  rep.title = "density moment bound";
  const double s1 = theta.sigma1();
  for (const auto& ctrl : ctrls)
    for (double q : qs) {
      auto f = [h, q, xi = std::vector<double>(), qv = QvIntegrals{}](
                   const SamplePath& p) mutable {
        eval_integrand(h, p, xi);
        qv_integrals(xi.data(), p, qv);
        return std::exp(q * (ito_integral(xi.data(), p) -
                             0.5 * qv.quad_form));
      };
      const MeanStderr m = mc_mean(theta, ctrl, n_paths, seed, workers, f);
      const double cap =
          std::exp(0.5 * (q * q - q) * s1 * s1 * h.h_max * h.h_max);
      rep.add(detail::ineq_line(
          ctrl.descriptor + " / q=" + std::to_string(q) + " / " + h.descriptor,
          m.mean, 1.05 * cap, 0.0, m.stderr_));
    }
  return rep;
}

// --- entropy inequalities ------------------------------------------------

// Per fixed volatility: E[(f - log D^h) D^h] <= log E[e^f].
inline CheckReport entropy_lower_bound_check(
    const ThetaSet& theta, const std::vector<ControlProcess>& ctrls,
    const PathFunctional& f, const SimpleIntegrand& h, long n_paths,
    std::uint64_t seed, int workers = 0) {
  CheckReport rep;
  rep.title = "entropy lower bound";
  for (const auto& ctrl : ctrls) {
    auto cols = [f, h, xi = std::vector<double>(), q = QvIntegrals{}](
                    const SamplePath& p, double* out) mutable {
      eval_integrand(h, p, xi);
      qv_integrals(xi.data(), p, q);
      const double logd = ito_integral(xi.data(), p) - 0.5 * q.quad_form;
      const double fv = f(p);
      out[0] = (fv - logd) * std::exp(logd);
      out[1] = std::exp(fv);
    };
    const auto ms = mc_columns(theta, ctrl, 2, n_paths, seed, workers, cols);
    const double rhs = std::log(ms[1].mean);
    const double rhs_se = ms[1].stderr_ / ms[1].mean;
    rep.add(detail::ineq_line(ctrl.descriptor + " / " + h.descriptor,
                              ms[0].mean, rhs,
                              3.0 * pooled_stderr(ms[0].stderr_, rhs_se),
                              pooled_stderr(ms[0].stderr_, rhs_se)));
  }
  return rep;
}

// Worst-case relative entropy of the tilt by hbar against the squared
// control norm: sup_theta E[(log D^hbar) D^hbar] <= 1/2 sigma1^2 sup_theta
// E[ int |h|^2 ds ].
inline CheckReport entropy_bound_check(const ThetaSet& theta,
                                       const SimpleIntegrand& h,
                                       const ControlFamily& family,
                                       long n_paths, std::uint64_t seed,
                                       int workers = 0) {
  CheckReport rep;
  rep.title = "relative entropy vs control norm";
  const SimpleIntegrand hbar = build_bar_control(h);
  PathFunctional ent = [hbar, xi = std::vector<double>(), q = QvIntegrals{}](
                           const SamplePath& p) mutable {
    eval_integrand(hbar, p, xi);
    qv_integrals(xi.data(), p, q);
    const double logd = ito_integral(xi.data(), p) - 0.5 * q.quad_form;
    return logd * std::exp(logd);
  };
  PathFunctional norm2 = [h, xi = std::vector<double>()](
                             const SamplePath& p) mutable {
    eval_integrand(h, p, xi);
    const int d = p.dim;
    double s = 0.0;
    for (int k = 0; k < p.grid.M; ++k)
      for (int i = 0; i < d; ++i)
        s += xi[static_cast<size_t>(k) * d + i] *
             xi[static_cast<size_t>(k) * d + i];
    return s * p.grid.dt();
  };
  const UpperEstimate lhs =
      estimate_upper(theta, ent, family, n_paths, seed, workers);
  const UpperEstimate nrm =
      estimate_upper(theta, norm2, family, n_paths, derive_seed(seed, 0xB0B),
                     workers);
  const double s1 = theta.sigma1();
  const double rhs = 0.5 * s1 * s1 * nrm.value;
  const double rhs_se = 0.5 * s1 * s1 * nrm.stderr_;
  rep.add(detail::ineq_line(h.descriptor, lhs.value, rhs,
                            3.0 * pooled_stderr(lhs.stderr_, rhs_se),
                            pooled_stderr(lhs.stderr_, rhs_se)));
  return rep;
}

// --- L1 continuity of densities ------------------------------------------

struct ScheffeRow {
  double delta = 0.0;
  double l1 = 0.0;         // E |D^h - D^{h + delta g}|
  double l1_stderr = 0.0;
  double bound = 0.0;      // 2 sqrt(E X^2) sqrt(E (D^h)^2) from the proof
  double bound_stderr = 0.0;
};

struct ScheffeReport {
  std::vector<ScheffeRow> rows;
  CheckReport checks;
};

// L1 distance of densities under a shrinking perturbation h' = h + delta g,
// delta halving; checks monotone decrease and the second-moment bound
// with X = int (h'-h) dB - 1/2 int (h'+h).(d<B> (h'-h)).
inline ScheffeReport scheffe_check(const ThetaSet& theta,
                                   const ControlProcess& ctrl,
                                   const SimpleIntegrand& h,
                                   const SimpleIntegrand& g, double delta0,
                                   int halvings, long n_paths,
                                   std::uint64_t seed, int workers = 0) {
  ScheffeReport rep;
  rep.checks.title = "density L1 continuity";
  double delta = delta0;
  for (int i = 0; i <= halvings; ++i, delta *= 0.5) {
    auto cols = [h, g, delta, xh = std::vector<double>(),
                 xg = std::vector<double>(), qh = QvIntegrals{},
                 d = h.dim](const SamplePath& p, double* out) mutable {
      eval_integrand(h, p, xh);
      eval_integrand(g, p, xg);
      for (auto& v : xg) v *= delta;  // xg := h' - h
      qv_integrals(xh.data(), p, qh);
      const double ih = ito_integral(xh.data(), p);
      const double ig = ito_integral(xg.data(), p);
      // cross terms of the quadratic penalty, one qv pass over h' - h
      double q_gg = 0.0, q_hg = 0.0;
      for (int k = 0; k < p.grid.M; ++k)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            const double dq = p.dqv(k, a, b);
            q_gg += xg[static_cast<size_t>(k) * d + a] * dq *
                    xg[static_cast<size_t>(k) * d + b];
            q_hg += xh[static_cast<size_t>(k) * d + a] * dq *
                    xg[static_cast<size_t>(k) * d + b];
          }
      const double logd = ih - 0.5 * qh.quad_form;
      const double logd2 = (ih + ig) - 0.5 * (qh.quad_form + 2 * q_hg + q_gg);
      const double dens = std::exp(logd);
      // X = int (h'-h) dB - 1/2 int (h'+h).(d<B>(h'-h))
      const double x = ig - 0.5 * (2.0 * q_hg + q_gg);
      out[0] = std::abs(dens - std::exp(logd2));
      out[1] = x * x;
      out[2] = dens * dens;
    };
    const auto ms = mc_columns(theta, ctrl, 3, n_paths, seed, workers, cols);
    ScheffeRow row;
    row.delta = delta;
    row.l1 = ms[0].mean;
    row.l1_stderr = ms[0].stderr_;
    row.bound = 2.0 * std::sqrt(ms[1].mean) * std::sqrt(ms[2].mean);
    // delta method on the product of square roots
    const double rel =
        std::hypot(ms[1].mean > 0 ? 0.5 * ms[1].stderr_ / ms[1].mean : 0.0,
                   ms[2].mean > 0 ? 0.5 * ms[2].stderr_ / ms[2].mean : 0.0);
    row.bound_stderr = row.bound * rel;
    rep.rows.push_back(row);
  }
  for (size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    rep.checks.add(detail::ineq_line(
        "bound delta=" + std::to_string(r.delta), r.l1, r.bound,
        3.0 * pooled_stderr(r.l1_stderr, r.bound_stderr),
        pooled_stderr(r.l1_stderr, r.bound_stderr)));
    if (i > 0) {
      const auto& prev = rep.rows[i - 1];
      rep.checks.add(detail::ineq_line(
          "monotone delta=" + std::to_string(r.delta), r.l1, prev.l1,
          3.0 * pooled_stderr(r.l1_stderr, prev.l1_stderr),
          pooled_stderr(r.l1_stderr, prev.l1_stderr)));
    }
  }
  return rep;
}

// --- full verification ---------------------------------------------------

struct RepresentationLine {
  std::string h_desc;
  double value = 0.0;
  double stderr_ = 0.0;
  std::string theta_desc;
  bool lower_bound_ok = true;  // value <= lhs + 3 se + pde tol
};

struct VariationalReport {
  std::string functional;
  double lhs = 0.0;
  double lhs_tol = 0.0;
  std::string lhs_source;  // "pde" or "mc"
  std::vector<RepresentationLine> table;
  double rhs_best = -std::numeric_limits<double>::infinity();
  double rhs_best_stderr = 0.0;
  std::string rhs_argmax;
  double gap = 0.0;  // lhs - rhs_best
  double gap_tol = 0.0;
  bool pass_lower = true;  // every tested h respects the lower bound
  bool pass_gap = true;    // Clark-Ocone h closes the gap (when present)
  double clamped_fraction = 0.0;
};

struct RepresentationOptions {
  TimeGrid grid{200};
  long n_paths = 100'000;
  std::uint64_t seed = 1;
  int workers = 0;
  int random_h = 20;
  int h_blocks = 4;
  double h_amp = 1.0;
  bool clark_ocone = true;
  double gap_tol = 2e-2;
  int theta_points = 3;  // constant-volatility candidates for the sup
  GheatParams pde{};
};

// Assembles lhs (PDE), the lower-bound table over {0, random h}, and the
// gap line for the Clark-Ocone control evaluated under the bang-bang
// volatility along its own companion path.
inline VariationalReport verify_representation(const ThetaSet& theta,
                                               const NamedFunction& phi,
                                               const RepresentationOptions& o =
                                                   {}) {
  if (theta.dim() != 1)
    throw std::invalid_argument("verify_representation implemented for d=1");
  VariationalReport rep;
  rep.functional = phi.name;
  rep.gap_tol = o.gap_tol;

  auto tab = std::make_shared<BackwardTables>(log_transform_solution(
      theta, phi.fn,
      HeatGrid::make(theta, 1.0, o.pde.nx, o.pde.L, o.pde.boundary,
                     o.pde.nt_min)));
  {
    GheatParams coarse = o.pde;
    coarse.nx = detail::coarsen_nodes(o.pde.nx);
    const double rough = std::log(g_expectation_cylinder_1(
        theta,
        [&phi](double x) { return std::exp(phi.fn(x)); }, 1.0, coarse));
    rep.lhs = tab->U_at(0.0, 0.0);
    rep.lhs_tol = std::max(std::abs(rep.lhs - rough), 1e-8);
    rep.lhs_source = "pde";
  }

  const PathFunctional f = endpoint_functional(phi.fn);
  ControlFamily base = ControlFamily::constant_grid(theta, o.grid,
                                                    o.theta_points);
  base.list.push_back(bang_bang_feedback1(theta, tab, o.grid));
  const ControlFamily family = ControlFamily::finite_list(base.list);

  auto add_line = [&](const SimpleIntegrand& h, const ControlFamily& fam,
                      long n_paths, std::uint64_t seed) {
    const UpperEstimate e =
        rhs_value(theta, f, h, fam, n_paths, seed, o.workers);
    RepresentationLine line;
    line.h_desc = h.descriptor;
    line.value = e.value;
    line.stderr_ = e.stderr_;
    line.theta_desc = e.argmax;
    line.lower_bound_ok =
        e.value <= rep.lhs + 3.0 * e.stderr_ + rep.lhs_tol;
    rep.pass_lower = rep.pass_lower && line.lower_bound_ok;
    if (e.value > rep.rhs_best) {
      rep.rhs_best = e.value;
      rep.rhs_best_stderr = e.stderr_;
      rep.rhs_argmax = line.h_desc + " @ " + line.theta_desc;
    }
    rep.table.push_back(std::move(line));
  };

  // cheap lower-bound sweep: h = 0 plus random step functions
  const long sweep_paths = std::min<long>(o.n_paths, 20'000);
  add_line(SimpleIntegrand::zero(o.grid, 1), family, sweep_paths, o.seed);
  for (int i = 0; i < o.random_h; ++i)
    add_line(random_step_integrand(o.grid, 1, o.h_blocks, o.h_amp, o.seed, i),
             family, sweep_paths,
             derive_seed(o.seed, 0xC0 + static_cast<unsigned>(i)));

  if (o.clark_ocone) {
    auto stats = std::make_shared<ClarkOconeStats>();
    const SimpleIntegrand co =
        clark_ocone_from_tables(tab, phi, o.grid, stats);
    const SimpleIntegrand hat = build_hat_control(co);
    // the near-optimal pair: hhat against the bang-bang volatility read
    // along hhat's own companion path
    const ControlFamily co_family = ControlFamily::finite_list(
        {bang_bang_feedback1(theta, tab, o.grid, &hat)});
    add_line(hat, co_family, o.n_paths, derive_seed(o.seed, 0xC10C));
    rep.clamped_fraction = stats->clamped_fraction();
  }

  rep.gap = rep.lhs - rep.rhs_best;
  if (o.clark_ocone) {
    const auto& co_line = rep.table.back();
    const double co_gap = rep.lhs - co_line.value;
    rep.pass_gap = co_gap <= o.gap_tol + 3.0 * co_line.stderr_ &&
                   co_gap >= -(3.0 * co_line.stderr_ + rep.lhs_tol);
  }
  return rep;
}

}  // namespace gexp
