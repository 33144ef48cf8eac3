#pragma once

// Controlled-martingale path simulation on the uniform grid over [0,1].
//
// A path is the Euler construction B_{k+1} = B_k + theta_k dW_k with
// theta_k taking values in Theta; its quadratic variation accumulates
// theta_k theta_k* dt exactly.  Integrands and feedback controls are
// adapted by contract: their per-step rules are handed the whole path
// object but must read only indices <= k.  Both kinds of rule are called
// with k ascending within a path and may keep internal scratch state,
// which they must reset when they see k == 0 (the engine copies rule
// objects per worker, never shares them across threads).

#include "gexp/parallel.hpp"
#include "gexp/rng.hpp"
#include "gexp/stats.hpp"
#include "gexp/theta.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace gexp {

struct TimeGrid {
  int M = 1;  // steps; nodes are t_k = k / M, k = 0..M
  double dt() const { return 1.0 / M; }
  double t(int k) const { return static_cast<double>(k) / M; }
};

inline bool operator==(const TimeGrid& a, const TimeGrid& b) {
  return a.M == b.M;
}

// Flat storage, row-major in the component index.
//   B:  (M+1) * d      dW: M * d
//   QV: (M+1) * d * d  cumulative <B>;  theta: M * d * d  control trace
struct SamplePath {
  TimeGrid grid;
  int dim = 1;
  std::uint64_t seed = 0;
  long index = 0;
  std::vector<double> B, dW, QV, theta;

  double b(int k, int i = 0) const { return B[k * dim + i]; }
  double qv(int k, int i, int j) const {
    return QV[(k * dim + i) * dim + j];
  }
  // Per-step quadratic-variation increment, exact by construction.
  double dqv(int k, int i, int j) const {
    return qv(k + 1, i, j) - qv(k, i, j);
  }

  void reset(TimeGrid g, int d) {
    grid = g;
    dim = d;
    B.assign(static_cast<size_t>(g.M + 1) * d, 0.0);
    dW.assign(static_cast<size_t>(g.M) * d, 0.0);
    QV.assign(static_cast<size_t>(g.M + 1) * d * d, 0.0);
    theta.assign(static_cast<size_t>(g.M) * d * d, 0.0);
  }
};

// Feedback rule: fill out[0..d*d) with the step-k control value.
using FeedbackRule =
    std::function<void(const SamplePath&, int k, double* out)>;

struct ControlProcess {
  TimeGrid grid;
  int dim = 1;
  std::vector<double> values;  // deterministic: M * d * d, else empty
  FeedbackRule feedback;       // set iff path-dependent
  std::string descriptor;

  bool deterministic() const { return !feedback; }

  static ControlProcess constant(TimeGrid g, int d,
                                 const std::vector<double>& gamma,
                                 std::string name = "") {
    ControlProcess c;
    c.grid = g;
    c.dim = d;
    c.values.resize(static_cast<size_t>(g.M) * d * d);
    for (int k = 0; k < g.M; ++k)
      std::copy(gamma.begin(), gamma.end(),
                c.values.begin() + static_cast<size_t>(k) * d * d);
    c.descriptor = name.empty() ? "const" : std::move(name);
    return c;
  }

  static ControlProcess constant1(TimeGrid g, double gamma) {
    return constant(g, 1, {gamma}, "const " + std::to_string(gamma));
  }
};

// Integrand rule: fill out[0..d) with xi_k; adapted by the contract above.
using IntegrandRule =
    std::function<void(const SamplePath&, int k, double* out)>;

struct SimpleIntegrand {
  TimeGrid grid;
  int dim = 1;
  double h_max = std::numeric_limits<double>::infinity();
  IntegrandRule step;
  std::string descriptor;

  static SimpleIntegrand zero(TimeGrid g, int d) {
    SimpleIntegrand h;
    h.grid = g;
    h.dim = d;
    h.h_max = 0.0;
    h.step = [d](const SamplePath&, int, double* out) {
      std::fill(out, out + d, 0.0);
    };
    h.descriptor = "zero";
    return h;
  }

  // Deterministic step values v: M * d.
  static SimpleIntegrand deterministic(TimeGrid g, int d,
                                       std::vector<double> v,
                                       std::string name = "det") {
    SimpleIntegrand h;
    h.grid = g;
    h.dim = d;
    double m = 0.0;
    for (int k = 0; k < g.M; ++k) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += v[k * d + i] * v[k * d + i];
      m = std::max(m, std::sqrt(s));
    }
    h.h_max = m;
    h.step = [d, vals = std::move(v)](const SamplePath&, int k, double* out) {
      std::copy(vals.begin() + static_cast<size_t>(k) * d,
                vals.begin() + static_cast<size_t>(k + 1) * d, out);
    };
    h.descriptor = std::move(name);
    return h;
  }
};

// Evaluate all steps of h on a completed path into xi (M * d).
inline void eval_integrand(const SimpleIntegrand& h, const SamplePath& p,
                           std::vector<double>& xi) {
  if (!(h.grid == p.grid) || h.dim != p.dim)
    throw std::invalid_argument("integrand/path grid mismatch");
  xi.resize(static_cast<size_t>(p.grid.M) * p.dim);
  for (int k = 0; k < p.grid.M; ++k) h.step(p, k, &xi[k * p.dim]);
}

// --- path construction ------------------------------------------------

inline void simulate_path(SamplePath& out, const ThetaSet& theta,
                          const ControlProcess& ctrl, TimeGrid grid,
                          std::uint64_t seed, long path_index) {
  const int d = theta.dim();
  if (!(ctrl.grid == grid) || ctrl.dim != d)
    throw std::invalid_argument("control/grid mismatch");
  out.reset(grid, d);
  out.seed = seed;
  out.index = path_index;
  const double dt = grid.dt();
  const double sdt = std::sqrt(dt);
  const CounterRng rng = make_rng(seed, RngStream::kPaths);
  double th[kMaxDim * kMaxDim];
  for (int k = 0; k < grid.M; ++k) {
    if (ctrl.deterministic()) {
      std::copy(ctrl.values.begin() + static_cast<size_t>(k) * d * d,
                ctrl.values.begin() + static_cast<size_t>(k + 1) * d * d, th);
    } else {
      ctrl.feedback(out, k, th);
    }
    if (!theta.contains(th, d))
      throw std::domain_error("control emitted a value outside Theta");
    // noise is a pure function of (seed, path, step, component): common
    // random numbers across controls come for free
    for (int c = 0; c < d; ++c)
      out.dW[k * d + c] =
          rng.gauss((static_cast<std::uint64_t>(path_index) * grid.M + k) * d +
                    c) *
          sdt;
    for (int i = 0; i < d; ++i) {
      double inc = 0.0;
      for (int j = 0; j < d; ++j) inc += th[i * d + j] * out.dW[k * d + j];
      out.B[(k + 1) * d + i] = out.B[k * d + i] + inc;
    }
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double q = 0.0;
        for (int c = 0; c < d; ++c) q += th[i * d + c] * th[j * d + c];
        out.QV[((k + 1) * d + i) * d + j] =
            out.QV[(k * d + i) * d + j] + q * dt;
      }
    std::copy(th, th + d * d,
              out.theta.begin() + static_cast<size_t>(k) * d * d);
  }
}

inline std::vector<SamplePath> simulate_paths(const ThetaSet& theta,
                                              const ControlProcess& ctrl,
                                              int n_paths, std::uint64_t seed) {
  std::vector<SamplePath> out(static_cast<size_t>(n_paths));
  ControlProcess local = ctrl;
  for (int p = 0; p < n_paths; ++p)
    simulate_path(out[p], theta, local, ctrl.grid, seed, p);
  return out;
}

// --- pathwise integrals ------------------------------------------------

// Ito integral sum_k xi_k . (B_{k+1} - B_k), left endpoint.
inline double ito_integral(const double* xi, const SamplePath& p) {
  const int d = p.dim;
  double s = 0.0;
  for (int k = 0; k < p.grid.M; ++k)
    for (int i = 0; i < d; ++i)
      s += xi[k * d + i] * (p.B[(k + 1) * d + i] - p.B[k * d + i]);
  return s;
}

inline double ito_integral(const SimpleIntegrand& h, const SamplePath& p) {
  std::vector<double> xi;
  eval_integrand(h, p, xi);
  return ito_integral(xi.data(), p);
}

struct QvIntegrals {
  std::vector<double> vector_path;  // (M+1) * d, cumulative int d<B> h
  double quad_form = 0.0;           // int h . (d<B> h)
};

inline void qv_integrals(const double* xi, const SamplePath& p,
                         QvIntegrals& out) {
  const int d = p.dim;
  out.vector_path.assign(static_cast<size_t>(p.grid.M + 1) * d, 0.0);
  out.quad_form = 0.0;
  for (int k = 0; k < p.grid.M; ++k) {
    for (int i = 0; i < d; ++i) {
      double inc = 0.0;
      for (int j = 0; j < d; ++j) inc += p.dqv(k, i, j) * xi[k * d + j];
      out.vector_path[(k + 1) * d + i] = out.vector_path[k * d + i] + inc;
      out.quad_form += xi[k * d + i] * inc;
    }
  }
}

inline QvIntegrals qv_integrals(const SimpleIntegrand& h, const SamplePath& p) {
  std::vector<double> xi;
  eval_integrand(h, p, xi);
  QvIntegrals out;
  qv_integrals(xi.data(), p, out);
  return out;
}

// T^h(B) = B + int d<B> h; quadratic variation is unchanged.
inline SamplePath shift_path(const SimpleIntegrand& h, const SamplePath& p) {
  QvIntegrals q = qv_integrals(h, p);
  SamplePath out = p;
  for (size_t i = 0; i < out.B.size(); ++i) out.B[i] += q.vector_path[i];
  return out;
}

// Girsanov density D^(h)_1 = exp(int h.dB - 1/2 int h.(d<B> h)).
inline double girsanov_density(const SimpleIntegrand& h, const SamplePath& p) {
  if (!std::isfinite(h.h_max))
    throw std::invalid_argument("girsanov_density requires bounded h");
  std::vector<double> xi;
  eval_integrand(h, p, xi);
  QvIntegrals q;
  qv_integrals(xi.data(), p, q);
  return std::exp(ito_integral(xi.data(), p) - 0.5 * q.quad_form);
}

// --- streaming Monte Carlo ---------------------------------------------

// Mean of f over n_paths controlled paths.  Per-path values land in an
// index-addressed buffer and are reduced in index order, so the result is
// independent of the worker count.  Control and functional are copied per
// worker (stateful rules allowed under the reset-at-k==0 contract).
template <class F>
MeanStderr mc_mean(const ThetaSet& theta, const ControlProcess& ctrl,
                   long n_paths, std::uint64_t seed, int workers, F f) {
  std::vector<double> vals(static_cast<size_t>(n_paths));
  parallel_chunks(n_paths, workers <= 0 ? default_workers() : workers,
                  [&, ctrl, f](long b, long e) mutable {
                    SamplePath buf;
                    for (long p = b; p < e; ++p) {
                      simulate_path(buf, theta, ctrl, ctrl.grid, seed, p);
                      vals[static_cast<size_t>(p)] = f(buf);
                    }
                  });
  for (double v : vals)
    if (!std::isfinite(v))
      throw std::runtime_error("non-finite functional value in mc_mean");
  return mean_stderr(vals);
}

}  // namespace gexp
