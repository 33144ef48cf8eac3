#pragma once

// Upper expectation  sup_theta E[X]  estimated by policy search over a
// control family.
//
// The search phase reuses one fixed noise stream for every candidate
// (common random numbers -- the per-path draws depend only on the seed and
// the path index, never on the control), so candidate comparisons are not
// blurred by resampling noise and enlarging a candidate list can only
// improve the search optimum.  The winning control is then re-evaluated on
// a fresh stream; the reported value and standard error carry no selection
// bias.  The reported value underestimates the true supremum by whatever
// the family cannot express; tests only ever use it from below or against
// a PDE truth.

#include "gexp/pathsim.hpp"
#include "gexp/rng.hpp"
#include "gexp/theta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gexp {

struct Optimizer {
  enum class Kind { kGridSearch, kCoordinateAscent, kCrossEntropy };
  Kind kind = Kind::kCoordinateAscent;
  int restarts = 3;       // coordinate ascent
  int sweeps = 3;         //   full passes over the coordinates
  int coord_points = 7;   //   candidates per window
  int coord_refine = 2;   //   window shrink rounds
  int grid_points = 11;   // grid search (param count <= 2)
  int population = 48;    // cross entropy
  double elite_frac = 0.25;
  int iterations = 10;
};

struct ControlFamily {
  enum class Kind { kFiniteList, kPiecewiseConstant, kStateFeedbackGrid };
  Kind kind = Kind::kFiniteList;
  TimeGrid grid;
  int dim = 1;
  Optimizer opt;

  std::vector<ControlProcess> list;  // kFiniteList

  int blocks = 4;  // kPiecewiseConstant: one Theta value per time block

  int time_blocks = 3;  // kStateFeedbackGrid (d=1): Theta value per
  int state_buckets = 7;  // (time block, bucket of the current state)
  double state_halfwidth = 4.0;

  static ControlFamily finite_list(std::vector<ControlProcess> ctrls) {
    if (ctrls.empty()) throw std::invalid_argument("empty control family");
    ControlFamily f;
    f.kind = Kind::kFiniteList;
    f.grid = ctrls.front().grid;
    f.dim = ctrls.front().dim;
    f.list = std::move(ctrls);
    return f;
  }

  // Constant controls on an n-point parameter ray through Theta.
  static ControlFamily constant_grid(const ThetaSet& theta, TimeGrid g,
                                     int n) {
    std::vector<ControlProcess> cs;
    if (theta.is_finite_set()) {
      for (size_t i = 0; i < theta.finite().mats.size(); ++i) {
        const auto& m = theta.finite().mats[i];
        std::vector<double> flat(static_cast<size_t>(theta.dim()) *
                                 theta.dim());
        for (int r = 0; r < theta.dim(); ++r)
          for (int c = 0; c < theta.dim(); ++c)
            flat[r * theta.dim() + c] = m(r, c);
        cs.push_back(ControlProcess::constant(g, theta.dim(), flat,
                                              "const#" + std::to_string(i)));
      }
    } else {
      for (int i = 0; i < n; ++i) {
        const double p = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        std::vector<double> flat(static_cast<size_t>(theta.dim()) *
                                     theta.dim(),
                                 0.0);
        for (int a = 0; a < theta.dim(); ++a) {
          const double lo = theta.is_scalar_interval() ? theta.scalar().lo
                                                       : theta.box().lo[a];
          const double hi = theta.is_scalar_interval() ? theta.scalar().hi
                                                       : theta.box().hi[a];
          flat[a * theta.dim() + a] = lo + p * (hi - lo);
        }
        cs.push_back(ControlProcess::constant(
            g, theta.dim(), flat, "const p=" + std::to_string(p)));
      }
    }
    return finite_list(std::move(cs));
  }

  static ControlFamily piecewise_constant(const ThetaSet& theta, TimeGrid g,
                                          int blocks, Optimizer opt = {}) {
    ControlFamily f;
    f.kind = Kind::kPiecewiseConstant;
    f.grid = g;
    f.dim = theta.dim();
    f.blocks = std::max(1, blocks);
    f.opt = opt;
    return f;
  }

  static ControlFamily state_feedback_grid(const ThetaSet& theta, TimeGrid g,
                                           int time_blocks, int state_buckets,
                                           double state_halfwidth,
                                           Optimizer opt = {}) {
    if (theta.dim() != 1)
      throw std::invalid_argument("state feedback grid implemented for d=1");
    ControlFamily f;
    f.kind = Kind::kStateFeedbackGrid;
    f.grid = g;
    f.dim = 1;
    f.time_blocks = std::max(1, time_blocks);
    f.state_buckets = std::max(1, state_buckets);
    f.state_halfwidth = state_halfwidth;
    f.opt = opt;
    return f;
  }

  // Number of [0,1] parameters for the optimizable kinds.
  long param_count(const ThetaSet& theta) const {
    const long per =
        theta.is_diagonal_box() ? theta.dim() : 1;  // value per slot
    switch (kind) {
      case Kind::kPiecewiseConstant:
        return blocks * per;
      case Kind::kStateFeedbackGrid:
        return static_cast<long>(time_blocks) * state_buckets * per;
      default:
        return 0;
    }
  }

  ControlProcess make_control(const ThetaSet& theta,
                              const std::vector<double>& params) const {
    const int d = theta.dim();
    auto slot_value = [&theta, d](const double* p, double* out) {
      std::fill(out, out + d * d, 0.0);
      if (theta.is_finite_set()) {
        const auto& mats = theta.finite().mats;
        const size_t idx = std::min(
            mats.size() - 1,
            static_cast<size_t>(std::clamp(p[0], 0.0, 1.0) * mats.size()));
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) out[r * d + c] = mats[idx](r, c);
      } else if (theta.is_scalar_interval()) {
        out[0] = theta.scalar().lo +
                 std::clamp(p[0], 0.0, 1.0) *
                     (theta.scalar().hi - theta.scalar().lo);
      } else {
        for (int a = 0; a < d; ++a)
          out[a * d + a] = theta.box().lo[a] +
                           std::clamp(p[a], 0.0, 1.0) *
                               (theta.box().hi[a] - theta.box().lo[a]);
      }
    };
    const long per = theta.is_diagonal_box() ? d : 1;

    if (kind == Kind::kPiecewiseConstant) {
      ControlProcess c;
      c.grid = grid;
      c.dim = d;
      c.values.resize(static_cast<size_t>(grid.M) * d * d);
      for (int k = 0; k < grid.M; ++k) {
        const int blk = std::min(blocks - 1, k * blocks / grid.M);
        slot_value(&params[static_cast<size_t>(blk) * per],
                   &c.values[static_cast<size_t>(k) * d * d]);
      }
      c.descriptor = "pwc" + std::to_string(blocks);
      return c;
    }
    if (kind == Kind::kStateFeedbackGrid) {
      // bake the table into the feedback closure
      std::vector<double> table(static_cast<size_t>(time_blocks) *
                                state_buckets);
      for (size_t s = 0; s < table.size(); ++s) {
        double v;
        slot_value(&params[s * per], &v);
        table[s] = v;
      }
      ControlProcess c;
      c.grid = grid;
      c.dim = 1;
      const int tb = time_blocks, sb = state_buckets;
      const double W = state_halfwidth;
      const int M = grid.M;
      c.feedback = [table = std::move(table), tb, sb, W, M](
                       const SamplePath& p, int k, double* out) {
        const int blk = std::min(tb - 1, k * tb / M);
        const double x = p.b(k, 0);
        const int bucket = std::clamp(
            static_cast<int>((x + W) / (2.0 * W) * sb), 0, sb - 1);
        out[0] = table[static_cast<size_t>(blk) * sb + bucket];
      };
      c.descriptor = "sfg" + std::to_string(tb) + "x" + std::to_string(sb);
      return c;
    }
    throw std::logic_error("make_control on a finite list family");
  }
};

struct UpperEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::string argmax;
  long n_paths = 0;
  std::vector<std::pair<int, double>> trace;  // (iteration, best so far)
};

using PathFunctional = std::function<double(const SamplePath&)>;

namespace detail {

struct SearchState {
  double best = -std::numeric_limits<double>::infinity();
  ControlProcess best_ctrl;
  std::vector<std::pair<int, double>> trace;
  int evals = 0;

  void offer(double v, const ControlProcess& c) {
    ++evals;
    if (v > best) {
      best = v;
      best_ctrl = c;
      trace.emplace_back(evals, v);
    }
  }
};

}  // namespace detail

inline UpperEstimate estimate_upper(const ThetaSet& theta,
                                    const PathFunctional& X,
                                    const ControlFamily& family, long n_paths,
                                    std::uint64_t seed, int workers = 0) {
  if (n_paths <= 1) throw std::invalid_argument("need n_paths > 1");
  const long search_paths = std::min<long>(n_paths, 10'000);
  const std::uint64_t seed_search = derive_seed(seed, 0xA11CE);
  const std::uint64_t seed_fresh = derive_seed(seed, 0xFEED);

  auto eval = [&](const ControlProcess& c) {
    return mc_mean(theta, c, search_paths, seed_search, workers, X).mean;
  };

  detail::SearchState st;
  if (family.kind == ControlFamily::Kind::kFiniteList) {
    for (const auto& c : family.list) st.offer(eval(c), c);
  } else {
    const long P = family.param_count(theta);
    const Optimizer& opt = family.opt;
    auto eval_params = [&](const std::vector<double>& p) {
      const ControlProcess c = family.make_control(theta, p);
      const double v = eval(c);
      st.offer(v, c);
      return v;
    };

    if (opt.kind == Optimizer::Kind::kGridSearch) {
      if (P > 2)
        throw std::invalid_argument("grid search only for <= 2 parameters");
      const int n = std::max(2, opt.grid_points);
      std::vector<double> p(static_cast<size_t>(P), 0.0);
      for (int i = 0; i < n; ++i) {
        p[0] = static_cast<double>(i) / (n - 1);
        if (P == 1) {
          eval_params(p);
        } else {
          for (int j = 0; j < n; ++j) {
            p[1] = static_cast<double>(j) / (n - 1);
            eval_params(p);
          }
        }
      }
    } else if (opt.kind == Optimizer::Kind::kCoordinateAscent) {
      static constexpr double kStarts[] = {0.5, 1.0, 0.0, 0.25, 0.75};
      for (int r = 0; r < opt.restarts; ++r) {
        std::vector<double> p(static_cast<size_t>(P),
                              kStarts[r % std::size(kStarts)]);
        double cur = -std::numeric_limits<double>::infinity();
        {
          const ControlProcess c = family.make_control(theta, p);
          cur = eval(c);
          st.offer(cur, c);
        }
        for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
          for (long i = 0; i < P; ++i) {
            double lo = 0.0, hi = 1.0;
            for (int round = 0; round < opt.coord_refine; ++round) {
              double best_v = cur, best_x = p[static_cast<size_t>(i)];
              for (int c = 0; c < opt.coord_points; ++c) {
                const double x =
                    lo + (hi - lo) * c / (opt.coord_points - 1);
                p[static_cast<size_t>(i)] = x;
                const ControlProcess ctrl = family.make_control(theta, p);
                const double v = eval(ctrl);
                st.offer(v, ctrl);
                if (v > best_v) {
                  best_v = v;
                  best_x = x;
                }
              }
              p[static_cast<size_t>(i)] = best_x;
              cur = best_v;
              const double w = (hi - lo) / (opt.coord_points - 1);
              lo = std::max(0.0, best_x - w);
              hi = std::min(1.0, best_x + w);
            }
          }
        }
      }
    } else {  // cross entropy
      const CounterRng rng = make_rng(seed, RngStream::kOptimizer);
      std::vector<double> mu(static_cast<size_t>(P), 0.5);
      std::vector<double> sd(static_cast<size_t>(P), 0.3);
      const int elite =
          std::max(1, static_cast<int>(opt.population * opt.elite_frac));
      std::uint64_t ctr = 0;
      for (int it = 0; it < opt.iterations; ++it) {
        std::vector<std::pair<double, std::vector<double>>> pop;
        pop.reserve(static_cast<size_t>(opt.population));
        for (int s = 0; s < opt.population; ++s) {
          std::vector<double> p(static_cast<size_t>(P));
          for (long j = 0; j < P; ++j)
            p[static_cast<size_t>(j)] =
                std::clamp(mu[static_cast<size_t>(j)] +
                               sd[static_cast<size_t>(j)] * rng.gauss(ctr++),
                           0.0, 1.0);
          pop.emplace_back(eval_params(p), std::move(p));
        }
        std::sort(pop.begin(), pop.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        for (long j = 0; j < P; ++j) {
          double m = 0.0, v = 0.0;
          for (int s = 0; s < elite; ++s) m += pop[s].second[j];
          m /= elite;
          for (int s = 0; s < elite; ++s) {
            const double d = pop[s].second[j] - m;
            v += d * d;
          }
          mu[static_cast<size_t>(j)] = m;
          sd[static_cast<size_t>(j)] =
              std::max(0.02, std::sqrt(v / std::max(1, elite - 1)));
        }
      }
    }
  }

  // unbiased re-evaluation of the winner on fresh noise
  const MeanStderr fin =
      mc_mean(theta, st.best_ctrl, n_paths, seed_fresh, workers, X);
  UpperEstimate out;
  out.value = fin.mean;
  out.stderr_ = fin.stderr_;
  out.argmax = st.best_ctrl.descriptor;
  out.n_paths = n_paths;
  out.trace = std::move(st.trace);
  return out;
}

inline UpperEstimate estimate_lower(const ThetaSet& theta,
                                    const PathFunctional& X,
                                    const ControlFamily& family, long n_paths,
                                    std::uint64_t seed, int workers = 0) {
  PathFunctional neg = [X](const SamplePath& p) { return -X(p); };
  UpperEstimate e = estimate_upper(theta, neg, family, n_paths, seed, workers);
  e.value = -e.value;
  for (auto& t : e.trace) t.second = -t.second;
  return e;
}

}  // namespace gexp
