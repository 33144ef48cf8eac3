#pragma once

// Volatility uncertainty set and its generator.
//
// Theta is one of three concrete shapes:
//   ScalarInterval  d=1, gamma in [lo, hi]
//   FiniteSet       explicit list of d x d matrices
//   DiagonalBox     diagonal gamma with per-axis interval bounds
// The derived quantities are the extreme singular-value bounds
// sigma0, sigma1 and the generator G(A) = 1/2 sup_{gamma} tr[A gamma gamma*].
// sigma0 > 0 is enforced at construction (uniform ellipticity).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gexp {

inline constexpr int kMaxDim = 8;

struct ScalarInterval {
  double lo, hi;
};

struct FiniteSet {
  std::vector<Eigen::MatrixXd> mats;
};

struct DiagonalBox {
  std::vector<double> lo, hi;
};

class ThetaSet {
 public:
  static ThetaSet scalar_interval(double lo, double hi) {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
      throw std::invalid_argument("scalar interval requires 0 < lo <= hi < inf");
    ThetaSet t;
    t.dim_ = 1;
    t.rep_ = ScalarInterval{lo, hi};
    t.sigma0_ = lo;
    t.sigma1_ = hi;
    return t;
  }

  static ThetaSet finite_set(std::vector<Eigen::MatrixXd> mats) {
    if (mats.empty()) throw std::invalid_argument("finite set is empty");
    const int d = static_cast<int>(mats.front().rows());
    if (d < 1 || d > kMaxDim)
      throw std::invalid_argument("finite set dimension out of range");
    ThetaSet t;
    t.dim_ = d;
    double lo2 = std::numeric_limits<double>::infinity();
    double hi2 = 0.0;
    for (const auto& m : mats) {
      if (m.rows() != d || m.cols() != d)
        throw std::invalid_argument("finite set matrices must all be d x d");
      Eigen::MatrixXd gg = m * m.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gg);
      lo2 = std::min(lo2, es.eigenvalues().minCoeff());
      hi2 = std::max(hi2, es.eigenvalues().maxCoeff());
      t.ggt_.push_back(std::move(gg));
    }
    if (!(lo2 > 0.0))
      throw std::invalid_argument("finite set violates sigma0 > 0");
    t.rep_ = FiniteSet{std::move(mats)};
    t.sigma0_ = std::sqrt(lo2);
    t.sigma1_ = std::sqrt(hi2);
    return t;
  }

  static ThetaSet diagonal_box(std::vector<double> lo, std::vector<double> hi) {
    const int d = static_cast<int>(lo.size());
    if (d < 1 || d > kMaxDim || hi.size() != lo.size())
      throw std::invalid_argument("diagonal box dimension out of range");
    for (int i = 0; i < d; ++i)
      if (!(lo[i] > 0.0) || !(hi[i] >= lo[i]) || !std::isfinite(hi[i]))
        throw std::invalid_argument("diagonal box requires 0 < lo_i <= hi_i < inf");
    ThetaSet t;
    t.dim_ = d;
    t.sigma0_ = *std::min_element(lo.begin(), lo.end());
    t.sigma1_ = *std::max_element(hi.begin(), hi.end());
    t.rep_ = DiagonalBox{std::move(lo), std::move(hi)};
    return t;
  }

  int dim() const { return dim_; }
  double sigma0() const { return sigma0_; }
  double sigma1() const { return sigma1_; }

  bool is_scalar_interval() const {
    return std::holds_alternative<ScalarInterval>(rep_);
  }
  bool is_finite_set() const { return std::holds_alternative<FiniteSet>(rep_); }
  bool is_diagonal_box() const {
    return std::holds_alternative<DiagonalBox>(rep_);
  }
  const ScalarInterval& scalar() const { return std::get<ScalarInterval>(rep_); }
  const FiniteSet& finite() const { return std::get<FiniteSet>(rep_); }
  const DiagonalBox& box() const { return std::get<DiagonalBox>(rep_); }
  // gamma gamma* for each FiniteSet element, cached at construction.
  const std::vector<Eigen::MatrixXd>& finite_ggt() const { return ggt_; }

  // G(A); A is symmetrized first (G only reads the symmetric part).
  double generator(const Eigen::MatrixXd& A) const {
    if (A.rows() != dim_ || A.cols() != dim_)
      throw std::invalid_argument("generator: dimension mismatch");
    const Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    if (const auto* si = std::get_if<ScalarInterval>(&rep_))
      return half_bang(S(0, 0), si->lo, si->hi);
    if (const auto* db = std::get_if<DiagonalBox>(&rep_)) {
      double g = 0.0;  // gamma gamma* is diagonal: off-diagonal A never enters
      for (int i = 0; i < dim_; ++i)
        g += half_bang(S(i, i), db->lo[i], db->hi[i]);
      return g;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gg : ggt_)
      best = std::max(best, 0.5 * (S.array() * gg.array()).sum());
    return best;
  }

  // d=1 fast path used inside the PDE time loop.
  double generator1(double a) const {
    if (const auto* si = std::get_if<ScalarInterval>(&rep_))
      return half_bang(a, si->lo, si->hi);
    if (const auto* db = std::get_if<DiagonalBox>(&rep_))
      return half_bang(a, db->lo[0], db->hi[0]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gg : ggt_) best = std::max(best, 0.5 * a * gg(0, 0));
    return best;
  }

  // d=2 fast path; (axx, axy, ayy) are the entries of the symmetric Hessian.
  double generator2(double axx, double axy, double ayy) const {
    if (const auto* db = std::get_if<DiagonalBox>(&rep_))
      return half_bang(axx, db->lo[0], db->hi[0]) +
             half_bang(ayy, db->lo[1], db->hi[1]);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& gg : ggt_)
      best = std::max(best, 0.5 * (axx * gg(0, 0) + 2.0 * axy * gg(0, 1) +
                                   ayy * gg(1, 1)));
    return best;
  }

  // d=1 maximizer of a * gamma^2: the volatility a bang-bang policy selects.
  double bang_bang1(double a) const {
    if (const auto* si = std::get_if<ScalarInterval>(&rep_))
      return a >= 0.0 ? si->hi : si->lo;
    if (const auto* db = std::get_if<DiagonalBox>(&rep_))
      return a >= 0.0 ? db->hi[0] : db->lo[0];
    double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
    for (const auto& gg : ggt_)
      if (0.5 * a * gg(0, 0) > best) {
        best = 0.5 * a * gg(0, 0);
        arg = std::sqrt(gg(0, 0));
      }
    return arg;
  }

  // Membership of a d x d value (row-major), within tolerance.
  bool contains(const double* gamma, int d, double tol = 1e-12) const {
    if (d != dim_) return false;
    if (const auto* si = std::get_if<ScalarInterval>(&rep_))
      return gamma[0] >= si->lo - tol && gamma[0] <= si->hi + tol;
    if (const auto* db = std::get_if<DiagonalBox>(&rep_)) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          const double g = gamma[i * d + j];
          if (i == j) {
            if (g < db->lo[i] - tol || g > db->hi[i] + tol) return false;
          } else if (std::abs(g) > tol) {
            return false;
          }
        }
      return true;
    }
    for (const auto& m : finite().mats) {
      bool same = true;
      for (int i = 0; i < d && same; ++i)
        for (int j = 0; j < d && same; ++j)
          if (std::abs(m(i, j) - gamma[i * d + j]) > tol) same = false;
      if (same) return true;
    }
    return false;
  }

  std::string describe() const {
    if (const auto* si = std::get_if<ScalarInterval>(&rep_))
      return "scalar_interval[" + std::to_string(si->lo) + "," +
             std::to_string(si->hi) + "]";
    if (const auto* db = std::get_if<DiagonalBox>(&rep_))
      return "diagonal_box(d=" + std::to_string(dim_) + ")";
    return "finite_set(" + std::to_string(finite().mats.size()) +
           " of d=" + std::to_string(dim_) + ")";
  }

 private:
  ThetaSet() = default;

  static double half_bang(double a, double lo, double hi) {
    return a >= 0.0 ? 0.5 * hi * hi * a : 0.5 * lo * lo * a;
  }

  int dim_ = 1;
  double sigma0_ = 1.0, sigma1_ = 1.0;
  std::variant<ScalarInterval, FiniteSet, DiagonalBox> rep_;
  std::vector<Eigen::MatrixXd> ggt_;
};

}  // namespace gexp
