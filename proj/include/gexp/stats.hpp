#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace gexp {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  long n = 0;
};

// Welford accumulator; numerically stable single pass.
class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  long n() const { return n_; }
  double mean() const { return mean_; }
  double variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  double stderr_of_mean() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  MeanStderr result() const { return {mean(), stderr_of_mean(), n()}; }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Reduction order is fixed (index order) so results do not depend on how
// the values were produced across workers.
inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  RunningStats acc;
  for (double x : xs) acc.add(x);
  return acc.result();
}

inline double pooled_stderr(double a, double b) { return std::hypot(a, b); }

}  // namespace gexp
