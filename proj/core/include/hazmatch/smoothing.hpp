#pragma once

#include <vector>

namespace hazmatch {

// Local-linear kernel regression with a Gaussian kernel. Falls back to the
// locally constant (Nadaraya-Watson) estimate where the local design is
// degenerate, and to the nearest sample value where all kernel weights
// underflow.
class LocalLinearSmoother {
 public:
  LocalLinearSmoother() = default;
  LocalLinearSmoother(std::vector<double> x, std::vector<double> y, double bandwidth);

  double operator()(double p) const;
  double bandwidth() const { return h_; }
  int sample_size() const { return static_cast<int>(x_.size()); }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  double h_ = 1.0;
};

// Silverman rule of thumb: 1.06 * sd(x) * n^{-1/5}.
double rule_of_thumb_bandwidth(const std::vector<double>& x);

// Piecewise-linear table of a smoother on a uniform grid; evaluation clamps
// to the grid range. Used in resampling loops where exact evaluation at
// every replicate would dominate the runtime.
class SmoothTable {
 public:
  SmoothTable() = default;
  SmoothTable(const LocalLinearSmoother& fn, double lo, double hi, int points = 1024);

  double operator()(double p) const;

 private:
  double lo_ = 0;
  double step_ = 1;
  std::vector<double> values_;
};

}  // namespace hazmatch
