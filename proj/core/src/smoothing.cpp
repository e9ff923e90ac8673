#include "hazmatch/smoothing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hazmatch {

LocalLinearSmoother::LocalLinearSmoother(std::vector<double> x, std::vector<double> y,
                                         double bandwidth)
    : x_(std::move(x)), y_(std::move(y)), h_(bandwidth) {
  if (x_.size() != y_.size() || x_.empty()) {
    throw std::invalid_argument("LocalLinearSmoother: bad sample");
  }
  if (!(h_ > 0)) throw std::invalid_argument("LocalLinearSmoother: bandwidth must be > 0");
}

double LocalLinearSmoother::operator()(double p) const {
  double s0 = 0, s1 = 0, s2 = 0, t0 = 0, t1 = 0;
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double d = x_[i] - p;
    const double zq = d / h_;
    const double w = std::exp(-0.5 * zq * zq);
    s0 += w;
    s1 += w * d;
    s2 += w * d * d;
    t0 += w * y_[i];
    t1 += w * d * y_[i];
  }
  if (s0 <= std::numeric_limits<double>::min()) {
    // all weights underflowed: nearest sample value
    double best = std::numeric_limits<double>::infinity();
    double val = y_.front();
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double d = std::abs(x_[i] - p);
      if (d < best) {
        best = d;
        val = y_[i];
      }
    }
    return val;
  }
  const double denom = s0 * s2 - s1 * s1;
  if (denom <= 1e-12 * s0 * s2 || s2 == 0) return t0 / s0;  // degenerate local design
  return (s2 * t0 - s1 * t1) / denom;
}

double rule_of_thumb_bandwidth(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("rule_of_thumb_bandwidth: need >= 2 points");
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double h = 1.06 * sd * std::pow(static_cast<double>(n), -0.2);
  return std::max(h, 1e-12);
}

SmoothTable::SmoothTable(const LocalLinearSmoother& fn, double lo, double hi, int points) {
  if (!(hi > lo) || points < 2) throw std::invalid_argument("SmoothTable: bad grid");
  lo_ = lo;
  step_ = (hi - lo) / static_cast<double>(points - 1);
  values_.resize(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) {
    values_[static_cast<std::size_t>(k)] = fn(lo + step_ * k);
  }
}

double SmoothTable::operator()(double p) const {
  const int last = static_cast<int>(values_.size()) - 1;
  const double g = (p - lo_) / step_;
  if (g <= 0) return values_.front();
  if (g >= last) return values_.back();
  const int k = static_cast<int>(g);
  const double frac = g - k;
  return values_[static_cast<std::size_t>(k)] * (1.0 - frac) +
         values_[static_cast<std::size_t>(k + 1)] * frac;
}

}  // namespace hazmatch
