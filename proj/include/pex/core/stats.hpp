#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pex {

/// Welford running mean / variance.
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }
  /// Sample variance (n - 1 denominator); 0 for fewer than two values.
  double variance() const { return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0; }
  double std_error() const { return count_ > 0 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0; }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Linear-interpolation quantile of unsorted data (R type 7).
double quantile(std::vector<double> values, double q);

/// Spearman rank correlation with average ranks for ties. Returns NaN when
/// either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

/// Average ranks (1-based) with ties sharing their mean rank.
std::vector<double> average_ranks(std::span<const double> v);

/// Standard normal quantile.
double normal_quantile(double p);

}  // namespace pex
