#pragma once

#include <cmath>
#include <cstddef>

namespace crboot {

// Neumaier-compensated accumulator over long double. At-risk denominators
// enter as Y^3, so increments span many orders of magnitude.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(long double init) : sum_(init) {}

  void add(long double x) {
    const long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(long double x) {
    add(x);
    return *this;
  }

  long double value() const { return sum_ + comp_; }
  double get() const { return static_cast<double>(value()); }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

// Ratio with the counting-process convention 0/0 = 0.
inline double safe_ratio(double num, double den) {
  if (den == 0.0) return 0.0;
  return num / den;
}

}  // namespace crboot
