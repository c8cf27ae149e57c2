#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crboot/numeric.hpp"

namespace crboot {

/// Right-continuous piecewise-constant function. Takes `initial` before the
/// first grid time and `values[i]` on [grid[i], grid[i+1]).
class StepCurve {
 public:
  StepCurve() = default;

  StepCurve(std::vector<double> grid, std::vector<double> values, double initial = 0.0)
      : grid_(std::move(grid)), values_(std::move(values)), initial_(initial) {
    if (grid_.size() != values_.size()) {
      throw std::invalid_argument("StepCurve: grid and values differ in length");
    }
    for (std::size_t i = 1; i < grid_.size(); ++i) {
      if (!(grid_[i - 1] < grid_[i])) {
        throw std::invalid_argument("StepCurve: grid must be strictly ascending");
      }
    }
  }

  /// Value at the largest grid time <= t.
  double operator()(double t) const {
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    if (it == grid_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
  }

  /// Value at the largest grid time < t.
  double left_limit(double t) const {
    const auto it = std::lower_bound(grid_.begin(), grid_.end(), t);
    if (it == grid_.begin()) return initial_;
    return values_[static_cast<std::size_t>(it - grid_.begin()) - 1];
  }

  /// Value just before grid index i (the previous grid value, or `initial`).
  double before(std::size_t i) const { return i == 0 ? initial_ : values_[i - 1]; }

  std::size_t size() const { return grid_.size(); }
  bool empty() const { return grid_.empty(); }
  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double initial() const { return initial_; }
  double value_at(std::size_t i) const { return values_[i]; }
  double time_at(std::size_t i) const { return grid_[i]; }

  /// Pointwise scaled copy (same grid).
  StepCurve scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return StepCurve(grid_, std::move(v), initial_ * c);
  }

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
  double initial_ = 0.0;
};

/// Builds a curve from per-grid increments by prefix summation.
inline StepCurve cumulate(const std::vector<double>& grid, const std::vector<double>& increments,
                          double initial = 0.0) {
  std::vector<double> values(increments.size());
  CompensatedSum acc(initial);
  for (std::size_t i = 0; i < increments.size(); ++i) {
    acc += increments[i];
    values[i] = acc.get();
  }
  return StepCurve(grid, std::move(values), initial);
}

}  // namespace crboot
