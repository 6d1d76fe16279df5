#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dyndsg {

// Absolute slack used when comparing a load against a stored boundary.
inline constexpr double kLevelTolerance = 1e-9;

/// Geometric load bands: L_0 = 0, L_i = (1 + alpha) L_{i-1} + 1.
///
/// A value x sits at level i when L_{i-1} < x <= L_i, and zero sits at
/// level 0. Boundaries are computed once; `level_of` is a binary search
/// over them so that every comparison in the engine agrees with the stored
/// values rather than with a recomputed logarithm.
class LevelParams {
 public:
  LevelParams(double alpha, double max_value) : alpha_(alpha), max_value_(max_value) {
    if (!(alpha > 0.0)) throw std::invalid_argument("LevelParams: alpha must be positive");
    if (!(max_value >= 1.0)) throw std::invalid_argument("LevelParams: max_value must be >= 1");
    boundaries_.push_back(0.0);
    while (boundaries_.back() < max_value - kLevelTolerance) {
      boundaries_.push_back((1.0 + alpha) * boundaries_.back() + 1.0);
    }
  }

  double alpha() const { return alpha_; }
  double max_value() const { return max_value_; }

  /// Index of the top boundary; levels run over [0, top_level()].
  std::size_t top_level() const { return boundaries_.size() - 1; }
  std::size_t level_count() const { return boundaries_.size(); }

  double boundary(std::size_t i) const { return boundaries_.at(i); }
  const std::vector<double>& boundaries() const { return boundaries_; }

  std::size_t level_of(double x) const {
    if (x < 0.0) throw std::out_of_range("level_of: negative value");
    if (x > max_value_ + kLevelTolerance) throw std::out_of_range("level_of: value exceeds max_value");
    return level_of_unchecked(x);
  }

  // First i with x <= L_i (+ tolerance). Values at or below zero map to 0.
  std::size_t level_of_unchecked(double x) const {
    if (x <= kLevelTolerance) return 0;
    auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), x,
                               [](double b, double v) { return b + kLevelTolerance < v; });
    if (it == boundaries_.end()) return top_level();
    return static_cast<std::size_t>(it - boundaries_.begin());
  }

 private:
  double alpha_;
  double max_value_;
  std::vector<double> boundaries_;
};

inline LevelParams build_level_params(double alpha, double max_value) {
  return LevelParams(alpha, max_value);
}

}  // namespace dyndsg
