#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace camoforge {

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update in place. A fresh default state is sized on
// the first step. Throws NumericalError on a
// non-finite gradient and std::invalid_argument on a shape mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               double lr);

}  // namespace camoforge
