#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mixgan/core/error.hpp"

namespace mixgan::nn {

/// Central-difference gradient of an arbitrary scalar function of a flat
/// parameter vector: (f(p+h e_i) - f(p-h e_i)) / 2h per coordinate.
inline std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& loss_fn,
    std::span<const double> params, double step) {
  if (step <= 0.0) throw ConfigError("finite_diff_gradient: step must be > 0");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + step;
    const double f_plus = loss_fn(p);
    p[i] = orig - step;
    const double f_minus = loss_fn(p);
    p[i] = orig;
    grad[i] = (f_plus - f_minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace mixgan::nn
