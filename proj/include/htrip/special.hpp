#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "htrip/errors.hpp"

namespace htrip {

/// Gamma function for real x > 0 (Lanczos, g = 7, nine terms) with the
/// reflection formula below 1/2. Relative error is below 1e-13 on (0, 171).
inline double gamma_function(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "gamma_function: x must be > 0");
  static constexpr std::array<double, 9> kCoef = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  if (x < 0.5) {
    // Γ(x)Γ(1-x) = π / sin(πx)
    return std::numbers::pi / (std::sin(std::numbers::pi * x) * gamma_function(1.0 - x));
  }
  const double z = x - 1.0;
  double sum = kCoef[0];
  for (std::size_t i = 1; i < kCoef.size(); ++i) sum += kCoef[i] / (z + static_cast<double>(i));
  const double t = z + 7.5;
  // t^(z+1/2) split in two halves so that x up to ~171 does not overflow early
  const double half = std::pow(t, 0.5 * (z + 0.5));
  return std::sqrt(2.0 * std::numbers::pi) * half * (half * std::exp(-t)) * sum;
}

/// floor(x), forgiving values that sit within a relative 1e-12 below an
/// integer (e.g. 2*7/(sqrt(2)^2) evaluating to 6.999999999999999).
inline double floor_tolerant(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return r;
  return std::floor(x);
}

}  // namespace htrip
