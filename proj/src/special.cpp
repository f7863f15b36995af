#include "evtrust/special.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "evtrust/errors.hpp"

namespace evtrust {

namespace {

void require_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(std::string(fn) + ": argument must be finite and > 0, got " +
                      std::to_string(x));
  }
}

constexpr double kAsymptoticStart = 10.0;

}  // namespace

double digamma(double x) {
  require_positive(x, "digamma");
  double result = 0.0;
  while (x < kAsymptoticStart) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli-number tail: B_2n / (2n x^2n), n = 1..7.
  const double tail =
      inv2 * (1.0 / 12 -
      inv2 * (1.0 / 120 -
      inv2 * (1.0 / 252 -
      inv2 * (1.0 / 240 -
      inv2 * (1.0 / 132 -
      inv2 * (691.0 / 32760 -
      inv2 * (1.0 / 12)))))));
  return result + std::log(x) - 0.5 * inv - tail;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double result = 0.0;
  while (x < kAsymptoticStart) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double tail =
      inv * inv2 * (1.0 / 6 -
      inv2 * (1.0 / 30 -
      inv2 * (1.0 / 42 -
      inv2 * (1.0 / 30 -
      inv2 * (5.0 / 66 -
      inv2 * (691.0 / 2730 -
      inv2 * (7.0 / 6)))))));
  return result + inv + 0.5 * inv2 + tail;
}

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  if (x == 1.0 || x == 2.0) return 0.0;
  if (x < 0.5) {
    // Gamma(x) = Gamma(x + 1) / x keeps the series in its accurate range.
    return log_gamma(x + 1.0) - std::log(x);
  }
  // Lanczos, g = 7, n = 9.
  static constexpr std::array<double, 9> kCoeff = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double g = 7.0;
  const double z = x - 1.0;
  double series = kCoeff[0];
  for (std::size_t i = 1; i < kCoeff.size(); ++i) {
    series += kCoeff[i] / (z + static_cast<double>(i));
  }
  const double t = z + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(series);
}

}  // namespace evtrust
