#include "tailfit/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

namespace tailfit::special {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
// Beyond this point erfc underflows; switch to the asymptotic series.
constexpr double kAsymptoticZ = 35.0;
}  // namespace

double norm_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double norm_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

double log_norm_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double log_norm_sf(double z) {
  if (z < kAsymptoticZ) return std::log(0.5 * std::erfc(z * kInvSqrt2));
  const double r = 1.0 / (z * z);
  const double series = r * (-1.0 + r * (3.0 + r * (-15.0 + r * 105.0)));
  return log_norm_pdf(z) - std::log(z) + std::log1p(series);
}

double log_norm_cdf(double z) { return log_norm_sf(-z); }

double norm_quantile(double p) {
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double norm_isf(double p) {
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double inverse_mills(double z) { return std::exp(log_norm_pdf(z) - log_norm_sf(z)); }

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

double log1mexp(double x) {
  // Maechler's switch point keeps both branches accurate.
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

}  // namespace tailfit::special
