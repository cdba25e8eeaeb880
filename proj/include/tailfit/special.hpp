#pragma once

#include <span>

// Normal-distribution primitives shared by every family. Tail functions are
// evaluated in log form so that truncation normalizers far in the tail
// (z of 30 and beyond) stay finite.
namespace tailfit::special {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double norm_cdf(double z);
double norm_sf(double z);
double log_norm_pdf(double z);
double log_norm_sf(double z);
double log_norm_cdf(double z);

/// Inverse of norm_cdf on (0, 1).
double norm_quantile(double p);
/// Inverse of norm_sf on (0, 1); accurate for very small p.
double norm_isf(double p);

/// phi(z) / (1 - Phi(z)), the inverse Mills ratio.
double inverse_mills(double z);

double log_sum_exp(std::span<const double> values);

/// log(1 - exp(x)) for x <= 0.
double log1mexp(double x);

}  // namespace tailfit::special
