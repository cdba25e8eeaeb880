#pragma once

#include <cstddef>
#include <optional>

#include "tailfit/sample.hpp"

namespace tailfit {

/// Sizes and log-sizes summarized. SDs use the n - 1 divisor; log_sd_ml is
/// the divisor-n SD the lognormal fit uses. Skewness and (raw) kurtosis of
/// the logs use divisor-n central moments and are empty for constant logs.
struct DescriptiveStats {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double log_mean = 0.0;
  double log_sd = 0.0;
  double log_sd_ml = 0.0;
  std::optional<double> log_skewness;
  std::optional<double> log_kurtosis;
  double min = 0.0;
  double max = 0.0;
};

/// Throws InsufficientSampleError for n < 2.
DescriptiveStats describe(const Sample& sample);

}  // namespace tailfit
