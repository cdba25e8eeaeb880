#include "tailfit/describe.hpp"

#include <cmath>

#include "tailfit/errors.hpp"

namespace tailfit {

namespace {

double mean_of(std::span<const double> v) {
  // Two-pass mean with a correction term keeps large sums accurate.
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  double c = 0.0;
  for (double x : v) c += x - m;
  return m + c / static_cast<double>(v.size());
}

}  // namespace

DescriptiveStats describe(const Sample& sample) {
  const std::size_t n = sample.size();
  if (n < 2) throw InsufficientSampleError("descriptive statistics need at least 2 observations");
  const double nn = static_cast<double>(n);
  DescriptiveStats d;
  d.n = n;
  d.min = sample.min();
  d.max = sample.max();

  d.mean = mean_of(sample.values());
  double ss = 0.0;
  for (double x : sample.values()) ss += (x - d.mean) * (x - d.mean);
  d.sd = std::sqrt(ss / (nn - 1.0));

  d.log_mean = mean_of(sample.logs());
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double y : sample.logs()) {
    const double e = y - d.log_mean;
    const double e2 = e * e;
    m2 += e2;
    m3 += e2 * e;
    m4 += e2 * e2;
  }
  d.log_sd = std::sqrt(m2 / (nn - 1.0));
  d.log_sd_ml = std::sqrt(m2 / nn);
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;
  if (m2 > 0.0) {
    d.log_skewness = m3 / std::pow(m2, 1.5);
    d.log_kurtosis = m4 / (m2 * m2);
  }
  return d;
}

}  // namespace tailfit
