#include "tailfit/sample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tailfit/errors.hpp"

namespace tailfit {

Sample::Sample(std::vector<double> sizes) : values_(std::move(sizes)) {
  if (values_.empty()) throw InsufficientSampleError("sample is empty");
  for (double v : values_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError("sample values must be finite and > 0, got " + std::to_string(v));
    }
  }
  std::sort(values_.begin(), values_.end());
  logs_.resize(values_.size());
  std::transform(values_.begin(), values_.end(), logs_.begin(),
                 [](double v) { return std::log(v); });
}

Sample Sample::from_logs(std::vector<double> logs) {
  if (logs.empty()) throw InsufficientSampleError("sample is empty");
  for (double y : logs) {
    if (!std::isfinite(y)) throw DomainError("log-sizes must be finite");
  }
  std::sort(logs.begin(), logs.end());
  Sample s;
  s.values_.resize(logs.size());
  std::transform(logs.begin(), logs.end(), s.values_.begin(),
                 [](double y) { return std::exp(y); });
  s.logs_ = std::move(logs);
  return s;
}

std::size_t Sample::lower_index(double x_min) const {
  return static_cast<std::size_t>(
      std::lower_bound(values_.begin(), values_.end(), x_min) - values_.begin());
}

Sample Sample::tail(double x_min) const {
  const std::size_t first = lower_index(x_min);
  if (first == values_.size()) {
    throw InsufficientSampleError("no observations at or above x_min");
  }
  Sample s;
  s.values_.assign(values_.begin() + static_cast<std::ptrdiff_t>(first), values_.end());
  s.logs_.assign(logs_.begin() + static_cast<std::ptrdiff_t>(first), logs_.end());
  return s;
}

}  // namespace tailfit
