#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tailfit {

/// Sorted, strictly positive observations with their logarithms cached.
/// Duplicates are kept.
class Sample {
 public:
  /// Throws InsufficientSampleError when empty and DomainError when any value
  /// is non-positive or non-finite.
  explicit Sample(std::vector<double> sizes);

  /// Builds a sample from log-sizes; the logs are kept exactly as given.
  static Sample from_logs(std::vector<double> logs);

  std::span<const double> values() const { return values_; }
  std::span<const double> logs() const { return logs_; }
  std::size_t size() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }

  /// Observations with value >= x_min, in order.
  Sample tail(double x_min) const;
  /// Index of the first observation >= x_min.
  std::size_t lower_index(double x_min) const;

  friend bool operator==(const Sample&, const Sample&) = default;

 private:
  Sample() = default;
  std::vector<double> values_;
  std::vector<double> logs_;
};

}  // namespace tailfit
