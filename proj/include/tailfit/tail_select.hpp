#pragma once

#include <cstddef>
#include <vector>

#include "tailfit/sample.hpp"

namespace tailfit {

struct TailScanConfig {
  /// Smallest tail a candidate cutoff may leave.
  std::size_t n_floor = 50;
  /// Above this many eligible unique values, a quantile-spaced subset is scanned.
  std::size_t max_candidates = 2000;
  unsigned threads = 0;
};

struct TailScan {
  std::vector<double> candidates;  // ascending
  std::vector<double> distances;   // KS distance D per candidate
  double chosen_xmin = 0.0;
  std::size_t tail_n = 0;
  double alpha_at_choice = 0.0;
};

/// KS distance between the tail x >= x_min (with its right-continuous
/// empirical CDF) and the Pareto law fitted to it by the Hill estimator.
double pareto_tail_distance(const Sample& sample, double x_min);

/// Scans candidate cutoffs and returns the one minimizing the KS distance;
/// ties go to the smallest cutoff. Throws InsufficientSampleError when
/// n < 2 n_floor.
TailScan select_xmin(const Sample& sample, const TailScanConfig& config = {});

}  // namespace tailfit
