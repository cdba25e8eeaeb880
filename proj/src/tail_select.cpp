#include "tailfit/tail_select.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tailfit/errors.hpp"
#include "tailfit/parallel.hpp"

namespace tailfit {

namespace {

struct Candidate {
  std::size_t start;  // index of the first tail observation
  double alpha;
  double distance;
};

// Tail logs[start..n) against the Pareto fitted with origin y_min;
// suffix[i] = sum of logs[i..n).
Candidate scan_one(std::span<const double> logs, const std::vector<double>& suffix,
                   std::size_t start, double y_min) {
  const std::size_t n = logs.size();
  const auto n_tail = static_cast<double>(n - start);
  const double excess = suffix[start] - n_tail * y_min;
  if (!(excess > 0.0)) return {start, 0.0, 1.0};
  const double rate = n_tail / excess;
  double d = 0.0;
  std::size_t i = start;
  while (i < n) {
    std::size_t j = i;
    while (j < n && logs[j] == logs[i]) ++j;
    const double model = -std::expm1(-rate * (logs[i] - y_min));
    const double below = static_cast<double>(i - start) / n_tail;
    const double at = static_cast<double>(j - start) / n_tail;
    d = std::max({d, std::abs(at - model), std::abs(below - model)});
    i = j;
  }
  return {start, 1.0 + rate, d};
}

std::vector<double> suffix_sums(std::span<const double> logs) {
  std::vector<double> suffix(logs.size() + 1, 0.0);
  for (std::size_t i = logs.size(); i-- > 0;) suffix[i] = suffix[i + 1] + logs[i];
  return suffix;
}

}  // namespace

double pareto_tail_distance(const Sample& sample, double x_min) {
  if (!(x_min > 0.0)) throw DomainError("x_min must be > 0");
  const std::size_t start = sample.lower_index(x_min);
  if (start >= sample.size()) throw InsufficientSampleError("no observations at or above x_min");
  return scan_one(sample.logs(), suffix_sums(sample.logs()), start, std::log(x_min)).distance;
}

TailScan select_xmin(const Sample& sample, const TailScanConfig& config) {
  const std::size_t n = sample.size();
  if (n < 2 * config.n_floor || n < 2) {
    throw InsufficientSampleError("x_min scan needs at least " + std::to_string(2 * config.n_floor) +
                                  " observations, got " + std::to_string(n));
  }
  const auto logs = sample.logs();
  const auto suffix = suffix_sums(logs);

  // First index of every unique value leaving at least n_floor points.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n && n - i >= config.n_floor; ++i) {
    if (i == 0 || logs[i] != logs[i - 1]) starts.push_back(i);
  }
  if (starts.empty()) throw InsufficientSampleError("no cutoff leaves n_floor observations");
  if (config.max_candidates >= 2 && starts.size() > config.max_candidates) {
    std::vector<std::size_t> subset;
    const std::size_t last = starts.size() - 1;
    for (std::size_t k = 0; k < config.max_candidates; ++k) {
      const std::size_t pick = k * last / (config.max_candidates - 1);
      if (subset.empty() || subset.back() != starts[pick]) subset.push_back(starts[pick]);
    }
    starts = std::move(subset);
  }

  std::vector<Candidate> scanned(starts.size());
  parallel_for(starts.size(), [&](std::size_t c) { scanned[c] = scan_one(logs, suffix, starts[c], logs[starts[c]]); },
               config.threads);

  TailScan out;
  std::size_t best = 0;
  for (std::size_t c = 0; c < scanned.size(); ++c) {
    out.candidates.push_back(sample.values()[scanned[c].start]);
    out.distances.push_back(scanned[c].distance);
    if (scanned[c].distance < scanned[best].distance) best = c;
  }
  out.chosen_xmin = out.candidates[best];
  out.tail_n = n - scanned[best].start;
  out.alpha_at_choice = scanned[best].alpha;
  return out;
}

}  // namespace tailfit
