#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tailfit/fitting.hpp"

namespace tailfit {

struct Criteria {
  double aic = 0.0;
  double bic = 0.0;
  /// Undefined for n < 3, where ln ln n is not positive.
  std::optional<double> hqc;
};

/// AIC = 2k - 2 lnL, BIC = k ln n - 2 lnL, HQC = 2k ln ln n - 2 lnL.
/// Throws DomainError for k < 1 or n < 1.
Criteria criteria(int k, std::size_t n, double log_likelihood);

struct SelectionRow {
  std::string name;
  int k = 0;
  double log_likelihood = 0.0;
  Criteria ic;
};

struct SelectionReport {
  std::size_t n = 0;
  std::vector<SelectionRow> rows;
  /// Names minimizing each criterion; more than one entry means a tie.
  std::vector<std::string> aic_winners;
  std::vector<std::string> bic_winners;
  std::vector<std::string> hqc_winners;
};

struct NamedFit {
  std::string name;
  int k = 0;
  double log_likelihood = 0.0;
};

SelectionReport select_models(std::size_t n, const std::vector<NamedFit>& fits);

enum class VuongFavors { First, Second, Neither };

struct VuongResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  VuongFavors favors = VuongFavors::Neither;
  /// Names of the two models in argument order.
  std::string first;
  std::string second;
};

struct VuongOptions {
  double level = 0.05;
  /// Subtract (k1 - k2) ln(n) / 2 from the summed log-likelihood ratio.
  bool schwarz_correction = false;
};

/// d_i = log_pdf(first, x_i) - log_pdf(second, x_i); statistic
/// sqrt(n) mean(d) / sd(d) with the n - 1 divisor; two-sided normal p-value.
/// A zero SD gives statistic 0 and p 1. Positive values favor `first`.
VuongResult vuong(const DistributionModel& first, const DistributionModel& second,
                  const Sample& sample, const VuongOptions& options = {});

/// Pareto first, LNt second; both must share the cutoff.
VuongResult vuong(const FitResult& pareto, const FitResult& lnt, const Sample& tail,
                  const VuongOptions& options = {});

}  // namespace tailfit
