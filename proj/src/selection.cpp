#include "tailfit/selection.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace tailfit {

Criteria criteria(int k, std::size_t n, double log_likelihood) {
  if (k < 1) throw DomainError("criteria: k must be >= 1");
  if (n < 1) throw DomainError("criteria: n must be >= 1");
  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);
  Criteria c;
  c.aic = 2.0 * kk - 2.0 * log_likelihood;
  c.bic = kk * std::log(nn) - 2.0 * log_likelihood;
  if (n >= 3) c.hqc = 2.0 * kk * std::log(std::log(nn)) - 2.0 * log_likelihood;
  return c;
}

namespace {

std::vector<std::string> winners(const std::vector<SelectionRow>& rows,
                                 const std::function<std::optional<double>(const SelectionRow&)>& key) {
  std::optional<double> best;
  for (const auto& r : rows) {
    const auto v = key(r);
    if (v && (!best || *v < *best)) best = v;
  }
  std::vector<std::string> out;
  if (!best) return out;
  for (const auto& r : rows) {
    if (const auto v = key(r); v && *v == *best) out.push_back(r.name);
  }
  return out;
}

}  // namespace

SelectionReport select_models(std::size_t n, const std::vector<NamedFit>& fits) {
  SelectionReport rep;
  rep.n = n;
  for (const auto& f : fits) rep.rows.push_back({f.name, f.k, f.log_likelihood, criteria(f.k, n, f.log_likelihood)});
  rep.aic_winners = winners(rep.rows, [](const SelectionRow& r) -> std::optional<double> { return r.ic.aic; });
  rep.bic_winners = winners(rep.rows, [](const SelectionRow& r) -> std::optional<double> { return r.ic.bic; });
  rep.hqc_winners = winners(rep.rows, [](const SelectionRow& r) { return r.ic.hqc; });
  return rep;
}

VuongResult vuong(const DistributionModel& first, const DistributionModel& second,
                  const Sample& sample, const VuongOptions& options) {
  const std::size_t n = sample.size();
  if (n < 2) throw InsufficientSampleError("Vuong test needs at least 2 observations");
  std::vector<double> d;
  d.reserve(n);
  for (double x : sample.values()) d.push_back(log_pdf(first, x) - log_pdf(second, x));
  const double nn = static_cast<double>(n);
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= nn;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (nn - 1.0));

  VuongResult out;
  out.n = n;
  out.first = first.name();
  out.second = second.name();
  if (!(sd > 0.0)) return out;
  double total = mean * nn;
  if (options.schwarz_correction) {
    total -= 0.5 * (first.parameter_count() - second.parameter_count()) * std::log(nn);
  }
  out.statistic = total / (std::sqrt(nn) * sd);
  out.p_value = std::erfc(std::abs(out.statistic) / std::numbers::sqrt2);
  if (out.p_value < options.level) out.favors = out.statistic > 0.0 ? VuongFavors::First : VuongFavors::Second;
  return out;
}

VuongResult vuong(const FitResult& pareto, const FitResult& lnt, const Sample& tail,
                  const VuongOptions& options) {
  if (pareto.model.family() != Family::Pareto || lnt.model.family() != Family::TruncLognormal) {
    throw DomainError("vuong: expected a Pareto fit and an LNt fit");
  }
  if (pareto.model.as<ParetoParams>().x_min != lnt.model.as<TruncLognormalParams>().x_min) {
    throw DomainError("vuong: the Pareto and LNt fits use different cutoffs");
  }
  return vuong(pareto.model, lnt.model, tail, options);
}

}  // namespace tailfit
