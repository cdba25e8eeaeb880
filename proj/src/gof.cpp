#include "tailfit/gof.hpp"

#include <algorithm>
#include <cmath>

#include "tailfit/parallel.hpp"
#include "tailfit/random.hpp"

namespace tailfit {

std::string_view gof_token(GofKind kind) {
  switch (kind) {
    case GofKind::KS: return "ks";
    case GofKind::CM: return "cm";
    case GofKind::AD: return "ad";
  }
  return "?";
}

GofKind parse_gof_kind(std::string_view token) {
  for (auto k : {GofKind::KS, GofKind::CM, GofKind::AD}) {
    if (token == gof_token(k)) return k;
  }
  throw InputError("unknown test '" + std::string(token) + "' (expected ks, cm or ad)");
}

double ks_from_uniforms(std::span<const double> u) {
  const auto n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - u[i];
    const double below = u[i] - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  return std::min(d, 1.0);
}

double cm_from_uniforms(std::span<const double> u) {
  const auto n = static_cast<double>(u.size());
  double w = 1.0 / (12.0 * n);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double r = u[i] - (2.0 * static_cast<double>(i) + 1.0) / (2.0 * n);
    w += r * r;
  }
  return w;
}

double ad_from_uniforms(std::span<const double> u) {
  constexpr double kLo = 1e-12;
  constexpr double kHi = 1.0 - 1e-12;
  const std::size_t n = u.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = std::clamp(u[i], kLo, kHi);
    const double hi = std::clamp(u[n - 1 - i], kLo, kHi);
    acc += (2.0 * static_cast<double>(i) + 1.0) * (std::log(lo) + std::log1p(-hi));
  }
  const auto nn = static_cast<double>(n);
  return -nn - acc / nn;
}

double statistic_from_uniforms(GofKind kind, std::span<const double> u) {
  switch (kind) {
    case GofKind::KS: return ks_from_uniforms(u);
    case GofKind::CM: return cm_from_uniforms(u);
    case GofKind::AD: return ad_from_uniforms(u);
  }
  return 0.0;
}

std::vector<double> uniforms(const DistributionModel& model, const Sample& sample) {
  const double lower = model.support_lower();
  const bool log_space = model.space() == Space::Log;
  if (log_space ? sample.logs().front() < lower : sample.min() < lower) {
    throw DomainError(model.name() + " support starts at " + std::to_string(lower) +
                      ", below which lies an observation");
  }
  std::vector<double> u;
  u.reserve(sample.size());
  for (double y : sample.logs()) u.push_back(cdf_of_log(model.params(), y));
  return u;
}

double ks_stat(const DistributionModel& model, const Sample& sample) {
  return ks_from_uniforms(uniforms(model, sample));
}

double cm_stat(const DistributionModel& model, const Sample& sample) {
  return cm_from_uniforms(uniforms(model, sample));
}

double ad_stat(const DistributionModel& model, const Sample& sample) {
  return ad_from_uniforms(uniforms(model, sample));
}

std::vector<GofReport> mc_pvalues(const Sample& data, const GofFitter& fitter,
                                  std::span<const GofKind> kinds, int replicates,
                                  std::uint64_t seed, unsigned threads) {
  if (replicates < 1) throw DomainError("replicates must be >= 1");
  const DistributionModel fitted = fitter(data, nullptr, seed);
  const auto u_obs = uniforms(fitted, data);

  const auto reps = static_cast<std::size_t>(replicates);
  const std::size_t nk = kinds.size();
  std::vector<double> stats(reps * nk, 0.0);
  std::vector<char> ok(reps, 0);
  parallel_for(reps, [&](std::size_t r) {
    const std::uint64_t sub = derive_seed(seed, r);
    try {
      const Sample synthetic = sample(fitted, data.size(), sub);
      const DistributionModel refit = fitter(synthetic, &fitted, sub);
      const auto u = uniforms(refit, synthetic);
      for (std::size_t k = 0; k < nk; ++k) stats[r * nk + k] = statistic_from_uniforms(kinds[k], u);
      ok[r] = 1;
    } catch (const FitError&) {
    } catch (const DomainError&) {
    } catch (const DegenerateSampleError&) {
    } catch (const InsufficientSampleError&) {
    }
  }, threads);

  std::vector<GofReport> out;
  for (std::size_t k = 0; k < nk; ++k) {
    GofReport rep;
    rep.kind = kinds[k];
    rep.observed = statistic_from_uniforms(kinds[k], u_obs);
    rep.replicates = replicates;
    rep.seed = seed;
    int exceed = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      if (!ok[r]) {
        ++rep.dropped;
        continue;
      }
      const double s = stats[r * nk + k];
      rep.synthetic_stats.push_back(s);
      if (s >= rep.observed) ++exceed;
    }
    const auto valid = static_cast<double>(rep.synthetic_stats.size());
    rep.p_value = (1.0 + exceed) / (valid + 1.0);
    if (rep.dropped * 20 > replicates) {
      rep.unreliable = true;
      rep.warning = std::to_string(rep.dropped) + " of " + std::to_string(replicates) +
                    " replicates failed to refit; the p-value is unreliable";
    }
    out.push_back(std::move(rep));
  }
  return out;
}

GofFitter make_fitter(ModelKind kind, const FitOptions& options, int replicate_restarts) {
  return [kind, options, replicate_restarts](const Sample& data, const DistributionModel* generator,
                                             std::uint64_t seed) {
    FitOptions opts = options;
    opts.mixture.std_errors = false;
    if (generator != nullptr) {
      opts.mixture.seed = seed;
      opts.mixture.threads = 1;
      if (replicate_restarts > 0) opts.mixture.restarts = replicate_restarts;
      if (generator->family() == Family::Mixture) opts.mixture.warm_start = generator->as<MixtureParams>();
      if (generator->family() == Family::Pareto) opts.x_min = generator->as<ParetoParams>().x_min;
      if (generator->family() == Family::TruncLognormal) {
        opts.x_min = generator->as<TruncLognormalParams>().x_min;
      }
    }
    return fit(kind, data, opts).model;
  };
}

GofReport mc_pvalue(ModelKind kind, const Sample& sample, GofKind statistic, int replicates,
                    std::uint64_t seed, const FitOptions& options, unsigned threads) {
  const GofKind kinds[] = {statistic};
  return mc_pvalues(sample, make_fitter(kind, options), kinds, replicates, seed, threads).front();
}

}  // namespace tailfit
