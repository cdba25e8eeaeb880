#include "tailfit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "tailfit/errors.hpp"
#include "tailfit/random.hpp"
#include "tailfit/special.hpp"

namespace tailfit {

namespace sp = special;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void validate(StexpParams& p) {
  require(p.gamma > 0.0 && std::isfinite(p.gamma), "STEXP gamma must be > 0");
  require(p.eta > 0.0 && std::isfinite(p.eta), "STEXP eta must be > 0");
}

void validate(LognormalParams& p) {
  require(std::isfinite(p.mu), "lognormal mu must be finite");
  require(p.sigma > 0.0 && std::isfinite(p.sigma), "lognormal sigma must be > 0");
}

void validate(MixtureParams& p) {
  require(!p.components.empty(), "mixture needs at least one component");
  require(p.weights.size() == p.components.size(),
          "mixture weights and components differ in length");
  for (auto& c : p.components) validate(c);
  double total = 0.0;
  for (double& w : p.weights) {
    require(std::isfinite(w) && w >= -1e-12, "mixture weights must be >= 0");
    w = std::max(w, 0.0);
    total += w;
  }
  require(std::abs(total - 1.0) <= 1e-9, "mixture weights must sum to 1, got " + fmt(total));
  for (double& w : p.weights) w /= total;
}

void validate(ParetoParams& p) {
  require(p.alpha > 1.0 && std::isfinite(p.alpha), "Pareto alpha must be > 1");
  require(p.x_min > 0.0 && std::isfinite(p.x_min), "Pareto x_min must be > 0");
}

void validate(TruncLognormalParams& p) {
  require(std::isfinite(p.mu), "LNt mu must be finite");
  require(p.sigma > 0.0 && std::isfinite(p.sigma), "LNt sigma must be > 0");
  require(p.x_min > 0.0 && std::isfinite(p.x_min), "LNt x_min must be > 0");
  const double z_min = (std::log(p.x_min) - p.mu) / p.sigma;
  require(std::isfinite(sp::log_norm_sf(z_min)), "LNt normalizer underflows");
}

double lower_log_bound(const ModelParams& params) {
  return std::visit(Overloaded{
                        [](const ParetoParams& p) { return std::log(p.x_min); },
                        [](const TruncLognormalParams& p) { return std::log(p.x_min); },
                        [](const auto&) { return -kInf; },
                    },
                    params);
}

// ln(1 - cdf_LN(x_min)) of a truncated lognormal.
double lnt_log_mass(const TruncLognormalParams& p) {
  return sp::log_norm_sf((std::log(p.x_min) - p.mu) / p.sigma);
}

// ln x of a truncated lognormal at the given log-survival probability.
double lnt_from_log_survival(const TruncLognormalParams& p, double log_survival) {
  const double target = log_survival + lnt_log_mass(p);
  double z;
  if (target > -700.0) {
    z = sp::norm_isf(std::exp(target));
  } else {
    // Survival below double range: Newton on ln(1 - Phi(z)) = target.
    z = std::sqrt(-2.0 * target);
    for (int i = 0; i < 60; ++i) {
      const double step = (sp::log_norm_sf(z) - target) / sp::inverse_mills(z);
      z += step;
      if (std::abs(step) < 1e-14 * std::abs(z)) break;
    }
  }
  return std::max(p.mu + p.sigma * z, std::log(p.x_min));
}

double mixture_quantile_of_log(const MixtureParams& p, double q) {
  const double zq = sp::norm_quantile(q);
  double lo = kInf;
  double hi = -kInf;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p.weights[j] <= 0.0) continue;
    const double yj = p.components[j].mu + p.components[j].sigma * zq;
    lo = std::min(lo, yj);
    hi = std::max(hi, yj);
  }
  if (hi - lo <= 0.0) return lo;
  // The mixture CDF lies between its components' CDFs, so [lo, hi] brackets.
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf_of_log(p, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

MixtureParams MixtureParams::from_free_weights(std::vector<LognormalParams> components,
                                               const std::vector<double>& free_weights) {
  if (free_weights.size() + 1 != components.size()) {
    throw DomainError("mixture of m components needs m - 1 free weights");
  }
  MixtureParams p;
  p.components = std::move(components);
  p.weights = free_weights;
  p.weights.push_back(1.0 - std::accumulate(free_weights.begin(), free_weights.end(), 0.0));
  return p;
}

std::vector<double> MixtureParams::free_weights() const {
  return {weights.begin(), weights.end() - 1};
}

MixtureParams MixtureParams::canonical() const {
  std::vector<std::size_t> order(size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return components[a].mu > components[b].mu;
  });
  MixtureParams out;
  for (std::size_t j : order) {
    out.components.push_back(components[j]);
    out.weights.push_back(weights[j]);
  }
  return out;
}

DistributionModel::DistributionModel(ModelParams params, Space space)
    : params_(std::move(params)), space_(space) {
  std::visit([](auto& p) { validate(p); }, params_);
}

std::string DistributionModel::name() const {
  const bool log = space_ == Space::Log;
  return std::visit(
      Overloaded{
          [&](const StexpParams&) { return std::string(log ? "ESTEXP" : "STEXP"); },
          [&](const LognormalParams&) { return std::string(log ? "N" : "LN"); },
          [&](const MixtureParams& p) {
            return std::to_string(p.size()) + (log ? "N" : "LN");
          },
          [&](const ParetoParams&) { return std::string(log ? "EXP" : "Pareto"); },
          [&](const TruncLognormalParams&) { return std::string(log ? "Nt" : "LNt"); },
      },
      params_);
}

int DistributionModel::parameter_count() const {
  return std::visit(Overloaded{
                        [](const StexpParams&) { return 2; },
                        [](const LognormalParams&) { return 2; },
                        [](const MixtureParams& p) { return 3 * static_cast<int>(p.size()) - 1; },
                        [](const ParetoParams&) { return 1; },
                        [](const TruncLognormalParams&) { return 2; },
                    },
                    params_);
}

double DistributionModel::support_lower() const {
  if (space_ == Space::Log) return lower_log_bound(params_);
  return std::visit(Overloaded{
                        [](const ParetoParams& p) { return p.x_min; },
                        [](const TruncLognormalParams& p) { return p.x_min; },
                        [](const auto&) { return 0.0; },
                    },
                    params_);
}

// ---------------------------------------------------------------------------
// Log-coordinate primitives

double log_density_of_log(const ModelParams& params, double y) {
  return std::visit(
      Overloaded{
          [&](const StexpParams& p) {
            const double t = p.gamma * (y - std::log(p.eta));
            return std::log(p.gamma) + t - std::exp(t);
          },
          [&](const LognormalParams& p) {
            return sp::log_norm_pdf((y - p.mu) / p.sigma) - std::log(p.sigma);
          },
          [&](const MixtureParams& p) {
            double terms[16];
            std::vector<double> heap;
            double* t = terms;
            if (p.size() > 16) {
              heap.resize(p.size());
              t = heap.data();
            }
            std::size_t k = 0;
            for (std::size_t j = 0; j < p.size(); ++j) {
              if (p.weights[j] <= 0.0) continue;
              const auto& c = p.components[j];
              t[k++] = std::log(p.weights[j]) + sp::log_norm_pdf((y - c.mu) / c.sigma) -
                       std::log(c.sigma);
            }
            return sp::log_sum_exp({t, k});
          },
          [&](const ParetoParams& p) {
            const double rate = p.alpha - 1.0;
            return std::log(rate) - rate * (y - std::log(p.x_min));
          },
          [&](const TruncLognormalParams& p) {
            return sp::log_norm_pdf((y - p.mu) / p.sigma) - std::log(p.sigma) - lnt_log_mass(p);
          },
      },
      params);
}

double log_sf_of_log(const ModelParams& params, double y) {
  if (y < lower_log_bound(params)) return 0.0;
  return std::visit(
      Overloaded{
          [&](const StexpParams& p) { return -std::exp(p.gamma * (y - std::log(p.eta))); },
          [&](const LognormalParams& p) { return sp::log_norm_sf((y - p.mu) / p.sigma); },
          [&](const MixtureParams& p) {
            std::vector<double> t;
            t.reserve(p.size());
            for (std::size_t j = 0; j < p.size(); ++j) {
              if (p.weights[j] <= 0.0) continue;
              const auto& c = p.components[j];
              t.push_back(std::log(p.weights[j]) + sp::log_norm_sf((y - c.mu) / c.sigma));
            }
            return std::min(0.0, sp::log_sum_exp(t));
          },
          [&](const ParetoParams& p) { return -(p.alpha - 1.0) * (y - std::log(p.x_min)); },
          [&](const TruncLognormalParams& p) {
            return std::min(0.0, sp::log_norm_sf((y - p.mu) / p.sigma) - lnt_log_mass(p));
          },
      },
      params);
}

double cdf_of_log(const ModelParams& params, double y) {
  if (y < lower_log_bound(params)) return 0.0;
  if (const auto* p = std::get_if<LognormalParams>(&params)) {
    return sp::norm_cdf((y - p->mu) / p->sigma);
  }
  if (const auto* p = std::get_if<MixtureParams>(&params)) {
    double acc = 0.0;
    for (std::size_t j = 0; j < p->size(); ++j) {
      const auto& c = p->components[j];
      acc += p->weights[j] * sp::norm_cdf((y - c.mu) / c.sigma);
    }
    return std::clamp(acc, 0.0, 1.0);
  }
  return -std::expm1(log_sf_of_log(params, y));
}

static double log_cdf_of_log(const ModelParams& params, double y) {
  if (y < lower_log_bound(params)) return -kInf;
  if (const auto* p = std::get_if<LognormalParams>(&params)) {
    return sp::log_norm_cdf((y - p->mu) / p->sigma);
  }
  if (const auto* p = std::get_if<MixtureParams>(&params)) {
    std::vector<double> t;
    for (std::size_t j = 0; j < p->size(); ++j) {
      if (p->weights[j] <= 0.0) continue;
      const auto& c = p->components[j];
      t.push_back(std::log(p->weights[j]) + sp::log_norm_cdf((y - c.mu) / c.sigma));
    }
    return std::min(0.0, sp::log_sum_exp(t));
  }
  const double ls = log_sf_of_log(params, y);
  return ls >= 0.0 ? -kInf : sp::log1mexp(ls);
}

double quantile_of_log(const ModelParams& params, double q) {
  if (!(q > 0.0 && q < 1.0)) {
    throw DomainError("quantile level must lie in (0, 1), got " + fmt(q));
  }
  return std::visit(
      Overloaded{
          [&](const StexpParams& p) {
            return std::log(p.eta) + std::log(-std::log1p(-q)) / p.gamma;
          },
          [&](const LognormalParams& p) { return p.mu + p.sigma * sp::norm_quantile(q); },
          [&](const MixtureParams& p) { return mixture_quantile_of_log(p, q); },
          [&](const ParetoParams& p) {
            return std::log(p.x_min) - std::log1p(-q) / (p.alpha - 1.0);
          },
          [&](const TruncLognormalParams& p) { return lnt_from_log_survival(p, std::log1p(-q)); },
      },
      params);
}

double draw_log(const ModelParams& params, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const StexpParams& p) {
            return std::log(p.eta) + std::log(rng.exponential()) / p.gamma;
          },
          [&](const LognormalParams& p) { return p.mu + p.sigma * rng.normal(); },
          [&](const MixtureParams& p) {
            const double u = rng.uniform();
            std::size_t j = 0;
            double acc = p.weights[0];
            while (u > acc && j + 1 < p.size()) acc += p.weights[++j];
            return p.components[j].mu + p.components[j].sigma * rng.normal();
          },
          [&](const ParetoParams& p) {
            return std::log(p.x_min) + rng.exponential() / (p.alpha - 1.0);
          },
          [&](const TruncLognormalParams& p) {
            return lnt_from_log_survival(p, std::log(rng.uniform()));
          },
      },
      params);
}

// ---------------------------------------------------------------------------
// Space-aware entry points

namespace {

// Validated ln x for density evaluation.
double support_log(const DistributionModel& model, double x) {
  const double lower = model.support_lower();
  if (model.space() == Space::Log) {
    if (!std::isfinite(x)) throw DomainError(model.name() + " density needs finite y");
    if (x < lower) {
      throw DomainError(model.name() + " support is y >= " + fmt(lower) + ", got " + fmt(x));
    }
    return x;
  }
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(model.name() + " support is x > 0, got " + fmt(x));
  }
  if (x < lower) {
    throw DomainError(model.name() + " support is x >= x_min = " + fmt(lower) + ", got " +
                      fmt(x));
  }
  return std::max(std::log(x), lower_log_bound(model.params()));
}

double as_log(const DistributionModel& model, double x) {
  if (model.space() == Space::Log) return x;
  if (x <= 0.0) return -kInf;
  return std::log(x);
}

}  // namespace

double log_pdf(const DistributionModel& model, double x) {
  const double y = support_log(model, x);
  const double lf = log_density_of_log(model.params(), y);
  return model.space() == Space::Log ? lf : lf - y;
}

double pdf(const DistributionModel& model, double x) { return std::exp(log_pdf(model, x)); }

double cdf(const DistributionModel& model, double x) {
  if (std::isnan(x)) throw DomainError("cdf of NaN");
  const double y = as_log(model, x);
  if (y == -kInf) return 0.0;
  if (y == kInf) return 1.0;
  return cdf_of_log(model.params(), y);
}

double log_cdf(const DistributionModel& model, double x) {
  const double y = as_log(model, x);
  if (y == -kInf) return -kInf;
  if (y == kInf) return 0.0;
  return log_cdf_of_log(model.params(), y);
}

double log_sf(const DistributionModel& model, double x) {
  const double y = as_log(model, x);
  if (y == -kInf) return 0.0;
  if (y == kInf) return -kInf;
  return log_sf_of_log(model.params(), y);
}

double quantile(const DistributionModel& model, double q) {
  const double y = quantile_of_log(model.params(), q);
  return model.space() == Space::Log ? y : std::exp(y);
}

Sample sample(const DistributionModel& model, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> logs(n);
  for (double& y : logs) y = draw_log(model.params(), rng);
  return Sample::from_logs(std::move(logs));
}

DistributionModel to_log_space(const DistributionModel& model) {
  return model.with_space(Space::Log);
}

ExponentialImage exponential_image(const ParetoParams& params) {
  return {params.alpha - 1.0, std::log(params.x_min)};
}

std::vector<double> responsibilities(const MixtureParams& mixture, double y) {
  const std::size_t m = mixture.size();
  std::vector<double> logw(m, -kInf);
  for (std::size_t j = 0; j < m; ++j) {
    if (mixture.weights[j] <= 0.0) continue;
    const auto& c = mixture.components[j];
    logw[j] = std::log(mixture.weights[j]) + sp::log_norm_pdf((y - c.mu) / c.sigma) -
              std::log(c.sigma);
  }
  const double total = sp::log_sum_exp(logw);
  std::vector<double> tau(m);
  double sum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    tau[j] = std::exp(logw[j] - total);
    sum += tau[j];
  }
  for (double& t : tau) t /= sum;
  return tau;
}

}  // namespace tailfit
