#include "tailfit/sde.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "tailfit/errors.hpp"
#include "tailfit/gof.hpp"
#include "tailfit/random.hpp"

namespace tailfit {

std::string_view drift_token(DriftKind kind) {
  switch (kind) {
    case DriftKind::Estexp: return "estexp";
    case DriftKind::Normal: return "normal";
    case DriftKind::Exponential: return "exp";
    case DriftKind::TruncNormal: return "truncnormal";
    case DriftKind::Mix2N: return "mix2n";
    case DriftKind::Mix3N: return "mix3n";
  }
  return "?";
}

double SdeSpec::y_min() const {
  if (const auto* p = std::get_if<ParetoParams>(&target)) return std::log(p->x_min);
  if (const auto* p = std::get_if<TruncLognormalParams>(&target)) return std::log(p->x_min);
  return -std::numeric_limits<double>::infinity();
}

DistributionModel SdeSpec::target_model() const { return {target, Space::Log}; }

SdeSpec spec_for(const DistributionModel& target, double diffusion_sq) {
  if (!(diffusion_sq > 0.0) || !std::isfinite(diffusion_sq)) {
    throw DomainError("diffusion_sq must be a positive number");
  }
  SdeSpec spec;
  spec.target = target.params();
  spec.diffusion_sq = diffusion_sq;
  switch (target.family()) {
    case Family::Stexp: spec.kind = DriftKind::Estexp; break;
    case Family::Lognormal: spec.kind = DriftKind::Normal; break;
    case Family::Pareto: spec.kind = DriftKind::Exponential; break;
    case Family::TruncLognormal: spec.kind = DriftKind::TruncNormal; break;
    case Family::Mixture:
      spec.kind = target.as<MixtureParams>().size() == 3 ? DriftKind::Mix3N : DriftKind::Mix2N;
      break;
  }
  return spec;
}

SdeSpec parse_drift(std::string_view text, double diffusion_sq) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  std::vector<double> v;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      double x = 0.0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
      if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
        throw InputError("drift parameter '" + std::string(item) + "' is not a number");
      }
      v.push_back(x);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  auto need = [&](std::size_t count, const char* form) {
    if (v.size() != count) throw InputError(std::string("expected --drift ") + form);
  };
  try {
    if (name == "estexp") {
      need(2, "estexp:gamma,eta");
      return spec_for(DistributionModel(StexpParams{v[0], v[1]}), diffusion_sq);
    }
    if (name == "normal") {
      need(2, "normal:mu,sigma");
      return spec_for(DistributionModel(LognormalParams{v[0], v[1]}), diffusion_sq);
    }
    if (name == "exp") {
      need(2, "exp:alpha,ymin");
      return spec_for(DistributionModel(ParetoParams{v[0], std::exp(v[1])}), diffusion_sq);
    }
    if (name == "truncnormal") {
      need(3, "truncnormal:mu,sigma,ymin");
      return spec_for(DistributionModel(TruncLognormalParams{v[0], v[1], std::exp(v[2])}),
                      diffusion_sq);
    }
    if (name == "mix2n") {
      need(5, "mix2n:mu1,sigma1,mu2,sigma2,p1");
      return spec_for(DistributionModel(MixtureParams::from_free_weights(
                          {{v[0], v[1]}, {v[2], v[3]}}, {v[4]})),
                      diffusion_sq);
    }
    if (name == "mix3n") {
      need(8, "mix3n:mu1,sigma1,mu2,sigma2,mu3,sigma3,p1,p2");
      return spec_for(DistributionModel(MixtureParams::from_free_weights(
                          {{v[0], v[1]}, {v[2], v[3]}, {v[4], v[5]}}, {v[6], v[7]})),
                      diffusion_sq);
    }
  } catch (const DomainError& e) {
    throw InputError(std::string("invalid drift parameters: ") + e.what());
  }
  throw InputError("unknown drift '" + std::string(name) +
                   "' (expected estexp, normal, exp, truncnormal, mix2n or mix3n)");
}

namespace {

double mixture_drift(const MixtureParams& p, double a, double y) {
  const std::size_t m = p.size();
  std::array<double, 8> small{};
  std::vector<double> large;
  double* lw = small.data();
  if (m > small.size()) {
    large.resize(m);
    lw = large.data();
  }
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < m; ++j) {
    const auto& c = p.components[j];
    const double z = (y - c.mu) / c.sigma;
    lw[j] = p.weights[j] > 0.0 ? std::log(p.weights[j]) - std::log(c.sigma) - 0.5 * z * z
                               : -std::numeric_limits<double>::infinity();
    hi = std::max(hi, lw[j]);
  }
  double total = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double w = std::exp(lw[j] - hi);
    const auto& c = p.components[j];
    total += w;
    acc += w * (a / (2.0 * c.sigma * c.sigma)) * (y - c.mu);
  }
  return -acc / total;
}

}  // namespace

double drift(const SdeSpec& spec, double y) {
  const double a = spec.diffusion_sq;
  switch (spec.kind) {
    case DriftKind::Estexp: {
      const auto& p = std::get<StexpParams>(spec.target);
      return -(p.gamma * a / 2.0) * std::expm1(p.gamma * (y - std::log(p.eta)));
    }
    case DriftKind::Normal: {
      const auto& p = std::get<LognormalParams>(spec.target);
      return -(a / (2.0 * p.sigma * p.sigma)) * (y - p.mu);
    }
    case DriftKind::TruncNormal: {
      const auto& p = std::get<TruncLognormalParams>(spec.target);
      return -(a / (2.0 * p.sigma * p.sigma)) * (y - p.mu);
    }
    case DriftKind::Exponential: {
      const auto& p = std::get<ParetoParams>(spec.target);
      return -0.5 * (p.alpha - 1.0) * a;
    }
    case DriftKind::Mix2N:
    case DriftKind::Mix3N: return mixture_drift(std::get<MixtureParams>(spec.target), a, y);
  }
  return 0.0;
}

double score_identity_check(const SdeSpec& spec, const DistributionModel& target_log_model,
                            std::span<const double> y_grid) {
  const double lower = target_log_model.space() == Space::Log
                           ? target_log_model.support_lower()
                           : std::log(target_log_model.support_lower());
  const auto& params = target_log_model.params();
  auto central = [&](double y, double h) {
    return (log_density_of_log(params, y + h) - log_density_of_log(params, y - h)) / (2.0 * h);
  };
  double worst = 0.0;
  for (double y : y_grid) {
    if (y < lower + 1e-3) continue;
    const double h = 1e-4 * std::max(1.0, std::abs(y));
    const double score = (4.0 * central(y, h / 2.0) - central(y, h)) / 3.0;
    worst = std::max(worst, std::abs(2.0 * drift(spec, y) / spec.diffusion_sq - score));
  }
  return worst;
}

Sample simulate(const SdeSpec& spec, double y0, const SimConfig& config) {
  if (!(config.dt > 0.0)) throw DomainError("dt must be > 0");
  if (config.steps <= config.burn_in) throw DomainError("steps must exceed burn_in");
  if (config.thin == 0) throw DomainError("thin must be >= 1");
  const double y_min = spec.y_min();
  const bool reflect = spec.reflecting();
  if (!std::isfinite(y0) || (reflect && y0 < y_min)) throw DomainError("y0 must lie in the domain");

  Rng rng(config.seed);
  const double noise = std::sqrt(spec.diffusion_sq * config.dt);
  std::vector<double> kept;
  kept.reserve((config.steps - config.burn_in) / config.thin + 1);
  double y = y0;
  for (std::size_t step = 1; step <= config.steps; ++step) {
    const double move = drift(spec, y) * config.dt;
    if (!(std::abs(move) <= 10.0)) {
      throw StepSizeError("drift step |b dt| = " + std::to_string(std::abs(move)) + " at y = " +
                          std::to_string(y) + " exceeds 10; use a smaller dt");
    }
    y += move + noise * rng.normal();
    if (reflect && y < y_min) y = 2.0 * y_min - y;
    if (step > config.burn_in && (step - config.burn_in) % config.thin == 0) kept.push_back(y);
  }
  return Sample::from_logs(std::move(kept));
}

SimConfig recommended_config(const SdeSpec& spec, std::size_t retained, std::uint64_t seed) {
  const auto& params = spec.target;
  const double spread = 0.5 * (quantile_of_log(params, 0.8413447460685429) -
                               quantile_of_log(params, 0.15865525393145707));
  const double relax = 2.0 * spread * spread / spec.diffusion_sq;
  SimConfig cfg;
  cfg.dt = 0.01 * relax;
  cfg.thin = 50;
  cfg.burn_in = 2000;
  cfg.steps = cfg.burn_in + cfg.thin * std::max<std::size_t>(retained, 1);
  cfg.seed = seed;
  return cfg;
}

StationaryResult stationary_check(const SdeSpec& spec, const DistributionModel& target_log_model,
                                  const SimConfig& config, double threshold) {
  const double y0 = quantile_of_log(spec.target, 0.5);
  const Sample draws = simulate(spec, y0, config);
  StationaryResult out;
  out.retained = draws.size();
  out.ks_distance = ks_stat(target_log_model.with_space(Space::Log), draws);
  out.pass = out.ks_distance < threshold;
  return out;
}

}  // namespace tailfit
