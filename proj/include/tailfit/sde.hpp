#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tailfit/model.hpp"

namespace tailfit {

/// Drift catalog. Each entry is the drift whose diffusion, with constant
/// squared diffusion coefficient a, is stationary at the matching log-space law.
enum class DriftKind { Estexp, Normal, Exponential, TruncNormal, Mix2N, Mix3N };

std::string_view drift_token(DriftKind kind);  // "estexp", "normal", "exp", "truncnormal", "mix2n", "mix3n"

struct SdeSpec {
  DriftKind kind = DriftKind::Normal;
  /// Parameters of the stationary law (size-space parametrization; the
  /// process lives in y = ln x).
  ModelParams target;
  /// The constant a(y) > 0.
  double diffusion_sq = 1.0;

  bool reflecting() const { return kind == DriftKind::Exponential || kind == DriftKind::TruncNormal; }
  /// ln x_min for the half-line entries, -inf otherwise.
  double y_min() const;
  /// The stationary law as a log-space model.
  DistributionModel target_model() const;
};

/// Catalog entry for a log-space target: ESTEXP, N, 2N/3N (any m >= 2), EXP, Nt.
/// Throws DomainError if diffusion_sq <= 0.
SdeSpec spec_for(const DistributionModel& target, double diffusion_sq = 1.0);

/// Parses "estexp:gamma,eta", "normal:mu,sigma", "exp:alpha,ymin",
/// "truncnormal:mu,sigma,ymin", "mix2n:mu1,sigma1,mu2,sigma2,p1" and
/// "mix3n:mu1,sigma1,mu2,sigma2,mu3,sigma3,p1,p2". Throws InputError.
SdeSpec parse_drift(std::string_view text, double diffusion_sq = 1.0);

/// b(y). Normal and TruncNormal use -(a / (2 sigma^2)) (y - mu), which is
/// -(y - mu) / 2 when a = sigma^2.
double drift(const SdeSpec& spec, double y);

/// max over the grid of |2 b(y) / a - d/dy ln f(y)|, the derivative taken by
/// Richardson-extrapolated central differences. Grid points closer than 1e-3
/// to a lower support bound are skipped.
double score_identity_check(const SdeSpec& spec, const DistributionModel& target_log_model,
                            std::span<const double> y_grid);

struct SimConfig {
  double dt = 0.01;
  std::size_t steps = 1'000'000;
  std::size_t burn_in = 100'000;
  std::size_t thin = 10;
  std::uint64_t seed = 0;
};

/// Euler-Maruyama, reflecting at y_min for the half-line entries; keeps every
/// thin-th state after burn_in. The returned Sample's logs() are the states.
/// Throws StepSizeError when |b dt| > 10 and DomainError on a bad config.
Sample simulate(const SdeSpec& spec, double y0, const SimConfig& config);

/// A configuration scaled to the target: dt is 1% of the relaxation time
/// 2 s^2 / a (s the target's log-scale spread), retained states half a
/// relaxation time apart, `retained` of them.
SimConfig recommended_config(const SdeSpec& spec, std::size_t retained = 100'000,
                             std::uint64_t seed = 0);

struct StationaryResult {
  double ks_distance = 0.0;
  std::size_t retained = 0;
  bool pass = false;
};

/// Simulates from the target's median and compares the retained draws with
/// target_log_model by the KS distance.
StationaryResult stationary_check(const SdeSpec& spec, const DistributionModel& target_log_model,
                                  const SimConfig& config, double threshold = 0.02);

}  // namespace tailfit
