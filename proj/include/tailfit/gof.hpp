#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailfit/fitting.hpp"

namespace tailfit {

enum class GofKind { KS, CM, AD };

std::string_view gof_token(GofKind kind);  // "ks", "cm", "ad"
GofKind parse_gof_kind(std::string_view token);  // throws InputError

/// Statistics from sorted probability-integral transforms u_(1) <= ... <= u_(n).
double ks_from_uniforms(std::span<const double> u);
double cm_from_uniforms(std::span<const double> u);
/// u clamped to [1e-12, 1 - 1e-12].
double ad_from_uniforms(std::span<const double> u);
double statistic_from_uniforms(GofKind kind, std::span<const double> u);

/// Model CDF at each (sorted) observation. Throws DomainError when an
/// observation lies below the support.
std::vector<double> uniforms(const DistributionModel& model, const Sample& sample);

double ks_stat(const DistributionModel& model, const Sample& sample);
double cm_stat(const DistributionModel& model, const Sample& sample);
double ad_stat(const DistributionModel& model, const Sample& sample);

struct GofReport {
  GofKind kind = GofKind::KS;
  double observed = 0.0;
  /// Replicates requested.
  int replicates = 0;
  /// Statistics of the replicates that refitted successfully.
  std::vector<double> synthetic_stats;
  double p_value = 1.0;
  std::uint64_t seed = 0;
  int dropped = 0;
  /// Set when more than 5% of the replicates were dropped.
  bool unreliable = false;
  std::string warning;
};

/// Estimator used by the bootstrap. `generator` is null for the observed data
/// and points at the model the replicate was drawn from otherwise (usable as
/// a starting point). Throwing marks the replicate as dropped.
using GofFitter = std::function<DistributionModel(const Sample& data, const DistributionModel* generator,
                                                  std::uint64_t seed)>;

/// Parametric bootstrap with re-estimation: the observed statistic is
/// computed under fitter(sample); each replicate r draws n points from that
/// fit with sub-seed derive_seed(seed, r), refits, and recomputes. One pass
/// serves every requested statistic. p = (1 + #{synthetic >= observed}) /
/// (valid + 1).
std::vector<GofReport> mc_pvalues(const Sample& sample, const GofFitter& fitter,
                                  std::span<const GofKind> kinds, int replicates,
                                  std::uint64_t seed, unsigned threads = 0);

/// Fitter for a model kind. Replicate refits of mixtures start from the
/// generating fit and use `replicate_restarts` EM starts (0: as in
/// options); tail kinds keep the cutoff fixed at options.x_min (or the
/// observed sample minimum when 0).
GofFitter make_fitter(ModelKind kind, const FitOptions& options = {}, int replicate_restarts = 0);

GofReport mc_pvalue(ModelKind kind, const Sample& sample, GofKind statistic, int replicates = 350,
                    std::uint64_t seed = 0, const FitOptions& options = {}, unsigned threads = 0);

}  // namespace tailfit
