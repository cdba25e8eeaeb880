#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "tailfit/sample.hpp"

namespace tailfit {

/// Stretched exponential: f(x) = (gamma/eta) (x/eta)^(gamma-1) exp(-(x/eta)^gamma).
/// Fits keep 0 < gamma < 1; evaluation accepts any gamma > 0.
struct StexpParams {
  double gamma;
  double eta;
};

/// Lognormal with mu and sigma the mean and SD of ln(x).
struct LognormalParams {
  double mu;
  double sigma;
};

/// Finite mixture of lognormals. `weights` holds all m weights (the last is
/// 1 - sum of the others); construct through from_free_weights when only the
/// m - 1 free weights are at hand.
struct MixtureParams {
  std::vector<LognormalParams> components;
  std::vector<double> weights;

  static MixtureParams from_free_weights(std::vector<LognormalParams> components,
                                         const std::vector<double>& free_weights);

  std::size_t size() const { return components.size(); }
  /// p_1 .. p_{m-1}.
  std::vector<double> free_weights() const;
  /// Components sorted by mu descending, weights permuted alongside.
  MixtureParams canonical() const;
};

/// Pareto (power law) on [x_min, inf): f(x) = (alpha-1)/x_min (x/x_min)^(-alpha).
struct ParetoParams {
  double alpha;
  double x_min;
};

/// Lognormal restricted to [x_min, inf) and renormalized by its upper-tail mass.
struct TruncLognormalParams {
  double mu;
  double sigma;
  double x_min;
};

using ModelParams =
    std::variant<StexpParams, LognormalParams, MixtureParams, ParetoParams, TruncLognormalParams>;

enum class Family { Stexp, Lognormal, Mixture, Pareto, TruncLognormal };

/// Size space describes x > 0; log space describes y = ln x with density
/// f_log(y) = f_size(e^y) e^y (ESTEXP, N, mN, EXP, Nt).
enum class Space { Size, Log };

class DistributionModel {
 public:
  /// Validates the parameters; throws DomainError on violation.
  DistributionModel(ModelParams params, Space space = Space::Size);

  Family family() const { return static_cast<Family>(params_.index()); }
  Space space() const { return space_; }
  const ModelParams& params() const { return params_; }

  template <class T>
  const T& as() const {
    return std::get<T>(params_);
  }

  /// "STEXP", "LN", "2LN", "3LN", "Pareto", "LNt"; log-space images are named
  /// "ESTEXP", "N", "2N", "3N", "EXP", "Nt".
  std::string name() const;

  /// Number of estimated parameters as counted by the information criteria.
  /// The Pareto/LNt cutoff is selected from the data and not counted.
  int parameter_count() const;

  /// Lower end of the support in this model's own coordinate
  /// (0 or x_min in size space, -inf or ln x_min in log space).
  double support_lower() const;

  DistributionModel with_space(Space space) const { return {params_, space}; }

 private:
  ModelParams params_;
  Space space_;
};

/// Density. Throws DomainError outside the (closed) support.
double pdf(const DistributionModel& model, double x);
/// ln pdf, evaluated without forming the density.
double log_pdf(const DistributionModel& model, double x);
/// Distribution function; clamps to 0 below the support.
double cdf(const DistributionModel& model, double x);
/// ln cdf and ln(1 - cdf), accurate in the far tails.
double log_cdf(const DistributionModel& model, double x);
double log_sf(const DistributionModel& model, double x);
/// Inverse CDF; throws DomainError unless 0 < q < 1.
double quantile(const DistributionModel& model, double q);

/// Density of y = ln x for the model's parameters, whatever its space. These
/// are the primitives every space-specific function is built on.
double log_density_of_log(const ModelParams& params, double y);
double cdf_of_log(const ModelParams& params, double y);
double log_sf_of_log(const ModelParams& params, double y);
double quantile_of_log(const ModelParams& params, double q);

/// n i.i.d. draws, deterministic in the seed. The returned Sample holds the
/// sizes e^y and, in logs(), the draws of ln x; for a log-space model
/// logs() are the draws themselves.
Sample sample(const DistributionModel& model, std::size_t n, std::uint64_t seed);

class Rng;
/// One draw of ln x.
double draw_log(const ModelParams& params, Rng& rng);

/// The log-space image of a size-space model.
DistributionModel to_log_space(const DistributionModel& model);

/// Rate and origin of the exponential law a Pareto becomes in log space.
struct ExponentialImage {
  double rate;
  double origin;
};
ExponentialImage exponential_image(const ParetoParams& params);

/// Posterior component probabilities tau_j(y) of a normal mixture in log space.
std::vector<double> responsibilities(const MixtureParams& mixture, double y);

}  // namespace tailfit
