#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailfit/errors.hpp"
#include "tailfit/model.hpp"
#include "tailfit/sample.hpp"

namespace tailfit {

/// The six estimable model shapes; 2LN and 3LN share the Mixture family.
enum class ModelKind { Stexp, Lognormal, Mix2, Mix3, Pareto, TruncLognormal };

/// CLI token: "stexp", "ln", "2ln", "3ln", "pareto", "lnt".
std::string_view kind_token(ModelKind kind);
/// Display name: "STEXP", "LN", "2LN", "3LN", "Pareto", "LNt".
std::string_view kind_label(ModelKind kind);
/// Throws InputError for unknown tokens.
ModelKind parse_model_kind(std::string_view token);
/// True for Pareto and LNt, which are fitted on a tail above x_min.
bool is_tail_kind(ModelKind kind);

struct FitDiagnostics {
  int iterations = 0;
  bool converged = false;
  /// Finite-difference gradient of ln L at the optimum, each component scaled
  /// by max(|theta_i|, 1) / n.
  double gradient_norm = 0.0;
  int em_restarts_used = 0;
  int degenerate_restarts = 0;
  int ascent_violations = 0;
  /// STEXP maximizer pinned at gamma -> 0 or gamma -> 1.
  bool boundary_fit = false;
  /// LNt optimum on the edge of the search box (the Pareto-limit ridge).
  bool at_bound = false;
  bool ridge_suspected = false;
  /// Per-iteration ln L of the retained EM run (when requested).
  std::vector<double> log_likelihood_trace;
};

struct FitResult {
  explicit FitResult(DistributionModel fitted) : model(std::move(fitted)) {}

  DistributionModel model;
  double log_likelihood = 0.0;
  /// Aligned with free_parameters(model).
  std::vector<double> std_errors;
  bool std_errors_available = false;
  int k = 0;
  FitDiagnostics diagnostics;
};

/// Thrown when the LNt optimizer finds no interior optimum; carries the best
/// point found on the boundary of the search box.
class OptimizerFailure : public FitError {
 public:
  OptimizerFailure(const std::string& what, FitResult best)
      : FitError(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

struct MixtureConfig {
  /// Starting points tried: one nested start, one quantile split, the rest random.
  int restarts = 20;
  int max_iterations = 2000;
  /// Converged once |delta ln L| < tolerance on `stable_iterations` consecutive steps.
  double tolerance = 1e-8;
  int stable_iterations = 3;
  /// Every start runs this many iterations; only the `refine_top` best continue.
  int screen_iterations = 100;
  int refine_top = 3;
  /// Squared extrapolation between EM maps, kept only when it raises ln L.
  bool accelerate = true;
  std::uint64_t seed = 0;
  /// A fit with m or m - 1 components used as the nested start.
  std::optional<MixtureParams> warm_start;
  bool record_trace = false;
  /// Off for bootstrap refits, which never read them.
  bool std_errors = true;
  unsigned threads = 0;
};

struct TruncConfig {
  int starts = 12;
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;
  /// Return the best boundary point instead of throwing OptimizerFailure.
  bool allow_boundary = false;
};

FitResult fit_lognormal(const Sample& sample);
FitResult fit_stexp(const Sample& sample);
FitResult fit_mixture(const Sample& sample, int m, const MixtureConfig& config = {});
FitResult fit_pareto(const Sample& sample, double x_min);
FitResult fit_trunc_lognormal(const Sample& sample, double x_min, const TruncConfig& config = {});

struct FitOptions {
  /// Cutoff for the tail kinds; 0 means "the sample minimum".
  double x_min = 0.0;
  MixtureConfig mixture;
  TruncConfig trunc;
};

FitResult fit(ModelKind kind, const Sample& sample, const FitOptions& options = {});

/// Sum of log_pdf over the sample. Throws DomainError on a support violation.
double log_likelihood(const DistributionModel& model, const Sample& sample);

/// Free parameters in reporting order: STEXP (gamma, eta); LN and LNt
/// (mu, sigma); mLN (mu_1, sigma_1, ..., mu_m, sigma_m, p_1, ..., p_{m-1});
/// Pareto (alpha).
std::vector<double> free_parameters(const DistributionModel& model);
std::vector<std::string> parameter_names(const DistributionModel& model);
/// Same family, cutoff, and space with new free parameters; throws DomainError
/// when they are invalid.
DistributionModel with_free_parameters(const DistributionModel& model,
                                       std::span<const double> theta);

struct StdErrors {
  std::vector<double> values;
  bool available = false;
};

/// Square roots of the diagonal of the inverse observed information, with the
/// information from central second differences of ln L (step
/// max(1e-5, 1e-4 |theta_i|)). Unavailable when it is not positive definite.
StdErrors standard_errors(const DistributionModel& model, const Sample& sample);
StdErrors standard_errors(const FitResult& fit, const Sample& sample);

/// Central-difference gradient of ln L with respect to free_parameters.
std::vector<double> log_likelihood_gradient(const DistributionModel& model, const Sample& sample);

}  // namespace tailfit
