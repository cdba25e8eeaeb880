#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>

#include "tailfit/errors.hpp"
#include "tailfit/fitting.hpp"
#include "tailfit/model.hpp"

using namespace tailfit;

namespace {

constexpr double kPi = std::numbers::pi;

struct LogMoments {
  double mean;
  double sd_ml;
};

LogMoments moments(const Sample& s) {
  const auto y = s.logs();
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

double ln_closed_form(double n, double mu, double sigma_ml) {
  return -n * (std::log(std::sqrt(2.0 * kPi) * sigma_ml) + mu + 0.5);
}

// Pareto tail with a prescribed log-mean: exponential quantiles in log space, rescaled.
Sample pareto_tail_with_log_mean(std::size_t n, double x_min, double log_mean) {
  std::vector<double> e(n);
  for (std::size_t i = 0; i < n; ++i) e[i] = -std::log(1.0 - (i + 0.5) / static_cast<double>(n));
  const double m = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(n);
  const double target = log_mean - std::log(x_min);
  std::vector<double> logs;
  for (double v : e) logs.push_back(std::log(x_min) + v * target / m);
  return Sample::from_logs(std::move(logs));
}

// ln of the truncated lognormal density, written from the definition.
double lnt_log_density(double x, double mu, double sigma, double x_min) {
  const double z = (std::log(x) - mu) / sigma;
  const double zt = (std::log(x_min) - mu) / sigma;
  const double tail = 0.5 * std::erfc(zt / std::sqrt(2.0));
  return -0.5 * z * z - std::log(x * sigma * std::sqrt(2.0 * kPi)) - std::log(tail);
}

double numeric_second_derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

}  // namespace

// ---------------------------------------------------------------------------
// Lognormal
// ---------------------------------------------------------------------------

TEST(FitLognormal, ClosedFormMatchesSummation) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = sample(DistributionModel(LognormalParams{1.0 + seed * 0.3, 0.5 + 0.1 * seed}), 500, seed);
    const auto f = fit_lognormal(s);
    const auto m = moments(s);
    const double closed = ln_closed_form(static_cast<double>(s.size()), m.mean, m.sd_ml);
    EXPECT_NEAR(f.log_likelihood, closed, 1e-8 * std::abs(closed));
    EXPECT_NEAR(log_likelihood(f.model, s), closed, 1e-8 * std::abs(closed));
    EXPECT_NEAR(f.model.as<LognormalParams>().mu, m.mean, 1e-12);
    EXPECT_NEAR(f.model.as<LognormalParams>().sigma, m.sd_ml, 1e-12);
    EXPECT_EQ(f.k, 2);
  }
}

TEST(FitLognormal, CanadaSummaryReconstruction) {
  const double n = 1238, mean = 6.548, sd = 2.007;
  const double sigma_ml = sd * std::sqrt((n - 1.0) / n);
  EXPECT_NEAR(ln_closed_form(n, mean, sigma_ml), -10725.4, 1e-3 * n);
}

TEST(FitLognormal, ConstantLogsAreDegenerate) {
  const Sample s({std::numbers::e, std::numbers::e, std::numbers::e, std::numbers::e});
  EXPECT_THROW(fit_lognormal(s), DegenerateSampleError);
  EXPECT_THROW(fit_lognormal(Sample({3.0})), InsufficientSampleError);
}

TEST(FitLognormal, Recovery) {
  const auto s = sample(DistributionModel(LognormalParams{2.0, 0.5}), 100000, 1);
  EXPECT_NEAR(fit_lognormal(s).model.as<LognormalParams>().mu, 2.0, 0.01);
}

TEST(FitLognormal, StandardErrorsMatchNumericInformation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = sample(DistributionModel(LognormalParams{3.0, 1.2}), 400, 100 + seed);
    const auto f = fit_lognormal(s);
    const double sigma = f.model.as<LognormalParams>().sigma;
    const double n = static_cast<double>(s.size());
    const auto numeric = standard_errors(f.model, s);
    ASSERT_TRUE(numeric.available);
    EXPECT_NEAR(numeric.values[0], sigma / std::sqrt(n), 0.02 * sigma / std::sqrt(n));
    EXPECT_NEAR(numeric.values[1], sigma / std::sqrt(2.0 * n), 0.02 * sigma / std::sqrt(2.0 * n));
    EXPECT_NEAR(f.std_errors[0], sigma / std::sqrt(n), 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Stretched exponential
// ---------------------------------------------------------------------------

TEST(FitStexp, Recovery) {
  const auto s = sample(DistributionModel(StexpParams{0.45, 2000.0}), 100000, 2);
  const auto f = fit_stexp(s);
  EXPECT_NEAR(f.model.as<StexpParams>().gamma, 0.45, 0.01);
  EXPECT_NEAR(f.model.as<StexpParams>().eta, 2000.0, 100.0);
  EXPECT_FALSE(f.diagnostics.boundary_fit);
  EXPECT_TRUE(f.std_errors_available);
  EXPECT_LT(f.diagnostics.gradient_norm, 1e-4);
}

TEST(FitStexp, ProfileEtaIsStationary) {
  const auto s = sample(DistributionModel(StexpParams{0.6, 50.0}), 2000, 3);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 20; ++i) {
    const double gamma = u(gen);
    double acc = 0.0;
    for (double x : s.values()) acc += std::pow(x, gamma);
    const double eta = std::pow(acc / static_cast<double>(s.size()), 1.0 / gamma);
    const double h = 1e-5 * eta;
    const double up = log_likelihood(DistributionModel(StexpParams{gamma, eta + h}), s);
    const double down = log_likelihood(DistributionModel(StexpParams{gamma, eta - h}), s);
    const double slope = (up - down) / (2.0 * h);
    // Scale by eta / n so the check is dimensionless.
    EXPECT_LT(std::abs(slope) * eta / static_cast<double>(s.size()), 1e-6) << "gamma " << gamma;
  }
}

TEST(FitStexp, ProfileMaximumBeatsNeighbours) {
  const auto s = sample(DistributionModel(StexpParams{0.45, 2000.0}), 5000, 5);
  const auto f = fit_stexp(s);
  const auto p = f.model.as<StexpParams>();
  for (double dg : {-1e-3, 1e-3}) {
    for (double de : {-0.01, 0.0, 0.01}) {
      const DistributionModel other(StexpParams{p.gamma + dg, p.eta * (1.0 + de)});
      EXPECT_LE(log_likelihood(other, s), f.log_likelihood + 1e-9);
    }
  }
}

TEST(FitStexp, WeibullShapeAboveOneFlagsTheBoundary) {
  const auto s = sample(DistributionModel(StexpParams{1.5, 10.0}), 5000, 6);
  const auto f = fit_stexp(s);
  EXPECT_TRUE(f.diagnostics.boundary_fit);
  EXPECT_GT(f.model.as<StexpParams>().gamma, 0.99);
}

// ---------------------------------------------------------------------------
// Mixtures
// ---------------------------------------------------------------------------

class FitMixtureTest : public ::testing::Test {
 protected:
  static MixtureConfig quick(std::uint64_t seed) {
    MixtureConfig c;
    c.restarts = 6;
    c.seed = seed;
    return c;
  }
};

TEST_F(FitMixtureTest, NestsTheLognormal) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto s = sample(DistributionModel(LognormalParams{4.0, 1.5}), 2000, 10 + seed);
    const auto ln = fit_lognormal(s);
    const auto m2 = fit_mixture(s, 2, quick(seed));
    EXPECT_GE(m2.log_likelihood, ln.log_likelihood - 1e-6);
    auto config = quick(seed);
    config.warm_start = m2.model.as<MixtureParams>();
    const auto m3 = fit_mixture(s, 3, config);
    EXPECT_GE(m3.log_likelihood, m2.log_likelihood - 1e-6);
    EXPECT_EQ(m2.k, 5);
    EXPECT_EQ(m3.k, 8);
  }
}

TEST_F(FitMixtureTest, EmTraceNeverDecreases) {
  const MixtureParams truth{{{8.5, 2.2}, {6.6, 1.7}, {4.8, 1.3}}, {0.08, 0.52, 0.40}};
  for (bool accelerate : {false, true}) {
    const auto s = sample(DistributionModel(truth), 3000, 21);
    auto config = quick(1);
    config.record_trace = true;
    config.accelerate = accelerate;
    const auto f = fit_mixture(s, 3, config);
    const auto& trace = f.diagnostics.log_likelihood_trace;
    ASSERT_GT(trace.size(), 2u);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      EXPECT_GE(trace[i], trace[i - 1] - 1e-9 * std::abs(trace[i - 1])) << "step " << i;
    }
    EXPECT_EQ(f.diagnostics.ascent_violations, 0);
  }
}

TEST_F(FitMixtureTest, RecoversWellSeparatedComponents) {
  const MixtureParams truth{{{2.0, 0.5}, {6.0, 0.8}}, {0.4, 0.6}};
  const auto s = sample(DistributionModel(truth), 10000, 22);
  const auto f = fit_mixture(s, 2, quick(2));
  const auto p = f.model.as<MixtureParams>();
  EXPECT_NEAR(p.components[0].mu, 6.0, 0.05);
  EXPECT_NEAR(p.components[1].mu, 2.0, 0.05);
  EXPECT_NEAR(p.weights[0], 0.6, 0.02);
  EXPECT_TRUE(f.diagnostics.converged);
  EXPECT_LT(f.diagnostics.gradient_norm, 1e-4);
  EXPECT_TRUE(f.std_errors_available);
}

TEST_F(FitMixtureTest, OutputIsCanonical) {
  const auto s = sample(DistributionModel(MixtureParams{{{1.0, 0.5}, {5.0, 0.5}}, {0.5, 0.5}}), 2000, 23);
  const auto p = fit_mixture(s, 2, quick(3)).model.as<MixtureParams>();
  EXPECT_GT(p.components[0].mu, p.components[1].mu);
}

TEST_F(FitMixtureTest, SameSeedSameFit) {
  const auto s = sample(DistributionModel(LognormalParams{3.0, 2.0}), 1500, 24);
  const auto a = fit_mixture(s, 2, quick(9));
  auto threaded = quick(9);
  threaded.threads = 3;
  const auto b = fit_mixture(s, 2, threaded);
  EXPECT_EQ(a.log_likelihood, b.log_likelihood);
  EXPECT_EQ(free_parameters(a.model), free_parameters(b.model));
}

TEST_F(FitMixtureTest, StandardErrorsCanBeSkipped) {
  const auto s = sample(DistributionModel(MixtureParams{{{2.0, 0.5}, {6.0, 0.8}}, {0.4, 0.6}}), 1000, 25);
  auto config = quick(4);
  const auto with = fit_mixture(s, 2, config);
  config.std_errors = false;
  const auto without = fit_mixture(s, 2, config);
  EXPECT_TRUE(with.std_errors_available);
  EXPECT_FALSE(without.std_errors_available);
  EXPECT_TRUE(without.std_errors.empty());
  EXPECT_EQ(free_parameters(with.model), free_parameters(without.model));
}

TEST_F(FitMixtureTest, SpikesOnTiedValuesAreDegenerate) {
  std::vector<double> values;
  for (int i = 0; i < 20; ++i) {
    values.push_back(1.0);
    values.push_back(2.0);
    values.push_back(3.0);
  }
  const Sample s(values);
  MixtureConfig config;
  config.restarts = 1;
  config.warm_start = MixtureParams{{{0.0, 0.01}, {std::log(2.0), 0.01}, {std::log(3.0), 0.01}},
                                    {1.0 / 3, 1.0 / 3, 1.0 / 3}};
  EXPECT_THROW(fit_mixture(s, 3, config), DegenerateMixtureError);
}

TEST_F(FitMixtureTest, NeedsTenObservationsPerComponent) {
  const auto s = sample(DistributionModel(LognormalParams{0, 1}), 29, 25);
  EXPECT_THROW(fit_mixture(s, 3), InsufficientSampleError);
  EXPECT_THROW(fit_mixture(s, 1), DomainError);
}

// ---------------------------------------------------------------------------
// Pareto
// ---------------------------------------------------------------------------

TEST(FitPareto, CanadaTailIdentity) {
  const double x_min = 4000.0, log_mean = 9.424;
  const auto tail = pareto_tail_with_log_mean(247, x_min, log_mean);
  const auto f = fit_pareto(tail, x_min);
  const double alpha = f.model.as<ParetoParams>().alpha;
  EXPECT_NEAR(alpha, 1.0 + 1.0 / (log_mean - std::log(x_min)), 1e-10);
  EXPECT_NEAR(alpha, 1.885, 5e-4);
  // Rounding of the three-decimal log-mean moves ln L by about 0.25.
  EXPECT_NEAR(f.log_likelihood, -2604.81, 0.5);
  EXPECT_EQ(f.k, 1);
}

TEST(FitPareto, TwoPointsGiveAlphaTwo) {
  const double x_min = 5.0;
  const Sample s({x_min * std::numbers::e, x_min * std::numbers::e});
  EXPECT_NEAR(fit_pareto(s, x_min).model.as<ParetoParams>().alpha, 2.0, 1e-12);
}

TEST(FitPareto, ClosedFormMatchesSummation) {
  const auto s = sample(DistributionModel(ParetoParams{2.2, 3.0}), 1000, 30);
  const auto f = fit_pareto(s, 3.0);
  const double a = f.model.as<ParetoParams>().alpha;
  const double n = static_cast<double>(s.size());
  const double closed = n * std::log(a - 1) - n * std::log(3.0) - a * n / (a - 1);
  EXPECT_NEAR(f.log_likelihood, closed, 1e-8 * std::abs(closed));
  EXPECT_NEAR(log_likelihood(f.model, s), closed, 1e-8 * std::abs(closed));
}

TEST(FitPareto, StandardErrorMatchesNumericHessian) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const double x_min = 2.0;
    const auto s = sample(DistributionModel(ParetoParams{1.5 + 0.2 * seed, x_min}), 300, 40 + seed);
    const auto f = fit_pareto(s, x_min);
    const double a = f.model.as<ParetoParams>().alpha;
    const auto lnl = [&](double alpha) {
      return log_likelihood(DistributionModel(ParetoParams{alpha, x_min}), s);
    };
    const double info = -numeric_second_derivative(lnl, a, 1e-4);
    const double numeric = 1.0 / std::sqrt(info);
    EXPECT_NEAR(f.std_errors[0], (a - 1) / std::sqrt(300.0), 1e-12);
    EXPECT_NEAR(f.std_errors[0], numeric, 0.02 * numeric);
  }
}

TEST(FitPareto, ObservationBelowCutoffIsADomainError) {
  const Sample s({1.0, 5.0, 9.0});
  EXPECT_THROW(fit_pareto(s, 2.0), DomainError);
  EXPECT_THROW(log_likelihood(DistributionModel(ParetoParams{2.0, 2.0}), s), DomainError);
}

// ---------------------------------------------------------------------------
// Truncated lognormal
// ---------------------------------------------------------------------------

TEST(FitTruncLognormal, Recovery) {
  const double x_min = std::exp(8.0);
  const auto s = sample(DistributionModel(TruncLognormalParams{7.0, 2.0, x_min}), 10000, 50);
  const auto f = fit_trunc_lognormal(s, x_min);
  const auto p = f.model.as<TruncLognormalParams>();
  EXPECT_NEAR(p.mu, 7.0, 0.35);
  EXPECT_NEAR(p.sigma, 2.0, 0.1);
  EXPECT_EQ(p.x_min, x_min);
  EXPECT_FALSE(f.diagnostics.at_bound);
  EXPECT_LT(f.diagnostics.gradient_norm, 1e-4);
  EXPECT_EQ(f.k, 2);
}

TEST(FitTruncLognormal, LikelihoodMatchesDirectFormula) {
  const double x_min = 100.0;
  const auto s = sample(DistributionModel(TruncLognormalParams{3.0, 1.5, x_min}), 500, 51);
  const auto f = fit_trunc_lognormal(s, x_min);
  const auto p = f.model.as<TruncLognormalParams>();
  double direct = 0.0;
  for (double x : s.values()) direct += lnt_log_density(x, p.mu, p.sigma, x_min);
  EXPECT_NEAR(f.log_likelihood, direct, 1e-8 * std::abs(direct));
}

TEST(FitTruncLognormal, RidgeApproachesPareto) {
  const double x_min = 4000.0, mu = -41.0, sigma = 7.63, alpha = 1.885;
  double worst = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = x_min * std::pow(100.0, i / 1000.0);
    const double pareto = std::log(alpha - 1) - std::log(x_min) - alpha * std::log(x / x_min);
    worst = std::max(worst, std::abs(lnt_log_density(x, mu, sigma, x_min) - pareto));
  }
  EXPECT_LT(worst, 0.03);
  const DistributionModel lnt(TruncLognormalParams{mu, sigma, x_min});
  EXPECT_NEAR(log_pdf(lnt, 2.0 * x_min), lnt_log_density(2.0 * x_min, mu, sigma, x_min), 1e-9);
}

TEST(FitTruncLognormal, ParetoDataHasNoInteriorOptimum) {
  // Exact Pareto quantiles; random Pareto samples often curve enough for an interior optimum.
  const double x_min = 10.0;
  std::vector<double> grid;
  for (int i = 0; i < 2000; ++i) grid.push_back(x_min / (1.0 - (i + 0.5) / 2000.0));
  const Sample s(grid);
  try {
    fit_trunc_lognormal(s, x_min);
    FAIL() << "expected OptimizerFailure";
  } catch (const OptimizerFailure& e) {
    EXPECT_TRUE(e.best().diagnostics.at_bound);
    EXPECT_TRUE(std::isfinite(e.best().log_likelihood));
  }
  TruncConfig lenient;
  lenient.allow_boundary = true;
  const auto f = fit_trunc_lognormal(s, x_min, lenient);
  EXPECT_TRUE(f.diagnostics.at_bound);
  // The boundary fit sits on the ridge, so it cannot be much worse than Pareto.
  EXPECT_GT(f.log_likelihood, fit_pareto(s, x_min).log_likelihood - 5.0);
}

// ---------------------------------------------------------------------------
// Shared machinery
// ---------------------------------------------------------------------------

TEST(FitGeneric, DispatchAndTokens) {
  const auto s = sample(DistributionModel(LognormalParams{5.0, 1.0}), 500, 60);
  for (auto kind : {ModelKind::Stexp, ModelKind::Lognormal, ModelKind::Mix2, ModelKind::Pareto}) {
    EXPECT_EQ(parse_model_kind(kind_token(kind)), kind);
    FitOptions options;
    options.mixture.restarts = 3;
    const auto f = fit(kind, s, options);
    EXPECT_EQ(f.model.name(), kind_label(kind));
    EXPECT_TRUE(std::isfinite(f.log_likelihood));
  }
  EXPECT_THROW(parse_model_kind("weibull"), InputError);
}

TEST(FitGeneric, GradientVanishesAtEveryOptimum) {
  const auto s = sample(DistributionModel(StexpParams{0.5, 300.0}), 3000, 61);
  FitOptions options;
  options.mixture.restarts = 4;
  for (auto kind : {ModelKind::Stexp, ModelKind::Lognormal, ModelKind::Mix2}) {
    const auto f = fit(kind, s, options);
    const auto g = log_likelihood_gradient(f.model, s);
    const auto theta = free_parameters(f.model);
    double norm = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double scaled = g[i] * std::max(std::abs(theta[i]), 1.0) / static_cast<double>(s.size());
      norm += scaled * scaled;
    }
    EXPECT_LT(std::sqrt(norm), 1e-4) << f.model.name();
  }
}

TEST(FitGeneric, FreeParameterRoundTrip) {
  const MixtureParams mix{{{5.0, 1.0}, {2.0, 0.7}, {0.5, 0.3}}, {0.2, 0.5, 0.3}};
  const DistributionModel m(mix);
  const auto theta = free_parameters(m);
  ASSERT_EQ(theta.size(), 8u);
  EXPECT_EQ(parameter_names(m).size(), 8u);
  const auto back = with_free_parameters(m, theta);
  EXPECT_EQ(free_parameters(back), theta);
  EXPECT_NEAR(back.as<MixtureParams>().weights[2], 0.3, 1e-15);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(with_free_parameters(m, bad), DomainError);
}

TEST(FitGeneric, SupportViolation) {
  const Sample s({0.5, 1.0, 2.0});
  EXPECT_THROW(log_likelihood(DistributionModel(TruncLognormalParams{0, 1, 1.0}), s), DomainError);
}
