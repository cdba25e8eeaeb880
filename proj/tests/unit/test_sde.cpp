#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "tailfit/errors.hpp"
#include "tailfit/sde.hpp"

using namespace tailfit;

namespace {

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  return g;
}

struct Catalog {
  const char* name;
  SdeSpec spec;
};

std::vector<Catalog> six_catalogs(double a) {
  return {
      {"estexp", spec_for(to_log_space(DistributionModel(StexpParams{0.45, 2000.0})), a)},
      {"normal", spec_for(DistributionModel(LognormalParams{0.0, 1.0}, Space::Log), a)},
      {"exp", spec_for(to_log_space(DistributionModel(ParetoParams{2.0, 1.0})), a)},
      {"truncnormal", spec_for(to_log_space(DistributionModel(TruncLognormalParams{1.0, 1.5, std::exp(0.5)})), a)},
      {"mix2n", spec_for(to_log_space(DistributionModel(MixtureParams{{{7.363, 1.972}, {4.954, 1.381}},
                                                                       {0.696, 0.304}})),
                         a)},
      {"mix3n", spec_for(to_log_space(DistributionModel(MixtureParams{
                             {{8.510, 2.174}, {6.640, 1.662}, {4.804, 1.335}}, {0.081, 0.523, 0.396}})),
                         a)},
  };
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v) {
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Drift catalog
// ---------------------------------------------------------------------------

TEST(SdeDrift, FixedPoints) {
  const auto normal = parse_drift("normal:2.5,1.3", 1.69);
  EXPECT_EQ(drift(normal, 2.5), 0.0);
  const auto estexp = parse_drift("estexp:0.45,2000", 1.0);
  EXPECT_NEAR(drift(estexp, std::log(2000.0)), 0.0, 1e-15);
}

TEST(SdeDrift, CatalogFormulas) {
  const double a = 0.7;
  const auto estexp = parse_drift("estexp:0.45,2000", a);
  const double y = 5.0;
  EXPECT_NEAR(drift(estexp, y), -(0.45 * a / 2.0) * (std::pow(std::exp(y) / 2000.0, 0.45) - 1.0), 1e-14);
  const auto exp = parse_drift("exp:2.5,1.0", a);
  EXPECT_NEAR(drift(exp, 3.0), -0.5 * 1.5 * a, 1e-15);
  // With a = sigma^2 the normal drift is -(y - mu) / 2.
  const auto normal = parse_drift("normal:1,2", 4.0);
  EXPECT_NEAR(drift(normal, 3.0), -1.0, 1e-15);
}

TEST(SdeDrift, MixtureWithUnitWeightIsItsComponent) {
  const double a = 2.0, mu1 = 3.0, s1 = 0.8;
  const auto mix = parse_drift("mix2n:3,0.8,-1,1.5,1", a);
  for (double y : {-2.0, 0.0, 3.0, 6.5}) {
    EXPECT_NEAR(drift(mix, y), -(a / (2.0 * s1 * s1)) * (y - mu1), 1e-12);
  }
}

TEST(SdeDrift, MixtureUsesResponsibilities) {
  const double a = 1.3;
  const MixtureParams p{{{8.510, 2.174}, {6.640, 1.662}, {4.804, 1.335}}, {0.081, 0.523, 0.396}};
  const auto spec = spec_for(to_log_space(DistributionModel(p)), a);
  for (double y : {2.0, 6.0, 9.5}) {
    const auto tau = responsibilities(p, y);
    double b = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& c = p.components[j];
      b -= a / (2.0 * c.sigma * c.sigma) * tau[j] * (y - c.mu);
    }
    EXPECT_NEAR(drift(spec, y), b, 1e-12);
  }
}

TEST(SdeDrift, ParseErrors) {
  EXPECT_THROW(parse_drift("normal:1"), InputError);
  EXPECT_THROW(parse_drift("cauchy:0,1"), InputError);
  EXPECT_THROW(parse_drift("normal:0,abc"), InputError);
  EXPECT_THROW(parse_drift("mix2n:1,1,2,1,1.5"), InputError);
  EXPECT_THROW(parse_drift("normal:0,1", 0.0), InputError);
  EXPECT_THROW(spec_for(DistributionModel(LognormalParams{0, 1}, Space::Log), 0.0), DomainError);
  const auto t = parse_drift("truncnormal:1,2,0.5");
  EXPECT_TRUE(t.reflecting());
  EXPECT_EQ(t.y_min(), 0.5);
  EXPECT_EQ(drift_token(t.kind), "truncnormal");
  EXPECT_FALSE(parse_drift("mix3n:5,1,3,1,1,1,0.2,0.3").reflecting());
}

// ---------------------------------------------------------------------------
// Score identity
// ---------------------------------------------------------------------------

TEST(SdeScore, HoldsForEveryCatalog) {
  for (double a : {0.5, 1.0, 3.0}) {
    for (const auto& c : six_catalogs(a)) {
      const auto target = c.spec.target_model();
      const double lo = std::max(quantile(target, 1e-6), c.spec.y_min());
      const double hi = quantile(target, 1.0 - 1e-6);
      const auto g = grid(lo, hi, 200);
      EXPECT_LT(score_identity_check(c.spec, target, g), 1e-6) << c.name << " a=" << a;
    }
  }
}

TEST(SdeScore, WrongTargetIsDetected) {
  const auto spec = parse_drift("normal:0,1", 1.0);
  const DistributionModel wrong(LognormalParams{0.5, 1.0}, Space::Log);
  const auto g = grid(-3.0, 3.0, 50);
  EXPECT_NEAR(score_identity_check(spec, wrong, g), 0.5, 1e-6);
}

TEST(SdeScore, AnalyticNormalAndExponential) {
  const double mu = 1.0, sigma = 2.0, a = 0.3;
  const auto normal = parse_drift("normal:1,2", a);
  const auto exp = parse_drift("exp:3,0", a);
  for (double y : {-4.0, 0.5, 7.0}) {
    EXPECT_NEAR(2.0 * drift(normal, y) / a, -(y - mu) / (sigma * sigma), 1e-14);
  }
  EXPECT_NEAR(2.0 * drift(exp, 2.0) / a, -2.0, 1e-14);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

TEST(SdeSimulate, ZeroDiffusionRelaxesMonotonically) {
  // a = sigma^2 = 1e-12 gives the drift -(y - mu) / 2 with negligible noise.
  const auto spec = parse_drift("normal:2,1e-6", 1e-12);
  double previous = 10.0;
  for (std::size_t k = 100; k <= 3000; k += 100) {
    // A single retained state: the position after k steps.
    const SimConfig config{.dt = 0.01, .steps = k, .burn_in = k - 1, .thin = 1, .seed = 1};
    const double y = simulate(spec, 10.0, config).logs()[0];
    EXPECT_LT(y, previous);
    EXPECT_GT(y, 2.0);
    previous = y;
  }
  EXPECT_NEAR(previous, 2.0 + 8.0 * std::pow(1.0 - 0.005, 3000.0), 1e-5);
}

TEST(SdeSimulate, OrnsteinUhlenbeckMoments) {
  const auto spec = parse_drift("normal:0,1", 1.0);
  const SimConfig config{.dt = 0.01, .steps = 1'000'000, .burn_in = 100'000, .thin = 10, .seed = 2};
  const auto s = simulate(spec, 0.0, config);
  EXPECT_EQ(s.size(), 90000u);
  EXPECT_NEAR(mean_of(s.logs()), 0.0, 0.05);
  EXPECT_NEAR(sd_of(s.logs()), 1.0, 0.05);
}

TEST(SdeSimulate, ReflectedExponentialMean) {
  const auto spec = parse_drift("exp:2,0", 1.0);
  const auto config = recommended_config(spec, 100000, 3);
  const auto s = simulate(spec, 1.0, config);
  for (double y : s.logs()) ASSERT_GE(y, -1e-12);
  EXPECT_NEAR(mean_of(s.logs()), 1.0, 0.05);
  const auto check = stationary_check(spec, spec.target_model(), config);
  EXPECT_TRUE(check.pass) << check.ks_distance;
}

TEST(SdeSimulate, TruncNormalIsNotTheUnboundedNormal) {
  const auto spec = parse_drift("truncnormal:0,1,0", 1.0);
  const auto config = recommended_config(spec, 50000, 4);
  const DistributionModel unbounded(LognormalParams{0.0, 1.0}, Space::Log);
  const auto wrong = stationary_check(spec, unbounded, config);
  EXPECT_FALSE(wrong.pass);
  EXPECT_GT(wrong.ks_distance, 0.4);
  const auto right = stationary_check(spec, spec.target_model(), config);
  EXPECT_TRUE(right.pass) << right.ks_distance;
}

TEST(SdeSimulate, EstexpPassesAtTheRecommendedConfig) {
  const auto spec = parse_drift("estexp:0.45,2000", 1.0);
  const auto r = stationary_check(spec, spec.target_model(), recommended_config(spec, 100000, 5));
  EXPECT_TRUE(r.pass) << r.ks_distance;
  EXPECT_EQ(r.retained, 100000u);
}

TEST(SdeSimulate, SameSeedSamePath) {
  const auto spec = parse_drift("mix2n:7.363,1.972,4.954,1.381,0.696", 1.0);
  const SimConfig config{.dt = 0.05, .steps = 20000, .burn_in = 1000, .thin = 7, .seed = 9};
  EXPECT_EQ(simulate(spec, 6.0, config), simulate(spec, 6.0, config));
  auto other = config;
  other.seed = 10;
  EXPECT_NE(simulate(spec, 6.0, config), simulate(spec, 6.0, other));
}

TEST(SdeSimulate, StepSizeGuard) {
  const auto spec = parse_drift("estexp:0.9,1", 1.0);
  const SimConfig config{.dt = 1.0, .steps = 1000, .burn_in = 0, .thin = 1, .seed = 1};
  EXPECT_THROW(simulate(spec, 30.0, config), StepSizeError);
}

TEST(SdeSimulate, BadConfigurations) {
  const auto spec = parse_drift("exp:2,0", 1.0);
  EXPECT_THROW(simulate(spec, -1.0, {.dt = 0.01, .steps = 100, .burn_in = 0, .thin = 1, .seed = 0}), DomainError);
  EXPECT_THROW(simulate(spec, 1.0, {.dt = 0.0, .steps = 100, .burn_in = 0, .thin = 1, .seed = 0}), DomainError);
  EXPECT_THROW(simulate(spec, 1.0, {.dt = 0.01, .steps = 100, .burn_in = 100, .thin = 1, .seed = 0}), DomainError);
}

TEST(SdeSimulate, HalvingTheStepKeepsTheDistance) {
  const auto spec = parse_drift("normal:0,1", 1.0);
  auto coarse = recommended_config(spec, 40000, 6);
  auto fine = coarse;
  fine.dt /= 2.0;
  fine.steps *= 2;
  fine.burn_in *= 2;
  fine.thin *= 2;
  const auto target = spec.target_model();
  const double d_coarse = stationary_check(spec, target, coarse).ks_distance;
  const double d_fine = stationary_check(spec, target, fine).ks_distance;
  // Noise floor for 4e4 correlated draws is about 1.36 / sqrt(4e4) ~ 0.007.
  EXPECT_LT(std::abs(d_coarse - d_fine), 0.015);
}

TEST(SdeSimulate, DiffusionConstantDoesNotChangeTheStationaryLaw) {
  for (double a : {0.25, 4.0}) {
    const auto spec = parse_drift("mix2n:7.363,1.972,4.954,1.381,0.696", a);
    const auto r = stationary_check(spec, spec.target_model(), recommended_config(spec, 50000, 7));
    EXPECT_LT(r.ks_distance, 0.03) << "a=" << a;
  }
}
