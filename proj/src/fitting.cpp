#include "tailfit/fitting.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "tailfit/parallel.hpp"
#include "tailfit/random.hpp"
#include "tailfit/special.hpp"

namespace tailfit {

namespace sp = special;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LogMoments {
  double mean = 0.0;
  double sd = 0.0;  // divisor n
};

LogMoments log_moments(std::span<const double> y) {
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

void require_size(const Sample& sample, std::size_t n, const char* what) {
  if (sample.size() < n) {
    throw InsufficientSampleError(std::string(what) + " needs at least " + std::to_string(n) +
                                  " observations, got " + std::to_string(sample.size()));
  }
}

void require_above(const Sample& sample, double x_min, const char* what) {
  if (!(x_min > 0.0)) throw DomainError(std::string(what) + ": x_min must be > 0");
  if (sample.min() < x_min) {
    throw DomainError(std::string(what) + ": observation " + std::to_string(sample.min()) +
                      " lies below x_min = " + std::to_string(x_min));
  }
}

double scaled_gradient_norm(const DistributionModel& model, const Sample& sample) {
  const auto theta = free_parameters(model);
  const auto grad = log_likelihood_gradient(model, sample);
  const double n = static_cast<double>(sample.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i] * std::max(std::abs(theta[i]), 1.0) / n;
    acc += g * g;
  }
  return std::sqrt(acc);
}

void attach_standard_errors(FitResult& fit, const Sample& sample) {
  const auto se = standard_errors(fit.model, sample);
  fit.std_errors = se.values;
  fit.std_errors_available = se.available;
}

// ---------------------------------------------------------------------------
// EM for normal mixtures on the log-data

struct MixState {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<double> weight;
};

struct EmRun {
  MixState state;
  double loglik = kNegInf;  // of the log-data, at `state`
  int iterations = 0;
  int stable = 0;
  int ascent_violations = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> trace;
};

class EmEngine {
 public:
  EmEngine(std::span<const double> y, double center, double sigma_floor, const MixtureConfig& cfg)
      : y_(y), center_(center), floor_(sigma_floor), cfg_(cfg) {}

  // ln L of the log-data at `s`, filling the sufficient statistics
  // (sum r, sum r (y - c), sum r (y - c)^2) per component.
  double e_step(const MixState& s, std::vector<double>& n_j, std::vector<double>& s1,
                std::vector<double>& s2) const {
    const std::size_t m = s.mu.size();
    std::array<double, 8> logc{}, inv{}, mc{}, lw{};
    std::vector<double> logc_h, inv_h, mc_h, lw_h;
    double* pc = logc.data();
    double* pi = inv.data();
    double* pm = mc.data();
    double* pw = lw.data();
    if (m > logc.size()) {
      logc_h.resize(m), inv_h.resize(m), mc_h.resize(m), lw_h.resize(m);
      pc = logc_h.data(), pi = inv_h.data(), pm = mc_h.data(), pw = lw_h.data();
    }
    for (std::size_t j = 0; j < m; ++j) {
      pc[j] = s.weight[j] > 0.0 ? std::log(s.weight[j]) - std::log(s.sigma[j]) - sp::kLogSqrt2Pi
                                : kNegInf;
      pi[j] = 1.0 / s.sigma[j];
      pm[j] = s.mu[j] - center_;
    }
    n_j.assign(m, 0.0);
    s1.assign(m, 0.0);
    s2.assign(m, 0.0);
    double total = 0.0;
    for (double yv : y_) {
      const double d = yv - center_;
      double hi = kNegInf;
      for (std::size_t j = 0; j < m; ++j) {
        const double z = (d - pm[j]) * pi[j];
        pw[j] = pc[j] - 0.5 * z * z;
        hi = std::max(hi, pw[j]);
      }
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        pw[j] = std::exp(pw[j] - hi);
        acc += pw[j];
      }
      total += hi + std::log(acc);
      const double inv_acc = 1.0 / acc;
      for (std::size_t j = 0; j < m; ++j) {
        const double r = pw[j] * inv_acc;
        n_j[j] += r;
        s1[j] += r * d;
        s2[j] += r * d * d;
      }
    }
    return total;
  }

  // False when a component collapses.
  bool m_step(const std::vector<double>& n_j, const std::vector<double>& s1,
              const std::vector<double>& s2, MixState& s) const {
    const double n = static_cast<double>(y_.size());
    for (std::size_t j = 0; j < s.mu.size(); ++j) {
      if (!(n_j[j] > 1e-9 * n)) return false;
      const double mean = s1[j] / n_j[j];
      const double var = s2[j] / n_j[j] - mean * mean;
      if (!(var > floor_ * floor_)) return false;
      s.mu[j] = center_ + mean;
      s.sigma[j] = std::sqrt(var);
      s.weight[j] = n_j[j] / n;
    }
    return true;
  }

  void start(EmRun& run) const {
    std::vector<double> a, b, c;
    run.loglik = e_step(run.state, a, b, c);
    if (cfg_.record_trace) run.trace.push_back(run.loglik);
  }

  // One cycle is two EM maps followed, when acceleration is on, by a
  // squared-extrapolation step (SQUAREM) that is kept only if it beats the
  // second map. Every accepted state therefore has ln L at least that of a
  // plain EM step.
  void advance(EmRun& run, int iteration_limit) const {
    if (run.converged || run.degenerate) return;
    Stats st0;
    e_step(run.state, st0.n, st0.s1, st0.s2);
    while (run.iterations < iteration_limit) {
      MixState s1 = run.state;
      if (!m_step(st0.n, st0.s1, st0.s2, s1)) {
        run.degenerate = true;
        return;
      }
      Stats st1;
      double ll = e_step(s1, st1.n, st1.s1, st1.s2);
      ++run.iterations;
      MixState best = s1;
      Stats best_st = st1;
      if (cfg_.accelerate && run.iterations < iteration_limit) {
        MixState s2 = s1;
        if (!m_step(st1.n, st1.s1, st1.s2, s2)) {
          run.degenerate = true;
          return;
        }
        Stats st2;
        const double ll2 = e_step(s2, st2.n, st2.s1, st2.s2);
        ++run.iterations;
        best = s2;
        best_st = st2;
        ll = ll2;
        MixState jump;
        if (extrapolate(run.state, s1, s2, jump)) {
          Stats stj;
          e_step(jump, stj.n, stj.s1, stj.s2);
          MixState s3 = jump;
          if (m_step(stj.n, stj.s1, stj.s2, s3)) {
            Stats st3;
            const double ll3 = e_step(s3, st3.n, st3.s1, st3.s2);
            ++run.iterations;
            if (ll3 >= ll2) {
              best = std::move(s3);
              best_st = std::move(st3);
              ll = ll3;
            }
          }
        }
      }
      if (ll < run.loglik - 1e-9 * std::max(1.0, std::abs(run.loglik))) {
        ++run.ascent_violations;
        assert(false && "EM step decreased the log-likelihood");
      }
      run.stable = std::abs(ll - run.loglik) < cfg_.tolerance ? run.stable + 1 : 0;
      run.state = std::move(best);
      run.loglik = ll;
      st0 = std::move(best_st);
      if (cfg_.record_trace) run.trace.push_back(ll);
      if (run.stable >= cfg_.stable_iterations) {
        run.converged = true;
        return;
      }
    }
  }

 private:
  struct Stats {
    std::vector<double> n, s1, s2;
  };

  // Extrapolates in (mu, ln sigma, ln weight) coordinates; false when the
  // result is unusable.
  bool extrapolate(const MixState& s0, const MixState& s1, const MixState& s2, MixState& out) const {
    const std::size_t m = s0.mu.size();
    auto coords = [m](const MixState& s) {
      std::vector<double> x;
      x.reserve(3 * m);
      for (std::size_t j = 0; j < m; ++j) {
        x.push_back(s.mu[j]);
        x.push_back(std::log(s.sigma[j]));
        x.push_back(std::log(s.weight[j]));
      }
      return x;
    };
    const auto x0 = coords(s0), x1 = coords(s1), x2 = coords(s2);
    double rr = 0.0, vv = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
      const double r = x1[i] - x0[i];
      const double v = x2[i] - 2.0 * x1[i] + x0[i];
      rr += r * r;
      vv += v * v;
    }
    if (!(vv > 0.0) || !std::isfinite(rr)) return false;
    const double alpha = std::min(-std::sqrt(rr / vv), -1.0);
    out = s0;
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      auto at = [&](std::size_t i) {
        const double r = x1[i] - x0[i];
        const double v = x2[i] - 2.0 * x1[i] + x0[i];
        return x0[i] - 2.0 * alpha * r + alpha * alpha * v;
      };
      out.mu[j] = at(3 * j);
      out.sigma[j] = std::exp(at(3 * j + 1));
      out.weight[j] = std::exp(at(3 * j + 2));
      total += out.weight[j];
    }
    if (!std::isfinite(total) || !(total > 0.0)) return false;
    for (std::size_t j = 0; j < m; ++j) {
      out.weight[j] /= total;
      if (!std::isfinite(out.mu[j]) || !(out.sigma[j] > floor_) || !std::isfinite(out.sigma[j])) return false;
      if (!(out.weight[j] > 0.0)) return false;
    }
    return true;
  }

  std::span<const double> y_;
  double center_;
  double floor_;
  const MixtureConfig& cfg_;
};

MixState state_from(const MixtureParams& p) {
  MixState s;
  for (std::size_t j = 0; j < p.size(); ++j) {
    s.mu.push_back(p.components[j].mu);
    s.sigma.push_back(p.components[j].sigma);
    s.weight.push_back(p.weights[j]);
  }
  return s;
}

MixState nested_start(std::size_t m, const LogMoments& lm, const std::optional<MixtureParams>& warm) {
  if (warm && warm->size() == m) return state_from(*warm);
  if (warm && warm->size() + 1 == m) {
    // Split the heaviest component into two identical halves: same density,
    // so the start has exactly the smaller model's ln L.
    MixState s = state_from(*warm);
    const auto heavy = static_cast<std::size_t>(
        std::max_element(s.weight.begin(), s.weight.end()) - s.weight.begin());
    s.weight[heavy] *= 0.5;
    s.mu.push_back(s.mu[heavy]);
    s.sigma.push_back(s.sigma[heavy]);
    s.weight.push_back(s.weight[heavy]);
    return s;
  }
  MixState s;
  for (std::size_t j = 0; j < m; ++j) {
    s.mu.push_back(lm.mean);
    s.sigma.push_back(lm.sd);
    s.weight.push_back(1.0 / static_cast<double>(m));
  }
  return s;
}

MixState quantile_start(std::span<const double> y, std::size_t m, const LogMoments& lm) {
  MixState s;
  const std::size_t n = y.size();
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t lo = j * n / m;
    const std::size_t hi = (j + 1) * n / m;
    const auto g = log_moments(y.subspan(lo, hi - lo));
    s.mu.push_back(g.mean);
    s.sigma.push_back(g.sd > 0.05 * lm.sd ? g.sd : 0.5 * lm.sd);
    s.weight.push_back(static_cast<double>(hi - lo) / static_cast<double>(n));
  }
  return s;
}

MixState random_start(std::span<const double> y, std::size_t m, const LogMoments& lm, Rng& rng) {
  MixState s;
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double center = y[static_cast<std::size_t>(rng.next_u64() % y.size())];
    for (int tries = 0; tries < 100; ++tries) {
      if (std::find(s.mu.begin(), s.mu.end(), center) == s.mu.end()) break;
      center = y[static_cast<std::size_t>(rng.next_u64() % y.size())];
    }
    s.mu.push_back(center);
    s.sigma.push_back(lm.sd);
    const double w = rng.exponential();  // Dirichlet(1, ..., 1) after normalizing
    s.weight.push_back(w);
    total += w;
  }
  for (double& w : s.weight) w /= total;
  return s;
}

// ---------------------------------------------------------------------------
// STEXP profile likelihood

class StexpProfile {
 public:
  explicit StexpProfile(std::span<const double> y)
      : y_(y),
        n_(static_cast<double>(y.size())),
        sum_(std::accumulate(y.begin(), y.end(), 0.0)),
        max_(*std::max_element(y.begin(), y.end())) {}

  // ln of mean(x^gamma), shifted by the largest log for stability.
  double log_mean_power(double gamma) const {
    double acc = 0.0;
    for (double v : y_) acc += std::exp(gamma * (v - max_));
    return gamma * max_ + std::log(acc / n_);
  }

  double operator()(double gamma) const {
    return n_ * std::log(gamma) - n_ * log_mean_power(gamma) + (gamma - 1.0) * sum_ - n_;
  }

  /// eta maximizing ln L for fixed gamma.
  double eta_hat(double gamma) const { return std::exp(log_mean_power(gamma) / gamma); }

 private:
  std::span<const double> y_;
  double n_;
  double sum_;
  double max_;
};

// ---------------------------------------------------------------------------
// LNt objective: mean log-density of the log-data, from sufficient statistics.

class TruncObjective {
 public:
  TruncObjective(double mean, double var, double y_min) : mean_(mean), var_(var), y_min_(y_min) {}

  double value(double mu, double sigma) const {
    const double d = mean_ - mu;
    return -sp::kLogSqrt2Pi - std::log(sigma) - (d * d + var_) / (2.0 * sigma * sigma) -
           sp::log_norm_sf((y_min_ - mu) / sigma);
  }

  std::array<double, 2> gradient(double mu, double sigma) const {
    const double d = mean_ - mu;
    const double z_min = (y_min_ - mu) / sigma;
    const double mills = sp::inverse_mills(z_min);
    const double s2 = sigma * sigma;
    return {d / s2 - mills / sigma, -1.0 / sigma + (d * d + var_) / (s2 * sigma) - mills * z_min / sigma};
  }

 private:
  double mean_;
  double var_;
  double y_min_;
};

struct Box {
  double lo[2];
  double hi[2];
  double clamp(int i, double v) const { return std::clamp(v, lo[i], hi[i]); }
};

struct LocalOptimum {
  double mu = 0.0;
  double sigma = 0.0;
  double value = kNegInf;  // mean log-density
  double gradient_norm = 0.0;  // of the total ln L, projected onto the box
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;
};

LocalOptimum maximize_trunc(const TruncObjective& obj, const Box& box, double mu0, double sigma0,
                            double n, const TruncConfig& cfg) {
  double x[2] = {box.clamp(0, mu0), box.clamp(1, sigma0)};
  double f = obj.value(x[0], x[1]);
  double damping = 1e-6;
  LocalOptimum out;
  auto on_edge = [&](int i, double g) {
    const double tol = 1e-10 * std::max(1.0, std::abs(x[i]));
    return (x[i] <= box.lo[i] + tol && g < 0.0) || (x[i] >= box.hi[i] - tol && g > 0.0);
  };
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    const auto g = obj.gradient(x[0], x[1]);
    const bool frozen[2] = {on_edge(0, g[0]), on_edge(1, g[1])};
    const double pg0 = frozen[0] ? 0.0 : g[0];
    const double pg1 = frozen[1] ? 0.0 : g[1];
    out.gradient_norm = n * std::hypot(pg0, pg1);
    if (out.gradient_norm < cfg.gradient_tolerance) {
      out.converged = true;
      break;
    }
    // Hessian by differencing the analytic gradient.
    double h[2][2];
    for (int j = 0; j < 2; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(x[j]));
      double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
      xp[j] += step;
      xm[j] -= step;
      const auto gp = obj.gradient(xp[0], xp[1]);
      const auto gm = obj.gradient(xm[0], xm[1]);
      h[0][j] = (gp[0] - gm[0]) / (2.0 * step);
      h[1][j] = (gp[1] - gm[1]) / (2.0 * step);
    }
    const double sym = 0.5 * (h[0][1] + h[1][0]);
    bool accepted = false;
    for (int attempt = 0; attempt < 60 && !accepted; ++attempt) {
      // Solve (-H + damping * D) d = g on the free coordinates.
      const double a = -h[0][0] + damping * std::max(std::abs(h[0][0]), 1e-12);
      const double c = -h[1][1] + damping * std::max(std::abs(h[1][1]), 1e-12);
      double d[2] = {0.0, 0.0};
      if (!frozen[0] && !frozen[1]) {
        const double det = a * c - sym * sym;
        if (a > 0.0 && det > 0.0) {
          d[0] = (c * pg0 + sym * pg1) / det;
          d[1] = (a * pg1 + sym * pg0) / det;
        } else {
          damping = std::max(damping * 10.0, 1e-6);
          continue;
        }
      } else if (!frozen[0]) {
        if (!(a > 0.0)) { damping = std::max(damping * 10.0, 1e-6); continue; }
        d[0] = pg0 / a;
      } else if (!frozen[1]) {
        if (!(c > 0.0)) { damping = std::max(damping * 10.0, 1e-6); continue; }
        d[1] = pg1 / c;
      }
      const double cand[2] = {box.clamp(0, x[0] + d[0]), box.clamp(1, x[1] + d[1])};
      const double fc = obj.value(cand[0], cand[1]);
      if (fc > f) {
        x[0] = cand[0];
        x[1] = cand[1];
        f = fc;
        damping = std::max(damping / 3.0, 1e-12);
        accepted = true;
      } else {
        damping = std::max(damping * 10.0, 1e-6);
      }
    }
    if (!accepted) {
      // No ascent direction left at working precision.
      out.converged = out.gradient_norm < std::sqrt(cfg.gradient_tolerance);
      break;
    }
  }
  out.mu = x[0];
  out.sigma = x[1];
  out.value = f;
  out.iterations = it;
  const auto near = [](double v, double b) { return std::abs(v - b) <= 1e-8 * std::max(1.0, std::abs(b)); };
  out.at_bound = near(x[0], box.lo[0]) || near(x[0], box.hi[0]) || near(x[1], box.hi[1]) ||
                 near(x[1], box.lo[1]);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view kind_token(ModelKind kind) {
  switch (kind) {
    case ModelKind::Stexp: return "stexp";
    case ModelKind::Lognormal: return "ln";
    case ModelKind::Mix2: return "2ln";
    case ModelKind::Mix3: return "3ln";
    case ModelKind::Pareto: return "pareto";
    case ModelKind::TruncLognormal: return "lnt";
  }
  return "?";
}

std::string_view kind_label(ModelKind kind) {
  switch (kind) {
    case ModelKind::Stexp: return "STEXP";
    case ModelKind::Lognormal: return "LN";
    case ModelKind::Mix2: return "2LN";
    case ModelKind::Mix3: return "3LN";
    case ModelKind::Pareto: return "Pareto";
    case ModelKind::TruncLognormal: return "LNt";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view token) {
  for (auto k : {ModelKind::Stexp, ModelKind::Lognormal, ModelKind::Mix2, ModelKind::Mix3,
                 ModelKind::Pareto, ModelKind::TruncLognormal}) {
    if (token == kind_token(k)) return k;
  }
  throw InputError("unknown model '" + std::string(token) +
                   "' (expected stexp, ln, 2ln, 3ln, pareto or lnt)");
}

bool is_tail_kind(ModelKind kind) {
  return kind == ModelKind::Pareto || kind == ModelKind::TruncLognormal;
}

double log_likelihood(const DistributionModel& model, const Sample& sample) {
  const double lower = model.support_lower();
  if (model.space() == Space::Size ? sample.min() < lower : sample.logs().front() < lower) {
    throw DomainError(model.name() + " support starts at " + std::to_string(lower) +
                      " but the sample minimum is " + std::to_string(sample.min()));
  }
  const double y_lower = model.space() == Space::Log ? lower
                         : lower > 0.0              ? std::log(lower)
                                                    : kNegInf;
  const bool size_space = model.space() == Space::Size;
  double acc = 0.0;
  for (double y : sample.logs()) {
    const double yy = std::max(y, y_lower);
    acc += log_density_of_log(model.params(), yy) - (size_space ? y : 0.0);
  }
  return acc;
}

FitResult fit_lognormal(const Sample& sample) {
  require_size(sample, 2, "lognormal fit");
  const auto lm = log_moments(sample.logs());
  if (!(lm.sd > 1e-12 * std::max(1.0, std::abs(lm.mean)))) {
    throw DegenerateSampleError("lognormal fit: log-data have zero variance");
  }
  const double n = static_cast<double>(sample.size());
  FitResult fit{DistributionModel(LognormalParams{lm.mean, lm.sd})};
  fit.log_likelihood = -n * (std::log(std::sqrt(2.0 * std::numbers::pi) * lm.sd) + lm.mean + 0.5);
  fit.std_errors = {lm.sd / std::sqrt(n), lm.sd / std::sqrt(2.0 * n)};
  fit.std_errors_available = true;
  fit.k = 2;
  fit.diagnostics.converged = true;
  fit.diagnostics.gradient_norm = scaled_gradient_norm(fit.model, sample);
  return fit;
}

FitResult fit_stexp(const Sample& sample) {
  require_size(sample, 2, "STEXP fit");
  if (sample.min() == sample.max()) {
    throw DegenerateSampleError("STEXP fit: all observations are equal");
  }
  const StexpProfile profile(sample.logs());
  constexpr double kLo = 1e-6;
  constexpr double kHi = 1.0 - 1e-9;
  constexpr int kGrid = 200;
  int best = 1;
  double best_value = kNegInf;
  for (int i = 1; i < kGrid; ++i) {
    const double v = profile(static_cast<double>(i) / kGrid);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  double a = best == 1 ? kLo : static_cast<double>(best - 1) / kGrid;
  double b = best == kGrid - 1 ? kHi : static_cast<double>(best + 1) / kGrid;
  // Golden-section search on the bracketing grid cell pair.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  double fc = profile(c);
  double fd = profile(d);
  int iterations = 0;
  while (b - a > 1e-10 && iterations < 200) {
    ++iterations;
    if (fc > fd) {
      b = d, d = c, fd = fc;
      c = b - ratio * (b - a);
      fc = profile(c);
    } else {
      a = c, c = d, fc = fd;
      d = a + ratio * (b - a);
      fd = profile(d);
    }
  }
  const double gamma = 0.5 * (a + b);
  FitResult fit{DistributionModel(StexpParams{gamma, profile.eta_hat(gamma)})};
  fit.log_likelihood = log_likelihood(fit.model, sample);
  fit.k = 2;
  fit.diagnostics.iterations = iterations;
  fit.diagnostics.boundary_fit = gamma < 1e-4 || gamma > 1.0 - 1e-6;
  fit.diagnostics.converged = !fit.diagnostics.boundary_fit;
  fit.diagnostics.gradient_norm = scaled_gradient_norm(fit.model, sample);
  attach_standard_errors(fit, sample);
  return fit;
}

FitResult fit_mixture(const Sample& sample, int m, const MixtureConfig& config) {
  if (m < 2) throw DomainError("mixture fit needs m >= 2");
  require_size(sample, static_cast<std::size_t>(10 * m), "mixture fit");
  const auto y = sample.logs();
  const auto lm = log_moments(y);
  if (!(lm.sd > 0.0)) throw DegenerateSampleError("mixture fit: log-data have zero variance");
  const auto mm = static_cast<std::size_t>(m);
  const EmEngine engine(y, lm.mean, 1e-3 * lm.sd, config);

  const int starts = std::max(1, config.restarts);
  std::vector<EmRun> runs(static_cast<std::size_t>(starts));
  for (int r = 0; r < starts; ++r) {
    auto& run = runs[static_cast<std::size_t>(r)];
    if (r == 0) {
      run.state = nested_start(mm, lm, config.warm_start);
    } else if (r == 1) {
      run.state = quantile_start(y, mm, lm);
    } else {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(r)));
      run.state = random_start(y, mm, lm, rng);
    }
  }
  const int screen = std::min(config.screen_iterations, config.max_iterations);
  parallel_for(runs.size(), [&](std::size_t r) {
    engine.start(runs[r]);
    engine.advance(runs[r], screen);
  }, config.threads);

  auto better = [&](std::size_t a, std::size_t b) {
    if (runs[a].degenerate != runs[b].degenerate) return !runs[a].degenerate;
    if (std::abs(runs[a].loglik - runs[b].loglik) < 1e-9) return a < b;
    return runs[a].loglik > runs[b].loglik;
  };
  std::vector<std::size_t> order(runs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), better);
  const auto top = std::min<std::size_t>(order.size(), static_cast<std::size_t>(std::max(1, config.refine_top)));
  parallel_for(top, [&](std::size_t i) {
    engine.advance(runs[order[i]], config.max_iterations);
  }, config.threads);
  std::sort(order.begin(), order.end(), better);

  const auto& best = runs[order.front()];
  int degenerate = 0;
  for (const auto& run : runs) degenerate += run.degenerate ? 1 : 0;
  if (best.degenerate) {
    throw DegenerateMixtureError("mixture fit: every start collapsed a component below the "
                                 "sigma floor");
  }

  std::vector<LognormalParams> comps;
  for (std::size_t j = 0; j < mm; ++j) comps.push_back({best.state.mu[j], best.state.sigma[j]});
  MixtureParams params{comps, best.state.weight};
  FitResult fit{DistributionModel(params.canonical())};
  fit.log_likelihood = log_likelihood(fit.model, sample);
  fit.k = fit.model.parameter_count();
  auto& diag = fit.diagnostics;
  diag.iterations = best.iterations;
  diag.converged = best.converged;
  diag.em_restarts_used = starts;
  diag.degenerate_restarts = degenerate;
  diag.ascent_violations = best.ascent_violations;
  diag.log_likelihood_trace = best.trace;
  diag.gradient_norm = scaled_gradient_norm(fit.model, sample);
  if (config.std_errors) attach_standard_errors(fit, sample);
  return fit;
}

FitResult fit_pareto(const Sample& sample, double x_min) {
  require_above(sample, x_min, "Pareto fit");
  require_size(sample, 2, "Pareto fit");
  const double y_min = std::log(x_min);
  double excess = 0.0;
  for (double y : sample.logs()) excess += std::max(y - y_min, 0.0);
  if (!(excess > 0.0)) throw DegenerateSampleError("Pareto fit: every observation equals x_min");
  const double n = static_cast<double>(sample.size());
  const double alpha = 1.0 + n / excess;
  FitResult fit{DistributionModel(ParetoParams{alpha, x_min})};
  fit.log_likelihood =
      n * std::log(alpha - 1.0) - n * std::log(x_min) - alpha * n / (alpha - 1.0);
  fit.std_errors = {(alpha - 1.0) / std::sqrt(n)};
  fit.std_errors_available = true;
  fit.k = 1;
  fit.diagnostics.converged = true;
  fit.diagnostics.gradient_norm = scaled_gradient_norm(fit.model, sample);
  return fit;
}

FitResult fit_trunc_lognormal(const Sample& sample, double x_min, const TruncConfig& config) {
  require_above(sample, x_min, "LNt fit");
  require_size(sample, 3, "LNt fit");
  const auto lm = log_moments(sample.logs());
  if (!(lm.sd > 0.0)) throw DegenerateSampleError("LNt fit: log-data have zero variance");
  const double n = static_cast<double>(sample.size());
  const TruncObjective objective(lm.mean, lm.sd * lm.sd, std::log(x_min));
  const Box box{{lm.mean - 50.0, 1e-6}, {lm.mean + 10.0, 20.0}};

  // Starting grid: 4 x 3 for the default 12 starts.
  const int starts = std::max(1, config.starts);
  const int mu_steps = std::max(1, (starts + 2) / 3);
  const int sigma_steps = std::max(1, (starts + mu_steps - 1) / mu_steps);
  std::vector<LocalOptimum> optima;
  for (int i = 0; i < mu_steps; ++i) {
    for (int j = 0; j < sigma_steps; ++j) {
      if (static_cast<int>(optima.size()) >= starts) break;
      const double fi = mu_steps == 1 ? 1.0 : static_cast<double>(i) / (mu_steps - 1);
      const double fj = sigma_steps == 1 ? 0.0 : static_cast<double>(j) / (sigma_steps - 1);
      const double mu0 = lm.mean - 6.0 * lm.sd * (1.0 - fi);
      const double sigma0 = lm.sd * (0.5 + 4.5 * fj);
      optima.push_back(maximize_trunc(objective, box, mu0, sigma0, n, config));
    }
  }
  std::vector<std::size_t> order(optima.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return optima[a].value > optima[b].value; });
  const auto& best = optima[order.front()];

  bool ridge = false;
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& other = optima[order[i]];
    if (std::abs(other.mu - best.mu) < 1e-3 && std::abs(other.sigma - best.sigma) < 1e-3) continue;
    ridge = n * (best.value - other.value) < 0.01 && std::abs(other.mu - best.mu) > 1.0;
    break;
  }

  FitResult fit{DistributionModel(TruncLognormalParams{best.mu, best.sigma, x_min})};
  fit.log_likelihood = log_likelihood(fit.model, sample);
  fit.k = 2;
  auto& diag = fit.diagnostics;
  diag.iterations = best.iterations;
  diag.converged = best.converged && !best.at_bound;
  diag.at_bound = best.at_bound;
  diag.ridge_suspected = ridge;
  diag.gradient_norm = scaled_gradient_norm(fit.model, sample);
  attach_standard_errors(fit, sample);
  if (best.at_bound && !config.allow_boundary) {
    throw OptimizerFailure("LNt fit: no interior optimum (best point mu = " +
                               std::to_string(best.mu) + ", sigma = " +
                               std::to_string(best.sigma) + " lies on the search boundary)",
                           std::move(fit));
  }
  return fit;
}

FitResult fit(ModelKind kind, const Sample& sample, const FitOptions& options) {
  const double x_min = options.x_min > 0.0 ? options.x_min : sample.min();
  switch (kind) {
    case ModelKind::Stexp: return fit_stexp(sample);
    case ModelKind::Lognormal: return fit_lognormal(sample);
    case ModelKind::Mix2: return fit_mixture(sample, 2, options.mixture);
    case ModelKind::Mix3: return fit_mixture(sample, 3, options.mixture);
    case ModelKind::Pareto: return fit_pareto(sample.tail(x_min), x_min);
    case ModelKind::TruncLognormal:
      return fit_trunc_lognormal(sample.tail(x_min), x_min, options.trunc);
  }
  throw DomainError("unknown model kind");
}

// ---------------------------------------------------------------------------
// Parameter vectors and standard errors

std::vector<double> free_parameters(const DistributionModel& model) {
  switch (model.family()) {
    case Family::Stexp: {
      const auto& p = model.as<StexpParams>();
      return {p.gamma, p.eta};
    }
    case Family::Lognormal: {
      const auto& p = model.as<LognormalParams>();
      return {p.mu, p.sigma};
    }
    case Family::Mixture: {
      const auto& p = model.as<MixtureParams>();
      std::vector<double> out;
      for (const auto& c : p.components) {
        out.push_back(c.mu);
        out.push_back(c.sigma);
      }
      for (double w : p.free_weights()) out.push_back(w);
      return out;
    }
    case Family::Pareto: return {model.as<ParetoParams>().alpha};
    case Family::TruncLognormal: {
      const auto& p = model.as<TruncLognormalParams>();
      return {p.mu, p.sigma};
    }
  }
  return {};
}

std::vector<std::string> parameter_names(const DistributionModel& model) {
  switch (model.family()) {
    case Family::Stexp: return {"gamma", "eta"};
    case Family::Lognormal:
    case Family::TruncLognormal: return {"mu", "sigma"};
    case Family::Pareto: return {"alpha"};
    case Family::Mixture: {
      const auto m = model.as<MixtureParams>().size();
      std::vector<std::string> out;
      for (std::size_t j = 1; j <= m; ++j) {
        out.push_back("mu_" + std::to_string(j));
        out.push_back("sigma_" + std::to_string(j));
      }
      for (std::size_t j = 1; j < m; ++j) out.push_back("p_" + std::to_string(j));
      return out;
    }
  }
  return {};
}

DistributionModel with_free_parameters(const DistributionModel& model,
                                       std::span<const double> theta) {
  const auto expect = free_parameters(model).size();
  if (theta.size() != expect) throw DomainError("wrong number of free parameters");
  switch (model.family()) {
    case Family::Stexp: return {StexpParams{theta[0], theta[1]}, model.space()};
    case Family::Lognormal: return {LognormalParams{theta[0], theta[1]}, model.space()};
    case Family::Pareto:
      return {ParetoParams{theta[0], model.as<ParetoParams>().x_min}, model.space()};
    case Family::TruncLognormal:
      return {TruncLognormalParams{theta[0], theta[1], model.as<TruncLognormalParams>().x_min},
              model.space()};
    case Family::Mixture: {
      const auto m = model.as<MixtureParams>().size();
      std::vector<LognormalParams> comps;
      for (std::size_t j = 0; j < m; ++j) comps.push_back({theta[2 * j], theta[2 * j + 1]});
      std::vector<double> free(theta.begin() + static_cast<std::ptrdiff_t>(2 * m), theta.end());
      return {MixtureParams::from_free_weights(std::move(comps), free), model.space()};
    }
  }
  throw DomainError("unknown family");
}

namespace {

double finite_step(double theta) { return std::max(1e-5, 1e-4 * std::abs(theta)); }

}  // namespace

std::vector<double> log_likelihood_gradient(const DistributionModel& model, const Sample& sample) {
  auto theta = free_parameters(model);
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = finite_step(theta[i]);
    auto plus = theta, minus = theta;
    plus[i] += h;
    minus[i] -= h;
    try {
      grad[i] = (log_likelihood(with_free_parameters(model, plus), sample) -
                 log_likelihood(with_free_parameters(model, minus), sample)) /
                (2.0 * h);
    } catch (const DomainError&) {
      grad[i] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return grad;
}

StdErrors standard_errors(const DistributionModel& model, const Sample& sample) {
  const auto theta = free_parameters(model);
  const std::size_t k = theta.size();
  StdErrors out;
  out.values.assign(k, std::numeric_limits<double>::quiet_NaN());
  auto eval = [&](const std::vector<double>& t) {
    return log_likelihood(with_free_parameters(model, t), sample);
  };
  Eigen::MatrixXd info(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  try {
    const double f0 = eval(theta);
    std::vector<double> h(k);
    for (std::size_t i = 0; i < k; ++i) h[i] = finite_step(theta[i]);
    for (std::size_t i = 0; i < k; ++i) {
      auto tp = theta, tm = theta;
      tp[i] += h[i];
      tm[i] -= h[i];
      const auto ii = static_cast<Eigen::Index>(i);
      info(ii, ii) = -(eval(tp) - 2.0 * f0 + eval(tm)) / (h[i] * h[i]);
      for (std::size_t j = 0; j < i; ++j) {
        auto pp = theta, pm = theta, mp = theta, mm = theta;
        pp[i] += h[i], pp[j] += h[j];
        pm[i] += h[i], pm[j] -= h[j];
        mp[i] -= h[i], mp[j] += h[j];
        mm[i] -= h[i], mm[j] -= h[j];
        const double v = -(eval(pp) - eval(pm) - eval(mp) + eval(mm)) / (4.0 * h[i] * h[j]);
        const auto jj = static_cast<Eigen::Index>(j);
        info(ii, jj) = v;
        info(jj, ii) = v;
      }
    }
  } catch (const DomainError&) {
    return out;  // a perturbation left the parameter space
  }
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) return out;
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  for (std::size_t i = 0; i < k; ++i) {
    const double v = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    if (!(v > 0.0) || !std::isfinite(v)) return out;
    out.values[i] = std::sqrt(v);
  }
  out.available = true;
  return out;
}

StdErrors standard_errors(const FitResult& fit, const Sample& sample) {
  return standard_errors(fit.model, sample);
}

}  // namespace tailfit
