// tailfit: fit, test and compare heavy-tailed size distributions from a CSV column.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tailfit/csv_io.hpp"
#include "tailfit/report.hpp"

namespace {

using namespace tailfit;

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kFitError = 3;
constexpr int kInternalError = 4;

struct Invocation {
  RunConfig config;
  bool out_given = false;
};

LoadResult load_input(const RunConfig& config) {
  if (config.input.empty()) throw InputError("no input file (use --input or input = ... in the config)");
  LoadResult loaded = load_csv(config.input, config.column);
  if (loaded.rejected > 0) {
    std::cerr << "tailfit: rejected " << loaded.rejected << " of " << loaded.rows_read << " rows\n";
    for (std::size_t i = 0; i < loaded.reject_log.size() && i < 10; ++i) {
      std::cerr << "  " << loaded.reject_log[i] << "\n";
    }
  }
  return loaded;
}

FitOptions fit_options(const RunConfig& config, bool allow_boundary) {
  FitOptions opts;
  opts.mixture.restarts = config.restarts;
  opts.mixture.seed = config.seed;
  opts.mixture.threads = config.threads;
  opts.trunc.allow_boundary = allow_boundary;
  return opts;
}

struct TailChoice {
  double x_min = 0.0;
  std::string source;
};

TailChoice choose_xmin(const RunConfig& config, const Sample& sample) {
  if (config.xmin > 0.0) return {config.xmin, "config"};
  TailScanConfig tc;
  tc.n_floor = config.n_floor;
  tc.max_candidates = config.max_candidates;
  tc.threads = config.threads;
  return {select_xmin(sample, tc).chosen_xmin, "ks_scan"};
}

void emit(const Invocation& inv, const std::string& command, const Json& j) {
  const std::string text = j.dump(2) + "\n";
  std::cout << text;
  if (inv.out_given) {
    write_text_atomic((std::filesystem::path(inv.config.out) / (command + ".json")).string(), text);
  }
}

int cmd_describe(const Invocation& inv) {
  const auto loaded = load_input(inv.config);
  Json j;
  j["rows_read"] = loaded.rows_read;
  j["rows_rejected"] = loaded.rejected;
  j["stats"] = to_json(describe(loaded.sample));
  emit(inv, "describe", j);
  return kOk;
}

int cmd_fit(const Invocation& inv) {
  const auto& cfg = inv.config;
  const ModelKind kind = parse_model_kind(cfg.model);
  const auto loaded = load_input(cfg);
  Json j;
  FitOptions opts = fit_options(cfg, false);
  const Sample* data = &loaded.sample;
  std::optional<Sample> tail;
  if (is_tail_kind(kind)) {
    const auto choice = choose_xmin(cfg, loaded.sample);
    tail = loaded.sample.tail(choice.x_min);
    data = &*tail;
    opts.x_min = choice.x_min;
    j["x_min"] = choice.x_min;
    j["x_min_source"] = choice.source;
    j["tail_n"] = tail->size();
  }
  const FitResult result = fit(kind, *data, opts);
  j["fit"] = to_json(result);
  const Criteria ic = criteria(result.k, data->size(), result.log_likelihood);
  j["criteria"] = {{"aic", ic.aic}, {"bic", ic.bic}, {"hqc", ic.hqc ? Json(*ic.hqc) : Json(nullptr)}};
  emit(inv, "fit", j);
  return kOk;
}

int cmd_tail(const Invocation& inv) {
  const auto& cfg = inv.config;
  const auto loaded = load_input(cfg);
  TailScanConfig tc;
  tc.n_floor = cfg.n_floor;
  tc.max_candidates = cfg.max_candidates;
  tc.threads = cfg.threads;
  const TailScan scan = select_xmin(loaded.sample, tc);
  if (inv.out_given) {
    std::string tsv = "x_min\tdistance\n";
    for (std::size_t i = 0; i < scan.candidates.size(); ++i) {
      tsv += Json(scan.candidates[i]).dump() + "\t" + Json(scan.distances[i]).dump() + "\n";
    }
    write_text_atomic((std::filesystem::path(cfg.out) / "tail_scan.tsv").string(), tsv);
  }
  emit(inv, "tail", to_json(scan));
  return kOk;
}

int cmd_gof(const Invocation& inv) {
  const auto& cfg = inv.config;
  const ModelKind kind = parse_model_kind(cfg.model);
  const GofKind test = parse_gof_kind(cfg.test);
  const auto loaded = load_input(cfg);
  Json j;
  FitOptions opts = fit_options(cfg, true);
  const Sample* data = &loaded.sample;
  std::optional<Sample> tail;
  if (is_tail_kind(kind)) {
    const auto choice = choose_xmin(cfg, loaded.sample);
    tail = loaded.sample.tail(choice.x_min);
    data = &*tail;
    opts.x_min = choice.x_min;
    j["x_min"] = choice.x_min;
    j["tail_n"] = tail->size();
  }
  const GofKind kinds[] = {test};
  const auto reports =
      mc_pvalues(*data, make_fitter(kind, opts, cfg.gof_restarts), kinds, cfg.replicates, cfg.seed, cfg.threads);
  j["model"] = std::string(kind_label(kind));
  j["gof"] = to_json(reports.front());
  if (reports.front().unreliable) std::cerr << "tailfit: warning: " << reports.front().warning << "\n";
  emit(inv, "gof", j);
  return kOk;
}

int cmd_compare(const Invocation& inv) {
  const auto& cfg = inv.config;
  const auto loaded = load_input(cfg);
  const Sample& sample = loaded.sample;
  const FitOptions opts = fit_options(cfg, true);
  Json j;

  std::vector<NamedFit> named;
  Json fits = Json::array();
  std::optional<MixtureParams> two;
  for (auto kind : {ModelKind::Stexp, ModelKind::Lognormal, ModelKind::Mix2, ModelKind::Mix3}) {
    FitOptions o = opts;
    if (kind == ModelKind::Mix3 && two) o.mixture.warm_start = two;
    try {
      const FitResult r = fit(kind, sample, o);
      if (kind == ModelKind::Mix2) two = r.model.as<MixtureParams>();
      named.push_back({std::string(kind_label(kind)), r.k, r.log_likelihood});
      fits.push_back(to_json(r));
    } catch (const FitError& e) {
      fits.push_back({{"model", std::string(kind_label(kind))}, {"error", e.what()}});
    }
  }
  j["fits"] = fits;
  if (!named.empty()) j["selection"] = to_json(select_models(sample.size(), named));

  const auto choice = choose_xmin(cfg, sample);
  const Sample tail = sample.tail(choice.x_min);
  FitOptions t = opts;
  t.x_min = choice.x_min;
  const FitResult pareto = fit_pareto(tail, choice.x_min);
  const FitResult lnt = fit_trunc_lognormal(tail, choice.x_min, t.trunc);
  j["tail"] = {{"x_min", choice.x_min}, {"x_min_source", choice.source}, {"tail_n", tail.size()}};
  j["tail_fits"] = Json::array({to_json(pareto), to_json(lnt)});
  j["tail_selection"] = to_json(select_models(
      tail.size(), {{"Pareto", pareto.k, pareto.log_likelihood}, {"LNt", lnt.k, lnt.log_likelihood}}));
  j["vuong"] = to_json(vuong(pareto, lnt, tail));
  emit(inv, "compare", j);
  return kOk;
}

int cmd_sde(const Invocation& inv) {
  const auto& cfg = inv.config;
  const SdeSpec spec = parse_drift(cfg.drift, cfg.diffusion);
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.steps = cfg.steps;
  sim.burn_in = cfg.burnin;
  sim.thin = cfg.thin;
  sim.seed = cfg.seed;
  const DistributionModel target = spec.target_model();
  const double y0 = quantile_of_log(spec.target, 0.5);
  const Sample draws = simulate(spec, y0, sim);

  std::vector<double> grid;
  for (int i = 0; i <= 200; ++i) grid.push_back(quantile_of_log(spec.target, 0.001 + 0.998 * i / 200.0));
  double mean = 0.0;
  for (double y : draws.logs()) mean += y;
  mean /= static_cast<double>(draws.size());
  double ss = 0.0;
  for (double y : draws.logs()) ss += (y - mean) * (y - mean);

  const double ks = ks_stat(target, draws);
  Json j;
  j["drift"] = std::string(drift_token(spec.kind));
  j["target"] = target.name();
  j["diffusion_sq"] = spec.diffusion_sq;
  j["dt"] = sim.dt;
  j["steps"] = sim.steps;
  j["burnin"] = sim.burn_in;
  j["thin"] = sim.thin;
  j["seed"] = sim.seed;
  j["retained"] = draws.size();
  j["mean"] = mean;
  j["sd"] = draws.size() > 1 ? std::sqrt(ss / static_cast<double>(draws.size() - 1)) : 0.0;
  j["ks_distance"] = ks;
  j["stationary_pass"] = ks < 0.02;
  j["score_identity_max_error"] = score_identity_check(spec, target, grid);
  if (inv.out_given) {
    std::string csv = "log_size\n";
    for (double y : draws.logs()) csv += Json(y).dump() + "\n";
    write_text_atomic((std::filesystem::path(cfg.out) / "sde_draws.csv").string(), csv);
  }
  emit(inv, "sde", j);
  return kOk;
}

int cmd_report(const Invocation& inv) {
  const ReportOutput out = run_report(inv.config);
  for (const auto& stage : out.json["stages"]) {
    std::cout << stage["stage"].get<std::string>() << ": " << stage["status"].get<std::string>();
    if (stage.contains("error")) std::cout << " (" << stage["error"].get<std::string>() << ")";
    std::cout << "\n";
  }
  std::cout << "wrote " << out.files.back() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fit, test and compare heavy-tailed size distributions"};
  app.require_subcommand(1);
  app.fallthrough();

  // Every option is captured as text and applied through RunConfig::set, so
  // the config file and the command line share one validator.
  std::map<std::string, std::string> given;
  std::string config_path;
  auto opt = [&](CLI::App* where, const std::string& flag, const std::string& key, const std::string& help) {
    where->add_option(flag, given[key], help);
  };
  opt(&app, "--seed", "seed", "Master random seed");
  opt(&app, "--input", "input", "CSV input file");
  opt(&app, "--column", "column", "Column name or 0-based index");
  opt(&app, "--out", "out", "Output directory");
  opt(&app, "--threads", "threads", "Worker threads (0: all cores)");
  app.add_option("--config", config_path, "key = value settings file; command-line flags win");

  auto* describe_cmd = app.add_subcommand("describe", "Descriptive statistics of the sizes and log-sizes");
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of one model");
  opt(fit_cmd, "--model", "model", "stexp|ln|2ln|3ln|pareto|lnt");
  opt(fit_cmd, "--xmin", "xmin", "Cutoff for pareto/lnt (default: KS scan)");
  opt(fit_cmd, "--restarts", "restarts", "EM starts for mixtures");
  auto* tail_cmd = app.add_subcommand("tail", "Select the power-law cutoff by KS minimization");
  opt(tail_cmd, "--n-floor", "n_floor", "Smallest admissible tail");
  opt(tail_cmd, "--max-candidates", "max_candidates", "Cap on scanned cutoffs");
  auto* gof_cmd = app.add_subcommand("gof", "Parametric-bootstrap goodness-of-fit test");
  opt(gof_cmd, "--model", "model", "stexp|ln|2ln|3ln|pareto|lnt");
  opt(gof_cmd, "--test", "test", "ks|cm|ad");
  opt(gof_cmd, "--replicates", "replicates", "Bootstrap replicates (default 350)");
  opt(gof_cmd, "--xmin", "xmin", "Cutoff for pareto/lnt (default: KS scan)");
  opt(gof_cmd, "--restarts", "restarts", "EM starts for mixtures");
  auto* compare_cmd = app.add_subcommand("compare", "Information criteria and the Pareto/LNt Vuong test");
  opt(compare_cmd, "--xmin", "xmin", "Cutoff for the tail models (default: KS scan)");
  opt(compare_cmd, "--restarts", "restarts", "EM starts for mixtures");
  auto* sde_cmd = app.add_subcommand("sde", "Simulate a catalog diffusion and check its stationary law");
  opt(sde_cmd, "--drift", "drift", "e.g. normal:0,1 or mix2n:7.363,1.972,4.954,1.381,0.696");
  opt(sde_cmd, "--diffusion", "diffusion", "Squared diffusion coefficient a");
  opt(sde_cmd, "--dt", "dt", "Time step");
  opt(sde_cmd, "--steps", "steps", "Total steps");
  opt(sde_cmd, "--burnin", "burnin", "Steps discarded first");
  opt(sde_cmd, "--thin", "thin", "Keep every thin-th state");
  auto* report_cmd = app.add_subcommand("report", "Full analysis with JSON report and plots");
  opt(report_cmd, "--replicates", "replicates", "Bootstrap replicates (default 350)");
  opt(report_cmd, "--xmin", "xmin", "Cutoff for the tail models (default: KS scan)");
  opt(report_cmd, "--restarts", "restarts", "EM starts for mixtures");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    Invocation inv;
    if (!config_path.empty()) {
      for (const auto& [k, v] : load_config_file(config_path)) {
        inv.config.set(k, v);
        inv.out_given = inv.out_given || k == "out";
      }
    }
    for (const auto& [key, value] : given) {
      if (value.empty()) continue;
      inv.config.set(key, value);
      inv.out_given = inv.out_given || key == "out";
    }

    if (describe_cmd->parsed()) return cmd_describe(inv);
    if (fit_cmd->parsed()) return cmd_fit(inv);
    if (tail_cmd->parsed()) return cmd_tail(inv);
    if (gof_cmd->parsed()) return cmd_gof(inv);
    if (compare_cmd->parsed()) return cmd_compare(inv);
    if (sde_cmd->parsed()) return cmd_sde(inv);
    if (report_cmd->parsed()) return cmd_report(inv);
    return kInputError;
  } catch (const InputError& e) {
    std::cerr << "tailfit: " << e.what() << "\n";
    return kInputError;
  } catch (const InsufficientSampleError& e) {
    std::cerr << "tailfit: " << e.what() << "\n";
    return kInputError;
  } catch (const DomainError& e) {
    std::cerr << "tailfit: " << e.what() << "\n";
    return kInputError;
  } catch (const OptimizerFailure& e) {
    std::cerr << "tailfit: " << e.what() << "\n";
    std::cerr << to_json(e.best()).dump(2) << "\n";
    return kFitError;
  } catch (const FitError& e) {
    std::cerr << "tailfit: fit failed: " << e.what() << "\n";
    return kFitError;
  } catch (const DegenerateSampleError& e) {
    std::cerr << "tailfit: fit failed: " << e.what() << "\n";
    return kFitError;
  } catch (const StepSizeError& e) {
    std::cerr << "tailfit: " << e.what() << "\n";
    return kFitError;
  } catch (const std::exception& e) {
    std::cerr << "tailfit: internal error: " << e.what() << "\n";
    return kInternalError;
  }
}
