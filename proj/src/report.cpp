#include "tailfit/report.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>

#include "tailfit/csv_io.hpp"
#include "tailfit/plots.hpp"
#include "tailfit/random.hpp"

namespace tailfit {

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* favors_name(const VuongResult& v) {
  switch (v.favors) {
    case VuongFavors::First: return "first";
    case VuongFavors::Second: return "second";
    case VuongFavors::Neither: return "neither";
  }
  return "neither";
}

}  // namespace

Json to_json(const DescriptiveStats& d) {
  Json j;
  j["n"] = d.n;
  j["mean"] = d.mean;
  j["sd"] = d.sd;
  j["min"] = d.min;
  j["max"] = d.max;
  j["log_mean"] = d.log_mean;
  j["log_sd"] = d.log_sd;
  j["log_sd_ml"] = d.log_sd_ml;
  j["log_skewness"] = d.log_skewness ? Json(*d.log_skewness) : Json(nullptr);
  j["log_kurtosis"] = d.log_kurtosis ? Json(*d.log_kurtosis) : Json(nullptr);
  return j;
}

Json to_json(const FitResult& fit) {
  Json j;
  j["model"] = fit.model.name();
  const auto names = parameter_names(fit.model);
  const auto theta = free_parameters(fit.model);
  Json params;
  Json se;
  for (std::size_t i = 0; i < names.size(); ++i) {
    params[names[i]] = theta[i];
    se[names[i]] = fit.std_errors_available ? number_or_null(fit.std_errors[i]) : Json(nullptr);
  }
  if (fit.model.family() == Family::Mixture) {
    params["p_" + std::to_string(fit.model.as<MixtureParams>().size())] =
        fit.model.as<MixtureParams>().weights.back();
  }
  if (fit.model.family() == Family::Pareto) params["x_min"] = fit.model.as<ParetoParams>().x_min;
  if (fit.model.family() == Family::TruncLognormal) {
    params["x_min"] = fit.model.as<TruncLognormalParams>().x_min;
  }
  j["params"] = params;
  j["std_errors"] = se;
  j["std_errors_available"] = fit.std_errors_available;
  j["log_likelihood"] = fit.log_likelihood;
  j["k"] = fit.k;
  const auto& d = fit.diagnostics;
  Json diag;
  diag["iterations"] = d.iterations;
  diag["converged"] = d.converged;
  diag["gradient_norm"] = number_or_null(d.gradient_norm);
  if (fit.model.family() == Family::Mixture) {
    diag["em_restarts_used"] = d.em_restarts_used;
    diag["degenerate_restarts"] = d.degenerate_restarts;
    diag["ascent_violations"] = d.ascent_violations;
  }
  if (fit.model.family() == Family::Stexp) diag["boundary_fit"] = d.boundary_fit;
  if (fit.model.family() == Family::TruncLognormal) {
    diag["at_bound"] = d.at_bound;
    diag["ridge_suspected"] = d.ridge_suspected;
  }
  j["diagnostics"] = diag;
  return j;
}

Json to_json(const GofReport& gof, bool with_stats) {
  Json j;
  j["test"] = std::string(gof_token(gof.kind));
  j["observed"] = gof.observed;
  j["p_value"] = gof.p_value;
  j["replicates"] = gof.replicates;
  j["valid_replicates"] = gof.synthetic_stats.size();
  j["dropped"] = gof.dropped;
  j["seed"] = gof.seed;
  if (gof.unreliable) j["warning"] = gof.warning;
  if (with_stats) j["synthetic_stats"] = gof.synthetic_stats;
  return j;
}

Json to_json(const TailScan& scan, bool with_arrays) {
  Json j;
  j["chosen_xmin"] = scan.chosen_xmin;
  j["tail_n"] = scan.tail_n;
  j["alpha_at_choice"] = scan.alpha_at_choice;
  j["candidates_scanned"] = scan.candidates.size();
  for (std::size_t i = 0; i < scan.candidates.size(); ++i) {
    if (scan.candidates[i] == scan.chosen_xmin) j["distance_at_choice"] = scan.distances[i];
  }
  if (with_arrays) {
    j["candidates"] = scan.candidates;
    j["distances"] = scan.distances;
  }
  return j;
}

Json to_json(const SelectionReport& sel) {
  Json j;
  j["n"] = sel.n;
  Json rows = Json::array();
  for (const auto& r : sel.rows) {
    Json row;
    row["model"] = r.name;
    row["k"] = r.k;
    row["log_likelihood"] = r.log_likelihood;
    row["aic"] = r.ic.aic;
    row["bic"] = r.ic.bic;
    row["hqc"] = r.ic.hqc ? Json(*r.ic.hqc) : Json(nullptr);
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["winners"] = {{"aic", sel.aic_winners}, {"bic", sel.bic_winners}, {"hqc", sel.hqc_winners}};
  return j;
}

Json to_json(const VuongResult& v) {
  Json j;
  j["first"] = v.first;
  j["second"] = v.second;
  j["statistic"] = v.statistic;
  j["p_value"] = v.p_value;
  j["n"] = v.n;
  j["favors"] = favors_name(v);
  if (v.favors == VuongFavors::First) j["favored_model"] = v.first;
  if (v.favors == VuongFavors::Second) j["favored_model"] = v.second;
  return j;
}

namespace {

class StageRunner {
 public:
  // Runs `body` unless a dependency failed; records the outcome either way.
  bool run(const std::string& name, const std::vector<std::string>& depends_on,
           const std::function<Json()>& body) {
    Json entry;
    entry["stage"] = name;
    for (const auto& dep : depends_on) {
      if (!ok_.count(dep) || !ok_[dep]) {
        entry["status"] = "skipped";
        entry["reason"] = "depends on " + dep;
        ok_[name] = false;
        stages_.push_back(entry);
        return false;
      }
    }
    try {
      Json result = body();
      entry["status"] = "ok";
      entry["result"] = std::move(result);
      ok_[name] = true;
    } catch (const std::exception& e) {
      entry["status"] = "error";
      entry["error"] = e.what();
      ok_[name] = false;
    }
    stages_.push_back(entry);
    return ok_[name];
  }

  bool ok(const std::string& name) const {
    const auto it = ok_.find(name);
    return it != ok_.end() && it->second;
  }

  Json take() { return std::move(stages_); }

 private:
  Json stages_ = Json::array();
  std::map<std::string, bool> ok_;
};

// Stream ids for derive_seed, fixed so a stage's randomness does not depend
// on which other stages ran.
enum Stream : std::uint64_t { kFitStream = 1, kGofStream = 100, kTailGofStream = 200 };

}  // namespace

ReportOutput run_report(const RunConfig& config) {
  namespace fs = std::filesystem;
  const LoadResult loaded = load_csv(config.input, config.column);
  const Sample& sample = loaded.sample;
  const fs::path out_dir(config.out);
  fs::create_directories(out_dir);

  ReportOutput out;
  Json& report = out.json;
  Json meta;
  meta["tool"] = "tailfit";
  meta["seed"] = config.seed;
  meta["config_hash"] = config_hash(config);
  meta["timestamp"] = utc_timestamp();
  meta["input"] = fs::path(config.input).filename().string();
  meta["rows_read"] = loaded.rows_read;
  meta["rows_rejected"] = loaded.rejected;
  if (!loaded.reject_log.empty()) {
    Json first = Json::array();
    for (std::size_t i = 0; i < loaded.reject_log.size() && i < 20; ++i) first.push_back(loaded.reject_log[i]);
    meta["rejects"] = first;
  }
  report["metadata"] = meta;
  Json cfg;
  for (const auto& [k, v] : config.entries()) {
    if (k == "input" || k == "out" || k == "threads") continue;
    cfg[k] = v;
  }
  report["config"] = cfg;

  StageRunner stages;
  const GofKind all_tests[] = {GofKind::KS, GofKind::CM, GofKind::AD};
  auto options_for = [&](std::uint64_t stream) {
    FitOptions opts;
    opts.mixture.restarts = config.restarts;
    opts.mixture.seed = derive_seed(config.seed, stream);
    opts.mixture.threads = config.threads;
    opts.trunc.allow_boundary = true;
    return opts;
  };

  stages.run("describe", {}, [&] { return to_json(describe(sample)); });

  const ModelKind full_kinds[] = {ModelKind::Stexp, ModelKind::Lognormal, ModelKind::Mix2, ModelKind::Mix3};
  std::map<ModelKind, FitResult> fits;
  for (auto kind : full_kinds) {
    const std::string name = "fit:" + std::string(kind_label(kind));
    stages.run(name, {}, [&] {
      FitOptions opts = options_for(kFitStream + static_cast<std::uint64_t>(kind));
      if (kind == ModelKind::Mix3 && fits.count(ModelKind::Mix2)) {
        opts.mixture.warm_start = fits.at(ModelKind::Mix2).model.as<MixtureParams>();
      }
      auto result = fit(kind, sample, opts);
      fits.insert_or_assign(kind, result);
      return to_json(result);
    });
  }
  for (auto kind : full_kinds) {
    const std::string label(kind_label(kind));
    stages.run("gof:" + label, {"fit:" + label}, [&] {
      FitOptions opts = options_for(kFitStream + static_cast<std::uint64_t>(kind));
      if (kind == ModelKind::Mix3 && fits.count(ModelKind::Mix2)) {
        opts.mixture.warm_start = fits.at(ModelKind::Mix2).model.as<MixtureParams>();
      }
      const auto reports = mc_pvalues(sample, make_fitter(kind, opts, config.gof_restarts), all_tests,
                                      config.replicates,
                                      derive_seed(config.seed, kGofStream + static_cast<std::uint64_t>(kind)),
                                      config.threads);
      Json j = Json::array();
      for (const auto& r : reports) j.push_back(to_json(r));
      return j;
    });
  }
  stages.run("selection", {}, [&] {
    std::vector<NamedFit> named;
    for (auto kind : full_kinds) {
      if (fits.count(kind)) named.push_back({std::string(kind_label(kind)), fits.at(kind).k, fits.at(kind).log_likelihood});
    }
    if (named.empty()) throw FitError("no full-sample fit succeeded");
    return to_json(select_models(sample.size(), named));
  });

  double x_min = config.xmin;
  std::optional<Sample> tail;
  stages.run("tail_scan", {}, [&] {
    Json j;
    if (config.xmin > 0.0) {
      j["chosen_xmin"] = config.xmin;
      j["source"] = "config";
    } else {
      TailScanConfig tc;
      tc.n_floor = config.n_floor;
      tc.max_candidates = config.max_candidates;
      tc.threads = config.threads;
      const TailScan scan = select_xmin(sample, tc);
      x_min = scan.chosen_xmin;
      j = to_json(scan);
      j["source"] = "ks_scan";
      std::string tsv = "x_min\tdistance\n";
      for (std::size_t i = 0; i < scan.candidates.size(); ++i) {
        tsv += Json(scan.candidates[i]).dump() + "\t" + Json(scan.distances[i]).dump() + "\n";
      }
      write_text_atomic((out_dir / "tail_scan.tsv").string(), tsv);
      out.files.push_back((out_dir / "tail_scan.tsv").string());
    }
    tail = sample.tail(x_min);
    j["tail_n"] = tail->size();
    return j;
  });
  stages.run("tail_describe", {"tail_scan"}, [&] { return to_json(describe(*tail)); });

  const ModelKind tail_kinds[] = {ModelKind::Pareto, ModelKind::TruncLognormal};
  for (auto kind : tail_kinds) {
    const std::string label(kind_label(kind));
    stages.run("fit:" + label, {"tail_scan"}, [&] {
      FitOptions opts = options_for(kFitStream + static_cast<std::uint64_t>(kind));
      opts.x_min = x_min;
      auto result = fit(kind, *tail, opts);
      fits.insert_or_assign(kind, result);
      return to_json(result);
    });
  }
  for (auto kind : tail_kinds) {
    const std::string label(kind_label(kind));
    stages.run("gof:" + label, {"fit:" + label}, [&] {
      FitOptions opts = options_for(kFitStream + static_cast<std::uint64_t>(kind));
      opts.x_min = x_min;
      const auto reports = mc_pvalues(*tail, make_fitter(kind, opts), all_tests, config.replicates,
                                      derive_seed(config.seed, kTailGofStream + static_cast<std::uint64_t>(kind)),
                                      config.threads);
      Json j = Json::array();
      for (const auto& r : reports) j.push_back(to_json(r));
      return j;
    });
  }
  stages.run("tail_selection", {"tail_scan"}, [&] {
    std::vector<NamedFit> named;
    for (auto kind : tail_kinds) {
      if (fits.count(kind)) named.push_back({std::string(kind_label(kind)), fits.at(kind).k, fits.at(kind).log_likelihood});
    }
    if (named.empty()) throw FitError("no tail fit succeeded");
    return to_json(select_models(tail->size(), named));
  });
  stages.run("vuong", {"fit:Pareto", "fit:LNt"}, [&] {
    return to_json(vuong(fits.at(ModelKind::Pareto), fits.at(ModelKind::TruncLognormal), *tail));
  });

  stages.run("plots", {}, [&] {
    std::vector<NamedModel> full_models;
    for (auto kind : full_kinds) {
      if (fits.count(kind)) full_models.push_back({std::string(kind_label(kind)), fits.at(kind).model});
    }
    Json files = Json::array();
    auto emit = [&](const PlotData& p, const std::string& stem, const std::string& title) {
      for (const auto& f : write_plot(p, out_dir.string(), stem, title)) {
        out.files.push_back(f);
        files.push_back(fs::path(f).filename().string());
      }
    };
    emit(rank_plot_data(sample, full_models), "full_rank", "Log-rank plot, full sample");
    emit(corank_plot_data(sample, full_models), "full_corank", "Log-corank plot, full sample");
    if (tail) {
      std::vector<NamedModel> tail_models;
      for (auto kind : tail_kinds) {
        if (fits.count(kind)) tail_models.push_back({std::string(kind_label(kind)), fits.at(kind).model});
      }
      emit(rank_plot_data(*tail, tail_models), "tail_rank", "Log-rank plot, upper tail");
      emit(corank_plot_data(*tail, tail_models), "tail_corank", "Log-corank plot, upper tail");
    }
    return files;
  });

  report["stages"] = stages.take();
  const std::string path = (out_dir / "report.json").string();
  write_text_atomic(path, report.dump(2) + "\n");
  out.files.push_back(path);
  return out;
}

Json without_timestamp(Json report) {
  if (report.contains("metadata")) report["metadata"].erase("timestamp");
  return report;
}

}  // namespace tailfit
