#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tailfit/config.hpp"
#include "tailfit/describe.hpp"
#include "tailfit/fitting.hpp"
#include "tailfit/gof.hpp"
#include "tailfit/sde.hpp"
#include "tailfit/selection.hpp"
#include "tailfit/tail_select.hpp"

namespace tailfit {

using Json = nlohmann::ordered_json;

Json to_json(const DescriptiveStats& d);
Json to_json(const FitResult& fit);
/// synthetic_stats are summarized by their count unless `with_stats`.
Json to_json(const GofReport& gof, bool with_stats = false);
/// Candidates and distances are summarized unless `with_arrays`.
Json to_json(const TailScan& scan, bool with_arrays = false);
Json to_json(const SelectionReport& sel);
Json to_json(const VuongResult& v);

struct ReportOutput {
  Json json;
  /// Paths written, report.json last.
  std::vector<std::string> files;
};

/// Full analysis of config.input: describe, full-sample fits (STEXP, LN,
/// 2LN, 3LN) with GOF and criteria, x_min scan, tail fits (Pareto, LNt) with
/// GOF and criteria, Vuong, and rank/corank plots. A failing stage is
/// recorded with its error and the stages depending on it are marked
/// skipped. Writes everything under config.out. Throws InputError when the
/// input cannot be loaded.
ReportOutput run_report(const RunConfig& config);

/// The report without its metadata.timestamp, for comparing runs.
Json without_timestamp(Json report);

}  // namespace tailfit
