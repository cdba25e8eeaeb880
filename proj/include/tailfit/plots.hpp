#pragma once

#include <string>
#include <vector>

#include "tailfit/model.hpp"

namespace tailfit {

struct NamedModel {
  std::string name;
  DistributionModel model;
};

enum class PlotKind { Rank, Corank };

/// Log-rank (or log-corank) against log-size. For the sorted logs y_(i),
/// i = 1..n, the empirical value is ln(n - i + 1) for the rank plot and
/// ln(i) for the corank plot; model curves are ln(n (1 - F(y))) and
/// ln(n F(y)) on a grid spanning the data. Values outside a model's support
/// are -inf.
struct PlotData {
  PlotKind kind = PlotKind::Rank;
  std::vector<double> y;
  std::vector<double> empirical;
  std::vector<double> grid;
  std::vector<std::string> model_names;
  std::vector<std::vector<double>> curves;  // one per model, aligned with grid
};

PlotData rank_plot_data(const Sample& sample, const std::vector<NamedModel>& models,
                        std::size_t grid_points = 512);
PlotData corank_plot_data(const Sample& sample, const std::vector<NamedModel>& models,
                          std::size_t grid_points = 512);

/// TSV texts: the empirical points (log_size, log_rank or log_corank) and the
/// model grid (log_size, one column per model). Non-finite values print as nan.
std::string empirical_tsv(const PlotData& plot);
std::string models_tsv(const PlotData& plot);

/// SVG with one polyline per series, each tagged
/// data-series="<tsv file>:<column>"; log-rank on the vertical axis.
std::string render_svg(const PlotData& plot, const std::string& title,
                       const std::string& empirical_file, const std::string& models_file);

/// Writes <dir>/<stem>.tsv, <dir>/<stem>_models.tsv and <dir>/<stem>.svg;
/// returns the paths written.
std::vector<std::string> write_plot(const PlotData& plot, const std::string& dir,
                                    const std::string& stem, const std::string& title);

}  // namespace tailfit
