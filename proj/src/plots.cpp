#include "tailfit/plots.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>

#include "tailfit/csv_io.hpp"

namespace tailfit {

namespace {

PlotData plot_data(PlotKind kind, const Sample& sample, const std::vector<NamedModel>& models,
                   std::size_t grid_points) {
  PlotData p;
  p.kind = kind;
  const auto logs = sample.logs();
  const std::size_t n = logs.size();
  const double ln_n = std::log(static_cast<double>(n));
  p.y.assign(logs.begin(), logs.end());
  for (std::size_t i = 1; i <= n; ++i) {
    p.empirical.push_back(std::log(static_cast<double>(kind == PlotKind::Rank ? n - i + 1 : i)));
  }
  const double lo = logs.front();
  const double hi = logs.back();
  grid_points = std::max<std::size_t>(grid_points, 2);
  for (std::size_t g = 0; g < grid_points; ++g) {
    p.grid.push_back(lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(grid_points - 1));
  }
  for (const auto& m : models) {
    p.model_names.push_back(m.name);
    std::vector<double> curve;
    const double support = m.model.space() == Space::Log ? m.model.support_lower()
                           : m.model.support_lower() > 0.0 ? std::log(m.model.support_lower())
                                                           : -std::numeric_limits<double>::infinity();
    for (double y : p.grid) {
      double v = 0.0;
      if (kind == PlotKind::Rank) {
        v = ln_n + (y < support ? 0.0 : log_sf_of_log(m.model.params(), y));
      } else if (y < support) {
        v = -std::numeric_limits<double>::infinity();
      } else {
        const double c = cdf_of_log(m.model.params(), y);
        // ln F from the survival side where F is close to 1.
        v = ln_n + (c > 0.5 ? std::log1p(-std::exp(log_sf_of_log(m.model.params(), y))) : std::log(c));
      }
      curve.push_back(v);
    }
    p.curves.push_back(std::move(curve));
  }
  return p;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* value_column(PlotKind kind) { return kind == PlotKind::Rank ? "log_rank" : "log_corank"; }

}  // namespace

PlotData rank_plot_data(const Sample& sample, const std::vector<NamedModel>& models,
                        std::size_t grid_points) {
  return plot_data(PlotKind::Rank, sample, models, grid_points);
}

PlotData corank_plot_data(const Sample& sample, const std::vector<NamedModel>& models,
                          std::size_t grid_points) {
  return plot_data(PlotKind::Corank, sample, models, grid_points);
}

std::string empirical_tsv(const PlotData& plot) {
  std::string out = std::string("log_size\t") + value_column(plot.kind) + "\n";
  for (std::size_t i = 0; i < plot.y.size(); ++i) {
    out += num(plot.y[i]) + "\t" + num(plot.empirical[i]) + "\n";
  }
  return out;
}

std::string models_tsv(const PlotData& plot) {
  std::string out = "log_size";
  for (const auto& name : plot.model_names) out += "\t" + name;
  out += "\n";
  for (std::size_t g = 0; g < plot.grid.size(); ++g) {
    out += num(plot.grid[g]);
    for (const auto& c : plot.curves) out += "\t" + num(c[g]);
    out += "\n";
  }
  return out;
}

std::string render_svg(const PlotData& plot, const std::string& title,
                       const std::string& empirical_file, const std::string& models_file) {
  constexpr double kW = 640, kH = 480, kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
  double x_lo = plot.y.empty() ? 0.0 : plot.y.front();
  double x_hi = plot.y.empty() ? 1.0 : plot.y.back();
  double v_lo = 0.0;
  double v_hi = 1.0;
  for (double v : plot.empirical) v_hi = std::max(v_hi, v);
  v_hi *= 1.05;
  if (x_hi <= x_lo) x_hi = x_lo + 1.0;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * (kW - kLeft - kRight); };
  auto py = [&](double v) { return kH - kBottom - (v - v_lo) / (v_hi - v_lo) * (kH - kTop - kBottom); };
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" viewBox=\"0 0 640 480\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + escape_xml(title) + "</text>\n";
  s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" +
       fixed(kW - kLeft - kRight) + "\" height=\"" + fixed(kH - kTop - kBottom) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"320\" y=\"470\" text-anchor=\"middle\" font-size=\"13\">log size</text>\n";
  s += std::string("<text x=\"16\" y=\"240\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 240)\">") +
       (plot.kind == PlotKind::Rank ? "log rank" : "log corank") + "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = x_lo + (x_hi - x_lo) * t / 4.0;
    const double yv = v_lo + (v_hi - v_lo) * t / 4.0;
    s += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(kH - kBottom + 16) +
         "\" text-anchor=\"middle\" font-size=\"11\">" + fixed(xv) + "</text>\n";
    s += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(yv) + 4) +
         "\" text-anchor=\"end\" font-size=\"11\">" + fixed(yv) + "</text>\n";
  }

  auto polyline = [&](const std::vector<double>& xs, const std::vector<double>& vs,
                      const std::string& series, const char* color, const char* extra) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(vs[i]) || vs[i] < v_lo || vs[i] > v_hi) continue;
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(xs[i])) + "," + fixed(py(vs[i]));
    }
    s += "<polyline data-series=\"" + escape_xml(series) + "\" fill=\"none\" stroke=\"" + color +
         "\"" + extra + " points=\"" + pts + "\"/>\n";
  };
  polyline(plot.y, plot.empirical, empirical_file + ":" + value_column(plot.kind), "black",
           " stroke-width=\"2\"");
  for (std::size_t m = 0; m < plot.curves.size(); ++m) {
    polyline(plot.grid, plot.curves[m], models_file + ":" + plot.model_names[m], colors[m % 6],
             " stroke-width=\"1.5\"");
  }
  for (std::size_t m = 0; m < plot.model_names.size(); ++m) {
    const double ly = kTop + 18 + 16 * static_cast<double>(m);
    s += "<text x=\"" + fixed(kW - kRight - 10) + "\" y=\"" + fixed(ly) +
         "\" text-anchor=\"end\" font-size=\"12\" fill=\"" + colors[m % 6] + "\">" +
         escape_xml(plot.model_names[m]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::string> write_plot(const PlotData& plot, const std::string& dir,
                                    const std::string& stem, const std::string& title) {
  namespace fs = std::filesystem;
  const std::string emp = stem + ".tsv";
  const std::string mod = stem + "_models.tsv";
  const std::string svg = stem + ".svg";
  const fs::path base(dir);
  write_text_atomic((base / emp).string(), empirical_tsv(plot));
  write_text_atomic((base / mod).string(), models_tsv(plot));
  write_text_atomic((base / svg).string(), render_svg(plot, title, emp, mod));
  return {(base / emp).string(), (base / mod).string(), (base / svg).string()};
}

}  // namespace tailfit
