#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "simflow/cli.hpp"

namespace simflow::cli {
namespace {

constexpr double kPanelW = 360.0, kPanelH = 240.0, kMargin = 40.0;

std::string num(double v) { return fmt::format("{:.3f}", v); }

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string safe_name(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += c;
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

/// A plotting area with data ranges mapped to pixels.
struct Panel {
  double x0, y0;  // top-left pixel
  double xmin, xmax, ymin, ymax;

  double px(double x) const { return x0 + kMargin + (x - xmin) / (xmax - xmin) * (kPanelW - 1.5 * kMargin); }
  double py(double y) const { return y0 + kPanelH - kMargin + (y - ymin) / (ymax - ymin) * -(kPanelH - 1.5 * kMargin); }
};

class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& style) {
    body_ += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {}/>\n", num(x1), num(y1), num(x2), num(y2), style);
  }
  void rect(double x, double y, double w, double h, const std::string& style) {
    body_ += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" {}/>\n", num(x), num(y), num(w), num(h),
                         style);
  }
  void path(const std::vector<std::pair<double, double>>& points, bool closed, const std::string& style) {
    if (points.empty()) return;
    std::string d;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d += fmt::format("{}{} {} ", i == 0 ? "M" : "L", num(points[i].first), num(points[i].second));
    }
    if (closed) d += "Z";
    body_ += fmt::format("<path d=\"{}\" {}/>\n", d, style);
  }
  void text(double x, double y, const std::string& content, const std::string& anchor = "middle") {
    body_ += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"{}\">{}</text>\n",
                         num(x), num(y), anchor, escape(content));
  }

  void axes(const Panel& p, const std::string& title, const std::string& xlabel) {
    const double left = p.px(p.xmin), right = p.px(p.xmax), bottom = p.py(p.ymin), top = p.py(p.ymax);
    line(left, bottom, right, bottom, "stroke=\"black\"");
    line(left, bottom, left, top, "stroke=\"black\"");
    text(left, bottom + 14, fmt::format("{:.3g}", p.xmin));
    text(right, bottom + 14, fmt::format("{:.3g}", p.xmax));
    text(left - 4, bottom, fmt::format("{:.3g}", p.ymin), "end");
    text(left - 4, top + 4, fmt::format("{:.3g}", p.ymax), "end");
    text((left + right) / 2, p.y0 + 16, title);
    text((left + right) / 2, bottom + 28, xlabel);
  }

  std::string str() const {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
        num(width_), num(height_), num(width_), num(height_), body_);
  }

 private:
  double width_, height_;
  std::string body_;
};

std::vector<double> numbers(const json& array) {
  std::vector<double> out;
  if (!array.is_array()) return out;
  for (const auto& v : array) {
    if (v.is_number()) out.push_back(v.get<double>());
  }
  return out;
}

void histogram(Svg& svg, double x0, const std::vector<double>& counts, double lo, double hi, const std::string& title,
               const std::string& xlabel, std::optional<double> expected, const std::vector<double>& markers) {
  double top = 1.0;
  for (double c : counts) top = std::max(top, c);
  if (expected) top = std::max(top, *expected);
  Panel p{x0, 0.0, lo, hi, 0.0, top * 1.1};
  const double width = (hi - lo) / static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double a = lo + width * static_cast<double>(i);
    svg.rect(p.px(a), p.py(counts[i]), p.px(a + width) - p.px(a), p.py(0.0) - p.py(counts[i]),
             "fill=\"#9ecae1\" stroke=\"#3182bd\"");
  }
  if (expected) svg.line(p.px(lo), p.py(*expected), p.px(hi), p.py(*expected), "stroke=\"gray\" stroke-dasharray=\"4 3\"");
  for (double m : markers) {
    if (m >= lo && m <= hi) svg.line(p.px(m), p.py(0.0), p.px(m), p.py(p.ymax), "stroke=\"#d62728\" stroke-width=\"2\"");
  }
  svg.axes(p, title, xlabel);
}

std::vector<double> bin_counts(const std::vector<double>& values, double lo, double hi, std::size_t bins) {
  std::vector<double> counts(bins, 0.0);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    auto b = static_cast<std::size_t>(std::clamp((v - lo) / (hi - lo) * static_cast<double>(bins), 0.0,
                                                 static_cast<double>(bins - 1)));
    counts[b] += 1.0;
  }
  return counts;
}

std::pair<double, double> range_of(const std::vector<double>& values, const std::vector<double>& extra = {}) {
  double lo = INFINITY, hi = -INFINITY;
  for (const auto* v : {&values, &extra}) {
    for (double x : *v) {
      if (!std::isfinite(x)) continue;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

std::optional<Figure> calibration_figure(const std::string& command, const json& target,
                                         std::vector<std::string>& warnings) {
  const std::string name = target.value("name", "target");
  const auto p = numbers(target.value("pvalues", json::array()));
  if (p.empty()) {
    warnings.push_back(fmt::format("{}: empty p-value set for '{}', no figure", command, name));
    return std::nullopt;
  }
  Svg svg(2 * kPanelW, kPanelH);
  const auto counts = numbers(target.value("histogram", json::array()));
  histogram(svg, 0.0, counts, 0.0, 1.0, name + " p-values", "p", static_cast<double>(p.size()) / counts.size(), {});

  const auto& band = target["verdict"]["band"];
  const auto grid = numbers(band["grid"]), diff = numbers(band["ecdf_diff"]);
  const auto lower = numbers(band["lower"]), upper = numbers(band["upper"]);
  double extent = 0.05;
  for (const auto* v : {&diff, &lower, &upper}) {
    for (double x : *v) extent = std::max(extent, std::abs(x));
  }
  Panel e{kPanelW, 0.0, 0.0, 1.0, -extent * 1.1, extent * 1.1};
  if (grid.size() == lower.size() && grid.size() == upper.size() && !grid.empty()) {
    std::vector<std::pair<double, double>> poly;
    for (std::size_t i = 0; i < grid.size(); ++i) poly.emplace_back(e.px(grid[i]), e.py(upper[i]));
    for (std::size_t i = grid.size(); i-- > 0;) poly.emplace_back(e.px(grid[i]), e.py(lower[i]));
    svg.path(poly, true, "fill=\"#d9d9d9\" stroke=\"none\"");
  }
  if (grid.size() == diff.size()) {
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = 0; i < grid.size(); ++i) curve.emplace_back(e.px(grid[i]), e.py(diff[i]));
    svg.path(curve, false, "fill=\"none\" stroke=\"#08519c\" stroke-width=\"1.5\"");
  }
  svg.line(e.px(0.0), e.py(0.0), e.px(1.0), e.py(0.0), "stroke=\"gray\"");
  svg.axes(e, name + " ECDF difference", "z");
  return Figure{fmt::format("{}_{}.svg", safe_name(command), safe_name(name)), svg.str()};
}

Figure marker_figure(const std::string& filename, const std::string& title, const std::vector<double>& values,
                     const std::vector<double>& markers) {
  const auto [lo, hi] = range_of(values, markers);
  Svg svg(kPanelW, kPanelH);
  histogram(svg, 0.0, bin_counts(values, lo, hi, 40), lo, hi, title, "statistic", std::nullopt, markers);
  return {filename, svg.str()};
}

}  // namespace

std::vector<Figure> render_figures(const json& report, std::vector<std::string>& warnings) {
  std::vector<Figure> figures;
  const std::string command = report.value("command", "");
  if (!report.contains("results") || !report["results"].is_object()) {
    warnings.push_back("report has no results, no figures");
    return figures;
  }
  const json& r = report["results"];

  if (command == "sbc" || command == "post-sbc" || command == "freq-calibrate") {
    for (const auto& t : r.value("targets", json::array())) {
      if (auto f = calibration_figure(command, t, warnings)) figures.push_back(std::move(*f));
    }
  } else if (command == "test") {
    const auto null = numbers(r.value("null_samples", json::array()));
    if (null.empty()) {
      warnings.push_back("test: empty null sample, no figure");
    } else {
      figures.push_back(marker_figure("test_null.svg", r.value("statistic", "T") + " null distribution", null,
                                      {r.value("observed_stat", 0.0)}));
    }
  } else if (command == "power") {
    const auto p = numbers(r.value("pvalues", json::array()));
    if (p.empty()) {
      warnings.push_back("power: empty p-value set, no figure");
    } else {
      Svg svg(kPanelW, kPanelH);
      histogram(svg, 0.0, bin_counts(p, 0.0, 1.0, 20), 0.0, 1.0, "p-values under the alternative", "p",
                static_cast<double>(p.size()) / 20.0, {r.value("alpha", 0.05)});
      figures.push_back({"power_pvalues.svg", svg.str()});
    }
  } else if (command == "ppc" || command == "prior-check") {
    const auto reps = numbers(r.value("replication_stats", json::array()));
    std::vector<double> markers;
    if (r.contains("observed_stat") && r["observed_stat"].is_number()) markers.push_back(r["observed_stat"]);
    if (r.contains("region")) {
      markers.push_back(r["region"].value("lower", 0.0));
      markers.push_back(r["region"].value("upper", 0.0));
    }
    if (reps.empty()) {
      warnings.push_back(command + ": no replications, no figure");
    } else {
      figures.push_back(marker_figure(safe_name(command) + "_stats.svg", "replicated statistics", reps, markers));
    }
    if (r.contains("overlay")) {
      const auto obs = numbers(r["overlay"]["observed_sorted"]);
      const auto lo = numbers(r["overlay"]["lower"]), hi = numbers(r["overlay"]["upper"]);
      if (!obs.empty() && obs.size() == lo.size() && obs.size() == hi.size()) {
        auto [ymin, ymax] = range_of(lo, hi);
        std::tie(ymin, ymax) = range_of({ymin, ymax}, obs);
        Panel p{0.0, 0.0, 0.0, static_cast<double>(obs.size() - 1) + 1e-9, ymin, ymax};
        Svg svg(kPanelW, kPanelH);
        std::vector<std::pair<double, double>> band, line;
        for (std::size_t i = 0; i < obs.size(); ++i) band.emplace_back(p.px(static_cast<double>(i)), p.py(hi[i]));
        for (std::size_t i = obs.size(); i-- > 0;) band.emplace_back(p.px(static_cast<double>(i)), p.py(lo[i]));
        for (std::size_t i = 0; i < obs.size(); ++i) line.emplace_back(p.px(static_cast<double>(i)), p.py(obs[i]));
        svg.path(band, true, "fill=\"#fdd0a2\" stroke=\"none\"");
        svg.path(line, false, "fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"");
        svg.axes(p, "observed (sorted) vs 90% replication band", "rank");
        figures.push_back({"ppc_overlay.svg", svg.str()});
      }
    }
  } else if (command != "accuracy" && command != "abc" && command != "compare" && command != "sensitivity" &&
             command != "elicit") {
    warnings.push_back(fmt::format("no figure type for '{}' reports", command));
  }
  return figures;
}

}  // namespace simflow::cli
