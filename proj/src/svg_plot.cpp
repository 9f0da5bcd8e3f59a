#include "xlvr/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace xlvr::plot {

namespace {

constexpr int kWidth = 640;
constexpr int kPanelHeight = 300;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 45;

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                         "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> xy;
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

void render_panel(std::ostringstream& svg, const std::vector<Series>& series, int y_top,
                  const std::string& x_label, const std::string& y_label) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    for (auto [x, y] : s.xy) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmin > xmax) return;
  if (xmax == xmin) xmax = xmin + 1.0;
  const double pad = (ymax - ymin) * 0.08 + 1e-9;
  ymin -= pad;
  ymax += pad;

  const double px0 = kMarginLeft;
  const double px1 = kWidth - kMarginRight;
  const double py0 = y_top + kPanelHeight - kMarginBottom;
  const double py1 = y_top + kMarginTop;
  auto sx = [&](double x) { return px0 + (x - xmin) / (xmax - xmin) * (px1 - px0); };
  auto sy = [&](double y) { return py0 + (y - ymin) / (ymax - ymin) * (py1 - py0); };

  svg << "<rect x='" << px0 << "' y='" << py1 << "' width='" << px1 - px0 << "' height='"
      << py0 - py1 << "' fill='none' stroke='#333'/>\n";

  for (int i = 0; i <= 4; ++i) {
    const double gy = ymin + (ymax - ymin) * i / 4.0;
    svg << "<line x1='" << px0 << "' y1='" << sy(gy) << "' x2='" << px1 << "' y2='" << sy(gy)
        << "' stroke='#ddd'/>\n";
    svg << "<text x='" << px0 - 8 << "' y='" << sy(gy) + 4
        << "' text-anchor='end' font-size='11'>" << fmt(gy) << "</text>\n";
    const double gx = xmin + (xmax - xmin) * i / 4.0;
    svg << "<text x='" << sx(gx) << "' y='" << py0 + 18
        << "' text-anchor='middle' font-size='11'>" << fmt(gx) << "</text>\n";
  }
  svg << "<text x='" << (px0 + px1) / 2 << "' y='" << py0 + 35
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  svg << "<text x='16' y='" << (py0 + py1) / 2 << "' text-anchor='middle' font-size='12' "
      << "transform='rotate(-90 16 " << (py0 + py1) / 2 << ")'>" << y_label << "</text>\n";

  int color = 0;
  for (const auto& s : series) {
    const char* c = kColors[color % 8];
    svg << "<polyline fill='none' stroke='" << c << "' stroke-width='1.6' points='";
    for (auto [x, y] : s.xy) svg << sx(x) << "," << sy(y) << " ";
    svg << "'/>\n";
    for (auto [x, y] : s.xy)
      svg << "<circle cx='" << sx(x) << "' cy='" << sy(y) << "' r='2.6' fill='" << c << "'/>\n";
    svg << "<text x='" << px1 - 8 << "' y='" << py1 + 16 + 14 * color
        << "' text-anchor='end' font-size='11' fill='" << c << "'>" << s.name << "</text>\n";
    ++color;
  }
}

}  // namespace

std::string render_sweep_svg(const evals::EvalResult& result) {
  std::map<std::string, Series> nmse_series;
  std::map<std::string, Series> sdr_series;
  for (const auto& p : result.points) {
    auto& ns = nmse_series[p.method];
    ns.name = p.method;
    ns.xy.emplace_back(p.sweep_var, p.nmse_db);
    if (!std::isnan(p.sdr)) {
      auto& ss = sdr_series[p.method];
      ss.name = p.method;
      ss.xy.emplace_back(p.sweep_var, p.sdr);
    }
  }
  auto sorted = [](std::map<std::string, Series>& m) {
    std::vector<Series> v;
    for (auto& [_, s] : m) {
      std::sort(s.xy.begin(), s.xy.end());
      v.push_back(s);
    }
    return v;
  };
  const std::string x_label =
      result.sweep_name == "pilots" ? "pilot count" : "SNR [dB]";

  std::ostringstream svg;
  const int height = 2 * kPanelHeight;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << height
      << "' viewBox='0 0 " << kWidth << " " << height << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  auto nm = sorted(nmse_series);
  render_panel(svg, nm, 0, x_label, "NMSE [dB]");
  auto sd = sorted(sdr_series);
  render_panel(svg, sd, kPanelHeight, x_label, "SDR");
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace xlvr::plot
