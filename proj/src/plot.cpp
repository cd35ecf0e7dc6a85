#include "rovertrack/plot.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <sstream>

namespace rovertrack {

namespace {

constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

}  // namespace

std::string render_trajectory_svg(const std::vector<EpisodeLog>& logs, const PlotOptions& opt) {
  if (!(opt.px_per_m > 0.0)) throw UsageError("plot: px_per_m must be > 0");
  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const auto& log : logs)
    for (const auto& r : log)
      for (const Vec2& p : {r.rover.position, r.target.position}) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
      }
  if (!(min_x <= max_x)) throw UsageError("plot: no samples to draw");

  const double s = opt.px_per_m, m = opt.margin_m;
  const double width = (max_x - min_x + 2 * m) * s;
  const double height = (max_y - min_y + 2 * m) * s;
  auto px = [&](double x) { return (x - min_x + m) * s; };
  auto py = [&](double y) { return (max_y - y + m) * s; };

  std::ostringstream out;
  out.precision(6);
  out << std::fixed;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty()) out << "<title>" << opt.title << "</title>\n";

  if (opt.terrain) {
    auto visible = [&](Vec2 c, double r) {
      return c.x + r >= min_x - m && c.x - r <= max_x + m && c.y + r >= min_y - m && c.y - r <= max_y + m;
    };
    out << "<g id=\"obstacles\" fill=\"none\" stroke=\"#8c6d46\" stroke-width=\"1\">\n";
    for (const auto& c : opt.terrain->craters)
      if (visible(c.center, c.radius))
        out << "<circle cx=\"" << px(c.center.x) << "\" cy=\"" << py(c.center.y) << "\" r=\"" << c.radius * s
            << "\"/>\n";
    for (const auto& b : opt.terrain->boulders)
      if (visible(b.center, b.radius))
        out << "<circle cx=\"" << px(b.center.x) << "\" cy=\"" << py(b.center.y) << "\" r=\"" << b.radius * s
            << "\" fill=\"#b8a488\"/>\n";
    out << "</g>\n";
  }

  auto path = [&](const EpisodeLog& log, bool target) {
    std::ostringstream d;
    d.precision(3);
    d << std::fixed;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const Vec2 p = target ? log[i].target.position : log[i].rover.position;
      d << (i ? " L" : "M") << px(p.x) << " " << py(p.y);
    }
    return d.str();
  };
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i].empty()) continue;
    out << "<path id=\"target-" << i << "\" d=\"" << path(logs[i], true)
        << "\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (std::size_t i = 0; i < logs.size(); ++i) {
    if (logs[i].empty()) continue;
    out << "<path id=\"rover-" << i << "\" d=\"" << path(logs[i], false) << "\" fill=\"none\" stroke=\""
        << kColors[i % kColors.size()] << "\" stroke-width=\"2\"/>\n";
  }
  // 1 m scale bar, bottom left.
  out << "<g id=\"scale\"><line x1=\"" << 0.1 * s << "\" y1=\"" << height - 0.1 * s << "\" x2=\"" << 1.1 * s
      << "\" y2=\"" << height - 0.1 * s << "\" stroke=\"black\" stroke-width=\"2\"/>"
      << "<text x=\"" << 0.1 * s << "\" y=\"" << height - 0.14 * s << "\" font-size=\"12\">1 m</text></g>\n";
  out << "</svg>\n";
  return out.str();
}

}  // namespace rovertrack
