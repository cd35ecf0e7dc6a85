#include <doctest.h>

#include <regex>
#include <sstream>

#include "rovertrack/plot.hpp"
#include "rovertrack/trajectory.hpp"

using namespace rovertrack;

namespace {

std::pair<Vec2, Vec2> path_bounds(const std::string& svg, const std::string& id) {
  const std::regex re("id=\"" + id + "\" d=\"([^\"]*)\"");
  std::smatch m;
  REQUIRE(std::regex_search(svg, m, re));
  std::istringstream d(m[1].str());
  Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  std::string tok;
  while (d >> tok) {
    if (tok[0] == 'M' || tok[0] == 'L') tok = tok.substr(1);
    const double x = std::stod(tok);
    double y = 0.0;
    d >> y;
    lo = {std::min(lo.x, x), std::min(lo.y, y)};
    hi = {std::max(hi.x, x), std::max(hi.y, y)};
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("circle path fills the expected box") {
  const auto traj = eval_trajectory(TrajectoryKind::kCircle, 0.1);
  EpisodeLog log;
  for (int k = 0; k * 0.04 <= traj->period(); ++k) {
    EnvStepRecord r;
    r.t = k * 0.04;
    r.target = traj->pose(r.t);
    r.rover = r.target;
    log.push_back(r);
  }
  PlotOptions opt;
  opt.title = "circle";
  const std::string svg = render_trajectory_svg({log}, opt);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<title>circle</title>") != std::string::npos);
  const auto [lo, hi] = path_bounds(svg, "rover-0");
  // Radius 1 m at 100 px/m: a 200 px square offset by the 25 px margin.
  const double side = 2.0 * EvalPathGeometry{}.circle_radius * opt.px_per_m;
  CHECK(hi.x - lo.x == doctest::Approx(side).epsilon(0.01));
  CHECK(hi.y - lo.y == doctest::Approx(side).epsilon(0.01));
  CHECK(lo.x == doctest::Approx(25.0).epsilon(0.01));
  CHECK(svg.find("id=\"target-0\"") != std::string::npos);
}

TEST_CASE("plot input errors") {
  CHECK_THROWS_AS(render_trajectory_svg({}), UsageError);
  PlotOptions opt;
  opt.px_per_m = 0.0;
  EpisodeLog log(3);
  CHECK_THROWS_AS(render_trajectory_svg({log}, opt), UsageError);
}
