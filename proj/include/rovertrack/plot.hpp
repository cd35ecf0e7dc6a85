#pragma once

#include <string>
#include <vector>

#include "rovertrack/episode_log.hpp"
#include "rovertrack/terrain.hpp"

namespace rovertrack {

struct PlotOptions {
  double px_per_m = 100.0;
  double margin_m = 0.25;
  const Terrain* terrain = nullptr;  // crater rims and boulders inside the view are outlined
  std::string title;
};

/// Overhead view of target path(s) (dashed) and rover path(s), north up.
/// Paths are emitted as <path> elements with ids "target-i" and "rover-i".
std::string render_trajectory_svg(const std::vector<EpisodeLog>& logs, const PlotOptions& options = {});

}  // namespace rovertrack
