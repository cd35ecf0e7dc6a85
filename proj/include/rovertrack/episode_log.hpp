#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rovertrack/env.hpp"

namespace rovertrack {

/// One record per control step, in order.
using EpisodeLog = std::vector<EnvStepRecord>;

/// Column order of the CSV form; the JSONL form uses the same names as keys.
const std::vector<std::string>& episode_log_columns();

void write_episode_csv(std::ostream& out, const EpisodeLog& log);
void write_episode_jsonl(std::ostream& out, const EpisodeLog& log);

/// Reads the CSV form back. Observation fields are not part of the format
/// and are left default.
EpisodeLog read_episode_csv(std::istream& in);

}  // namespace rovertrack
