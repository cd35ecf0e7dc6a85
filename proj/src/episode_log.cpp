#include "rovertrack/episode_log.hpp"

#include <array>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

namespace rovertrack {

namespace {

constexpr int kColumns = 18;

std::array<double, kColumns> flatten(const EnvStepRecord& r) {
  return {r.t,
          r.rover.position.x,
          r.rover.position.y,
          r.rover.yaw,
          r.target.position.x,
          r.target.position.y,
          r.target.yaw,
          r.raw_action[0],
          r.raw_action[1],
          r.applied_action[0],
          r.applied_action[1],
          r.reward.total,
          r.reward.dist_penalty,
          r.reward.heading_reward,
          r.reward.pos_align_reward,
          r.reward.yaw_align_reward,
          r.reward.stillness_reward,
          r.reward.action_rate_penalty};
}

}  // namespace

const std::vector<std::string>& episode_log_columns() {
  static const std::vector<std::string> columns = {
      "t",          "x",          "y",          "yaw",         "tx",      "ty",
      "tyaw",       "a0_raw",     "a1_raw",     "a0_applied",  "a1_applied", "r_total",
      "r_dist",     "r_heading",  "r_pos_align", "r_yaw_align", "r_stillness", "r_action_rate"};
  return columns;
}

void write_episode_csv(std::ostream& out, const EpisodeLog& log) {
  const auto& cols = episode_log_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << ",truncated\n";
  std::ostringstream line;
  line.precision(17);
  for (const auto& r : log) {
    line.str("");
    const auto values = flatten(r);
    for (int i = 0; i < kColumns; ++i) line << (i ? "," : "") << values[i];
    line << "," << (r.truncated ? 1 : 0) << "\n";
    out << line.str();
  }
}

void write_episode_jsonl(std::ostream& out, const EpisodeLog& log) {
  const auto& cols = episode_log_columns();
  for (const auto& r : log) {
    nlohmann::ordered_json j;
    const auto values = flatten(r);
    for (int i = 0; i < kColumns; ++i) j[cols[i]] = values[i];
    j["truncated"] = r.truncated;
    out << j.dump() << "\n";
  }
}

EpisodeLog read_episode_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("episode csv: missing header");
  {
    std::istringstream hs(line);
    std::string name;
    const auto& cols = episode_log_columns();
    for (int i = 0; i < kColumns; ++i) {
      if (!std::getline(hs, name, ',') || name != cols[i])
        throw ConfigError("episode csv: unexpected header column '" + name + "'");
    }
  }
  EpisodeLog log;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::array<double, kColumns + 1> v{};
    for (int i = 0; i <= kColumns; ++i) {
      if (!std::getline(ls, cell, ',')) {
        if (i == kColumns) break;  // truncated column optional
        throw ConfigError("episode csv: short row");
      }
      v[i] = std::stod(cell);
    }
    EnvStepRecord r;
    r.t = v[0];
    r.rover = {{v[1], v[2]}, v[3]};
    r.target = {{v[4], v[5]}, v[6]};
    r.raw_action = {v[7], v[8]};
    r.applied_action = {v[9], v[10]};
    r.reward = {v[12], v[13], v[14], v[15], v[16], v[17], v[11]};
    r.truncated = v[kColumns] != 0.0;
    log.push_back(r);
  }
  return log;
}

}  // namespace rovertrack
