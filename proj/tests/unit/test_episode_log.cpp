#include <doctest.h>

#include <json.hpp>
#include <sstream>

#include "rovertrack/episode_log.hpp"
#include "rovertrack/rng.hpp"

using namespace rovertrack;

namespace {

EpisodeLog sample_log() {
  CounterRng rng(1);
  EpisodeLog log;
  for (int i = 0; i < 25; ++i) {
    EnvStepRecord r;
    r.t = 0.04 * (i + 1);
    r.rover = {{rng.normal(), rng.normal()}, rng.uniform(-kPi, kPi)};
    r.target = {{rng.normal(), rng.normal()}, rng.uniform(-kPi, kPi)};
    r.raw_action = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.applied_action = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    r.reward.dist_penalty = -rng.uniform();
    r.reward.heading_reward = rng.uniform();
    r.reward.total = r.reward.dist_penalty + r.reward.heading_reward;
    r.truncated = i == 24;
    log.push_back(r);
  }
  return log;
}

}  // namespace

TEST_CASE("CSV round trip is exact") {
  const EpisodeLog log = sample_log();
  std::stringstream ss;
  write_episode_csv(ss, log);
  const std::string header = ss.str().substr(0, ss.str().find('\n'));
  CHECK(header.rfind("t,x,y,yaw,tx,ty,tyaw,a0_raw,a1_raw,a0_applied,a1_applied,r_total,", 0) == 0);
  const EpisodeLog back = read_episode_csv(ss);
  REQUIRE(back.size() == log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(back[i].t == log[i].t);
    CHECK(back[i].rover == log[i].rover);
    CHECK(back[i].target == log[i].target);
    CHECK(back[i].raw_action == log[i].raw_action);
    CHECK(back[i].applied_action == log[i].applied_action);
    CHECK(back[i].reward.total == log[i].reward.total);
    CHECK(back[i].reward.dist_penalty == log[i].reward.dist_penalty);
    CHECK(back[i].truncated == log[i].truncated);
  }
}

TEST_CASE("JSONL uses the CSV column names") {
  const EpisodeLog log = sample_log();
  std::stringstream ss;
  write_episode_jsonl(ss, log);
  std::string line;
  int n = 0;
  while (std::getline(ss, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const auto& col : episode_log_columns()) CHECK(j.contains(col));
    CHECK(j["x"].get<double>() == log[static_cast<std::size_t>(n)].rover.position.x);
    ++n;
  }
  CHECK(n == 25);
}

TEST_CASE("malformed CSV") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_episode_csv(empty), ConfigError);
  std::stringstream wrong("a,b,c\n1,2,3\n");
  CHECK_THROWS_AS(read_episode_csv(wrong), ConfigError);
}
