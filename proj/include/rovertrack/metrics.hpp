#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rovertrack/env.hpp"
#include "rovertrack/episode_log.hpp"

namespace rovertrack {

struct AteResult {
  double pos = 0.0;  // m
  double yaw = 0.0;  // rad
};

/// Mean position distance and mean absolute wrapped heading difference.
AteResult ate(std::span<const EnvStepRecord> log);

/// Time-averaged magnitude of the third derivative of the rover position.
/// Interior samples use the central stencil
///   (p[i+2] - 2 p[i+1] + 2 p[i-1] - p[i-2]) / (2 dt^3),
/// which is exact for cubics; the two samples at each end are excluded. A log
/// of exactly four samples yields the single forward difference.
double jerk_abs(std::span<const EnvStepRecord> log);

struct JerkResult {
  double abs = 0.0;  // m/s^3
  double rel = 0.0;  // percent of the baseline; NaN without a baseline
};

JerkResult jerk(std::span<const EnvStepRecord> log, std::optional<std::span<const EnvStepRecord>> baseline);

/// Index one past the end of the first lap. The rover must first cover 90% of
/// the path length; the lap then ends at its closest approach to the first
/// target position. Returns nullopt when the rover never covers that distance.
std::optional<std::size_t> detect_lap_end(std::span<const EnvStepRecord> log, double path_length);

/// Number of complete laps found by applying detect_lap_end repeatedly.
int count_laps(std::span<const EnvStepRecord> log, double path_length);

struct MetricsSummary {
  double ate_pos = 0.0;
  double ate_yaw = 0.0;
  double jerk_abs = 0.0;
  double jerk_rel = 0.0;  // NaN when no baseline was given
  std::size_t n_steps = 0;
  int lap_count = 0;
};

/// Metrics on the part of the log after the first lap. When no lap is
/// detected the first `fallback_lap_steps` records are dropped instead.
MetricsSummary summarize(std::span<const EnvStepRecord> log, double path_length, std::size_t fallback_lap_steps,
                         std::optional<std::span<const EnvStepRecord>> baseline = std::nullopt);

/// Metrics over the whole log (no lap exclusion).
MetricsSummary summarize_all(std::span<const EnvStepRecord> log,
                             std::optional<std::span<const EnvStepRecord>> baseline = std::nullopt);

/// Slice of the log used by summarize().
std::span<const EnvStepRecord> after_first_lap(std::span<const EnvStepRecord> log, double path_length,
                                               std::size_t fallback_lap_steps);

std::string to_json(const MetricsSummary& m, int indent = 2);
MetricsSummary metrics_from_json(const std::string& text);

/// One cell of an evaluation grid.
struct SweepEntry {
  std::string trajectory;
  double speed = 0.0;    // m/s
  std::string variant;   // filter or policy name
  MetricsSummary metrics;
};

/// Aligned text table with one row per speed and one column per variant.
/// Each cell shows "ATE cm | ATE deg | jerk %" for the named trajectory.
std::string format_table(const std::vector<SweepEntry>& entries, const std::string& trajectory);

std::string sweep_to_json(const std::vector<SweepEntry>& entries);

}  // namespace rovertrack
