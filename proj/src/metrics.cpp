#include "rovertrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <limits>
#include <map>
#include <sstream>

namespace rovertrack {

namespace {

using json = nlohmann::ordered_json;

double uniform_dt(std::span<const EnvStepRecord> log) {
  const double dt = log[1].t - log[0].t;
  if (!(dt > 0.0)) throw UsageError("metrics: timestamps must be strictly increasing");
  for (std::size_t i = 2; i < log.size(); ++i) {
    const double d = log[i].t - log[i - 1].t;
    if (std::abs(d - dt) > 1e-9 * std::max(1.0, std::abs(log[i].t)))
      throw UsageError("metrics: non-uniform timestamps at index " + std::to_string(i));
  }
  return dt;
}

double json_number(const json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

}  // namespace

AteResult ate(std::span<const EnvStepRecord> log) {
  if (log.empty()) throw UsageError("metrics: empty log");
  double pos = 0.0, yaw = 0.0;
  for (const auto& r : log) {
    pos += (r.rover.position - r.target.position).norm();
    yaw += std::abs(wrap_angle(r.rover.yaw - r.target.yaw));
  }
  const auto n = static_cast<double>(log.size());
  return {pos / n, yaw / n};
}

double jerk_abs(std::span<const EnvStepRecord> log) {
  if (log.size() < 4) throw UsageError("metrics: jerk needs at least 4 samples");
  const double dt = uniform_dt(log);
  const double dt3 = dt * dt * dt;
  auto p = [&](std::size_t i) { return log[i].rover.position; };
  if (log.size() == 4) return (p(3) - p(2) * 3.0 + p(1) * 3.0 - p(0)).norm() / dt3;
  double sum = 0.0;
  for (std::size_t i = 2; i + 2 < log.size(); ++i) {
    const Vec2 d = p(i + 2) - p(i + 1) * 2.0 + p(i - 1) * 2.0 - p(i - 2);
    sum += d.norm() / (2.0 * dt3);
  }
  return sum / static_cast<double>(log.size() - 4);
}

JerkResult jerk(std::span<const EnvStepRecord> log, std::optional<std::span<const EnvStepRecord>> baseline) {
  JerkResult r;
  r.abs = jerk_abs(log);
  r.rel = std::numeric_limits<double>::quiet_NaN();
  if (baseline) {
    const double b = jerk_abs(*baseline);
    if (!(b > 0.0)) throw UsageError("metrics: baseline jerk is zero");
    r.rel = 100.0 * r.abs / b;
  }
  return r;
}

std::optional<std::size_t> detect_lap_end(std::span<const EnvStepRecord> log, double path_length) {
  if (log.empty() || !(path_length > 0.0)) return std::nullopt;
  const Vec2 start = log.front().target.position;
  double covered = 0.0;
  std::size_t i = 1;
  for (; i < log.size() && covered < 0.9 * path_length; ++i)
    covered += (log[i].rover.position - log[i - 1].rover.position).norm();
  if (covered < 0.9 * path_length) return std::nullopt;
  // Walk forward while the distance to the start keeps shrinking.
  std::size_t best = i - 1;
  double best_d = (log[best].rover.position - start).norm();
  for (; i < log.size(); ++i) {
    const double d = (log[i].rover.position - start).norm();
    if (d > best_d) break;
    best = i;
    best_d = d;
  }
  return best + 1;
}

int count_laps(std::span<const EnvStepRecord> log, double path_length) {
  int laps = 0;
  while (!log.empty()) {
    const auto end = detect_lap_end(log, path_length);
    if (!end || *end >= log.size()) {
      if (end) ++laps;
      break;
    }
    ++laps;
    log = log.subspan(*end);
  }
  return laps;
}

std::span<const EnvStepRecord> after_first_lap(std::span<const EnvStepRecord> log, double path_length,
                                               std::size_t fallback_lap_steps) {
  std::size_t cut = detect_lap_end(log, path_length).value_or(fallback_lap_steps);
  if (cut >= log.size()) cut = std::min(fallback_lap_steps, log.size() > 4 ? log.size() - 4 : 0);
  return log.subspan(cut);
}

MetricsSummary summarize_all(std::span<const EnvStepRecord> log,
                             std::optional<std::span<const EnvStepRecord>> baseline) {
  MetricsSummary m;
  const AteResult a = ate(log);
  m.ate_pos = a.pos;
  m.ate_yaw = a.yaw;
  const JerkResult j = jerk(log, baseline);
  m.jerk_abs = j.abs;
  m.jerk_rel = j.rel;
  m.n_steps = log.size();
  return m;
}

MetricsSummary summarize(std::span<const EnvStepRecord> log, double path_length, std::size_t fallback_lap_steps,
                         std::optional<std::span<const EnvStepRecord>> baseline) {
  const auto tail = after_first_lap(log, path_length, fallback_lap_steps);
  std::optional<std::span<const EnvStepRecord>> base_tail;
  if (baseline) base_tail = after_first_lap(*baseline, path_length, fallback_lap_steps);
  MetricsSummary m = summarize_all(tail, base_tail);
  m.lap_count = count_laps(log, path_length);
  return m;
}

std::string to_json(const MetricsSummary& m, int indent) {
  json j;
  j["ate_pos"] = m.ate_pos;
  j["ate_yaw"] = m.ate_yaw;
  j["jerk_abs"] = m.jerk_abs;
  j["jerk_rel"] = std::isfinite(m.jerk_rel) ? json(m.jerk_rel) : json(nullptr);
  j["n_steps"] = m.n_steps;
  j["lap_count"] = m.lap_count;
  return j.dump(indent);
}

MetricsSummary metrics_from_json(const std::string& text) {
  const json j = json::parse(text);
  MetricsSummary m;
  m.ate_pos = j.at("ate_pos").get<double>();
  m.ate_yaw = j.at("ate_yaw").get<double>();
  m.jerk_abs = j.at("jerk_abs").get<double>();
  m.jerk_rel = json_number(j.at("jerk_rel"));
  m.n_steps = j.at("n_steps").get<std::size_t>();
  m.lap_count = j.at("lap_count").get<int>();
  return m;
}

std::string format_table(const std::vector<SweepEntry>& entries, const std::string& trajectory) {
  std::vector<double> speeds;
  std::vector<std::string> variants;
  std::map<std::pair<double, std::string>, const MetricsSummary*> cells;
  for (const auto& e : entries) {
    if (e.trajectory != trajectory) continue;
    if (std::find(speeds.begin(), speeds.end(), e.speed) == speeds.end()) speeds.push_back(e.speed);
    if (std::find(variants.begin(), variants.end(), e.variant) == variants.end()) variants.push_back(e.variant);
    cells[{e.speed, e.variant}] = &e.metrics;
  }
  std::sort(speeds.begin(), speeds.end());

  auto cell_text = [](const MetricsSummary& m) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << m.ate_pos * 100.0 << " cm | " << rad_to_deg(m.ate_yaw) << " deg";
    if (std::isfinite(m.jerk_rel)) s << " | " << std::setprecision(0) << m.jerk_rel << "%";
    return s.str();
  };
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"speed"});
  for (const auto& v : variants) grid[0].push_back(v);
  for (double sp : speeds) {
    std::ostringstream label;
    label << std::fixed << std::setprecision(0) << sp * 100.0 << " cm/s";
    std::vector<std::string> row{label.str()};
    for (const auto& v : variants) {
      auto it = cells.find({sp, v});
      row.push_back(it == cells.end() ? "-" : cell_text(*it->second));
    }
    grid.push_back(std::move(row));
  }
  std::vector<std::size_t> width(grid[0].size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  out << trajectory << "\n";
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      if (c) out << "  ";
      out << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c])) << grid[r][c];
    }
    out << "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
    }
  }
  return out.str();
}

std::string sweep_to_json(const std::vector<SweepEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j;
    j["trajectory"] = e.trajectory;
    j["speed"] = e.speed;
    j["variant"] = e.variant;
    j["metrics"] = json::parse(to_json(e.metrics, -1));
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

}  // namespace rovertrack
