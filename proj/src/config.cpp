#include "rovertrack/config.hpp"

#include <fstream>
#include <set>
#include <type_traits>

namespace rovertrack {

namespace {

// Each config struct lists its members once; encoding and decoding walk the
// same list.

template <typename F> void fields(TerrainParams& p, F&& f) {
  f("seed", p.seed);
  f("extent", p.extent);
  f("resolution", p.resolution);
  f("base_amplitude", p.base_amplitude);
  f("base_frequency", p.base_frequency);
  f("detail_octaves", p.detail_octaves);
  f("detail_gain", p.detail_gain);
  f("crater_count_range", p.crater_count_range);
  f("crater_radius_range", p.crater_radius_range);
  f("crater_depth_ratio", p.crater_depth_ratio);
  f("rim_height_range", p.rim_height_range);
  f("boulder_min_spacing", p.boulder_min_spacing);
  f("boulder_density", p.boulder_density);
  f("boulder_radius_range", p.boulder_radius_range);
  f("boulder_height_ratio", p.boulder_height_ratio);
}

template <typename F> void fields(BaseFrameOffset& p, F&& f) {
  f("xy", p.xy);
  f("yaw", p.yaw);
}

template <typename F> void fields(DynamicsParams& p, F&& f) {
  f("wheelbase", p.wheelbase);
  f("max_lin_speed", p.max_lin_speed);
  f("max_ang_speed", p.max_ang_speed);
  f("dt", p.dt);
  f("gravity", p.gravity);
  f("slip_lin", p.slip_lin);
  f("slip_ang", p.slip_ang);
  f("downhill_drift_gain", p.downhill_drift_gain);
  f("base_frame_offset", p.base_frame_offset);
}

template <typename F> void fields(RandomizationRanges& p, F&& f) {
  f("gravity_magnitude", p.gravity_magnitude);
  f("gravity_max_tilt", p.gravity_max_tilt);
  f("offset_xy_std", p.offset_xy_std);
  f("offset_yaw_std", p.offset_yaw_std);
  f("slip_lin", p.slip_lin);
  f("slip_ang", p.slip_ang);
}

template <typename F> void fields(NoiseConfig& p, F&& f) {
  f("bias_pos_std", p.bias_pos_std);
  f("bias_yaw_std", p.bias_yaw_std);
  f("step_pos_std", p.step_pos_std);
  f("step_yaw_std", p.step_yaw_std);
}

template <typename F> void fields(DelayConfig& p, F&& f) {
  f("max_obs_delay", p.max_obs_delay);
  f("max_act_delay", p.max_act_delay);
  f("resample_interval_steps", p.resample_interval_steps);
  f("resample_probability", p.resample_probability);
}

template <typename F> void fields(RewardWeights& p, F&& f) {
  f("dist", p.dist);
  f("heading", p.heading);
  f("pos_align", p.pos_align);
  f("yaw_align", p.yaw_align);
  f("stillness", p.stillness);
  f("action_rate", p.action_rate);
  f("sigma_pos", p.sigma_pos);
  f("sigma_yaw", p.sigma_yaw);
  f("sigma_action", p.sigma_action);
}

template <typename F> void fields(TrainingTrajectoryParams& p, F&& f) {
  f("bounds_half_extent", p.bounds_half_extent);
  f("speed_range", p.speed_range);
  f("relaxation_time", p.relaxation_time);
  f("smoothing_time", p.smoothing_time);
  f("horizon", p.horizon);
  f("dt", p.dt);
}

template <typename F> void fields(SpawnConfig& p, F&& f) {
  f("rover_half_extent", p.rover_half_extent);
  f("target_offset_max", p.target_offset_max);
}

template <typename F> void fields(FilterSpec& p, F&& f) {
  f("kind", p.kind);
  f("window", p.window);
  f("order", p.order);
  f("sg_lag", p.sg_lag);
  f("cutoff_hz", p.cutoff_hz);
  f("sample_hz", p.sample_hz);
  f("warm_start", p.warm_start);
}

template <typename F> void fields(EnvConfig& p, F&& f) {
  f("dynamics", p.dynamics);
  f("ranges", p.ranges);
  f("noise", p.noise);
  f("delay", p.delay);
  f("reward", p.reward);
  f("trajectory", p.trajectory);
  f("spawn", p.spawn);
  f("episode_steps", p.episode_steps);
  f("filter", p.filter);
}

template <typename F> void fields(RandomizationToggles& p, F&& f) {
  f("gravity", p.gravity);
  f("base_offset", p.base_offset);
  f("slip", p.slip);
  f("obs_noise", p.obs_noise);
  f("delays", p.delays);
}

template <typename F> void fields(RegimeConfig& p, F&& f) {
  f("regime", p.regime);
  f("n_envs", p.n_envs);
  f("master_seed", p.master_seed);
  f("workers", p.workers);
  f("toggles", p.toggles);
  f("terrain", p.terrain);
  f("env", p.env);
}

template <typename F> void fields(PpoConfig& p, F&& f) {
  f("lr_start", p.lr_start);
  f("gamma", p.gamma);
  f("rollout_len", p.rollout_len);
  f("minibatch", p.minibatch);
  f("epochs", p.epochs);
  f("gae_lambda", p.gae_lambda);
  f("clip", p.clip);
  f("entropy_coef", p.entropy_coef);
  f("value_coef", p.value_coef);
  f("grad_clip_norm", p.grad_clip_norm);
  f("adam_eps", p.adam_eps);
  f("adam_beta1", p.adam_beta1);
  f("adam_beta2", p.adam_beta2);
  f("normalize_advantages", p.normalize_advantages);
  f("normalize_values", p.normalize_values);
  f("hidden", p.hidden);
  f("log_std_init", p.log_std_init);
  f("total_steps", p.total_steps);
  f("seed", p.seed);
  f("grad_chunks", p.grad_chunks);
}

template <typename F> void fields(EvalPathGeometry& p, F&& f) {
  f("capsule_straight", p.capsule_straight);
  f("capsule_radius", p.capsule_radius);
  f("rectangle_width", p.rectangle_width);
  f("rectangle_height", p.rectangle_height);
  f("rectangle_corner_radius", p.rectangle_corner_radius);
  f("circle_radius", p.circle_radius);
  f("lissajous_ax", p.lissajous_ax);
  f("lissajous_ay", p.lissajous_ay);
  f("lemniscate_a", p.lemniscate_a);
}

template <typename F> void fields(EvalGrid& p, F&& f) {
  f("trajectories", p.trajectories);
  f("speeds", p.speeds);
  f("filters", p.filters);
  f("episodes", p.episodes);
  f("laps", p.laps);
  f("seed", p.seed);
  f("toggles", p.toggles);
  f("geometry", p.geometry);
}

template <typename F> void fields(RunConfig& p, F&& f) {
  f("regime", p.regime);
  f("ppo", p.ppo);
  f("eval", p.eval);
}

template <typename T>
concept HasFields = requires(T& t) { fields(t, [](const char*, auto&) {}); };

template <typename T> struct is_std_array : std::false_type {};
template <typename T, std::size_t N> struct is_std_array<std::array<T, N>> : std::true_type {};
template <typename T> struct is_vector : std::false_type {};
template <typename T> struct is_vector<std::vector<T>> : std::true_type {};

// --- encode ---

template <typename T>
Json encode(const T& v) {
  if constexpr (std::is_same_v<T, Regime> || std::is_same_v<T, FilterKind> || std::is_same_v<T, TrajectoryKind>) {
    return Json(std::string(to_string(v)));
  } else if constexpr (std::is_same_v<T, Vec2>) {
    return Json::array({v.x, v.y});
  } else if constexpr (is_std_array<T>::value || is_vector<T>::value) {
    Json a = Json::array();
    for (const auto& x : v) a.push_back(encode(x));
    return a;
  } else if constexpr (HasFields<T>) {
    Json j = Json::object();
    fields(const_cast<T&>(v), [&](const char* key, const auto& member) { j[key] = encode(member); });
    return j;
  } else {
    return Json(v);
  }
}

// --- decode ---

[[noreturn]] void type_error(const std::string& path, const char* expected) {
  throw ConfigError("config: '" + path + "' must be " + expected);
}

template <typename T>
void decode(const Json& j, T& out, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) type_error(path, "a boolean");
    out = j.get<bool>();
  } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
      type_error(path, "a non-negative integer");
    out = j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) type_error(path, "an integer");
    out = j.get<T>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) type_error(path, "a number");
    out = j.get<T>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) type_error(path, "a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, Regime>) {
    if (!j.is_string()) type_error(path, "a string");
    out = parse_regime(j.get<std::string>());
  } else if constexpr (std::is_same_v<T, FilterKind>) {
    if (!j.is_string()) type_error(path, "a string");
    out = parse_filter_kind(j.get<std::string>());
  } else if constexpr (std::is_same_v<T, TrajectoryKind>) {
    if (!j.is_string()) type_error(path, "a string");
    out = parse_trajectory_kind(j.get<std::string>());
  } else if constexpr (std::is_same_v<T, Vec2>) {
    if (!j.is_array() || j.size() != 2) type_error(path, "an array of 2 numbers");
    decode(j[0], out.x, path + "[0]");
    decode(j[1], out.y, path + "[1]");
  } else if constexpr (is_std_array<T>::value) {
    if (!j.is_array() || j.size() != out.size())
      type_error(path, ("an array of " + std::to_string(out.size()) + " values").c_str());
    for (std::size_t i = 0; i < out.size(); ++i) decode(j[i], out[i], path + "[" + std::to_string(i) + "]");
  } else if constexpr (is_vector<T>::value) {
    if (!j.is_array()) type_error(path, "an array");
    out.clear();
    out.resize(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) decode(j[i], out[i], path + "[" + std::to_string(i) + "]");
  } else {
    static_assert(HasFields<T>);
    if (!j.is_object()) type_error(path, "an object");
    std::set<std::string> known;
    fields(out, [&](const char* key, auto&) { known.insert(key); });
    for (const auto& [key, value] : j.items())
      if (!known.count(key)) throw ConfigError("config: unknown key '" + (path.empty() ? key : path + "." + key) + "'");
    fields(out, [&](const char* key, auto& member) {
      if (j.contains(key)) decode(j.at(key), member, path.empty() ? key : path + "." + key);
    });
  }
}

}  // namespace

void RunConfig::validate() const {
  regime.validate();
  resolved_ppo().validate();
  if (eval.episodes < 1) throw ConfigError("config: eval.episodes must be >= 1");
  if (!(eval.laps > 1.0)) throw ConfigError("config: eval.laps must be > 1");
  for (double s : eval.speeds)
    if (!(s > 0.0)) throw ConfigError("config: eval speeds must be > 0");
  for (const auto& f : eval.filters) FilterSpec::from_name(f).validate();
  for (auto k : eval.trajectories)
    if (k == TrajectoryKind::kTrainingRandom) throw ConfigError("config: 'training' is not an evaluation path");
}

PpoConfig RunConfig::resolved_ppo() const {
  PpoConfig p = ppo;
  p.n_envs = regime.n_envs;
  return p;
}

EvalConfig RunConfig::eval_config(TrajectoryKind kind, double speed, const FilterSpec& filter) const {
  EvalConfig e;
  e.trajectory = kind;
  e.speed = speed;
  e.filter = filter;
  e.episodes = eval.episodes;
  e.laps = eval.laps;
  e.seed = eval.seed;
  e.toggles = eval.toggles;
  e.terrain = regime.terrain;
  e.env = regime.env;
  e.geometry = eval.geometry;
  return e;
}

Json to_json(const RunConfig& c) { return encode(c); }
Json to_json(const RegimeConfig& c) { return encode(c); }
Json to_json(const PpoConfig& c) { return encode(c); }
Json to_json(const TerrainParams& c) { return encode(c); }
Json to_json(const EnvConfig& c) { return encode(c); }
Json to_json(const FilterSpec& c) { return encode(c); }

RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  decode(j, c, "");
  c.validate();
  return c;
}

RegimeConfig regime_config_from_json(const Json& j) {
  RegimeConfig c;
  decode(j, c, "");
  c.validate();
  return c;
}

FilterSpec filter_spec_from_json(const Json& j) {
  if (j.is_string()) return FilterSpec::from_name(j.get<std::string>());
  FilterSpec f;
  decode(j, f, "");
  f.validate();
  return f;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

void save_run_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  out << to_json(c).dump(2) << "\n";
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

}  // namespace rovertrack
