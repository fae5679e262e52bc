#include "swarmsim/config_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "swarmsim/calibration.hpp"
#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Walks one JSON object, remembering which keys were read so that typos
// surface as errors instead of silently falling back to defaults.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const Json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(where_ + "." + key + " is required");
    return j_.at(key);
  }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return convert<T>(j_.at(key), key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (auto v = get<T>(key)) out = *v;
  }

  /// Null maps to +infinity.
  void read_limit(const std::string& key, double& out) {
    if (!has(key)) return;
    out = j_.at(key).is_null() ? kInf : convert<double>(j_.at(key), key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.contains(k)) throw ConfigError("unknown key '" + k + "' in " + where_);
    }
  }

 private:
  template <typename T>
  T convert(const Json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(where_ + "." + key + " must be a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
          throw ConfigError(where_ + "." + key + " must be a non-negative integer");
        }
      }
      return v.get<T>();
    } catch (const Json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

Normal read_normal(const Json& j, const std::string& where, double scale = 1.0) {
  ObjectReader r(j, where);
  Normal n{r.get<double>("mean").value_or(0.0) * scale, r.get<double>("std").value_or(0.0) * scale};
  if (!j.contains("mean")) throw ConfigError(where + ".mean is required");
  r.finish();
  return n;
}

Json normal_json(const Normal& n) { return {{"mean", n.mean}, {"std", n.std}}; }

Json limit_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

/// omega_rad_s or omega_deg_s, not both.
std::optional<double> read_omega(ObjectReader& r, const std::string& where) {
  const auto rad = r.get<double>("omega_rad_s");
  const auto deg = r.get<double>("omega_deg_s");
  if (rad && deg) throw ConfigError(where + ": give omega_rad_s or omega_deg_s, not both");
  if (deg) return deg_to_rad(*deg);
  return rad;
}

std::optional<double> read_angle(ObjectReader& r, const std::string& stem, const std::string& where) {
  const auto rad = r.get<double>(stem + "_rad");
  const auto deg = r.get<double>(stem + "_deg");
  if (rad && deg) throw ConfigError(where + ": give " + stem + "_rad or " + stem + "_deg, not both");
  if (deg) return deg_to_rad(*deg);
  return rad;
}

ControllerTag read_law(ObjectReader& r, const std::string& where) {
  const std::string name = r.at("law").get<std::string>();
  const auto tag = parse_controller_tag(name);
  if (!tag) throw ConfigError(where + ".law: unknown controller '" + name + "'");
  return *tag;
}

ControllerMode read_controller(const Json& j, const std::string& where, const ControllerMode& base) {
  ObjectReader r(j, where);
  ControllerMode m = base;
  if (r.has("law")) m.tag = read_law(r, where);
  r.read("v_m_s", m.v);
  if (auto w = read_omega(r, where)) m.omega = *w;
  r.finish();
  return m;
}

Json controller_json(const ControllerMode& m) {
  return {{"law", std::string(to_string(m.tag))}, {"v_m_s", m.v}, {"omega_rad_s", m.omega}};
}

ArenaSpec read_arena(const Json& j) {
  ObjectReader r(j, "arena");
  ArenaSpec a;
  const std::string kind = r.at("kind").get<std::string>();
  if (kind == "unbounded") {
    a.kind = ArenaSpec::Kind::Unbounded;
  } else if (kind == "clamp") {
    a.kind = ArenaSpec::Kind::BoundedClamp;
  } else if (kind == "torus") {
    a.kind = ArenaSpec::Kind::Torus;
  } else {
    throw ConfigError("arena.kind: unknown kind '" + kind + "'");
  }
  r.read("width_m", a.width);
  r.read("height_m", a.height);
  r.finish();
  return a;
}

Json arena_json(const ArenaSpec& a) {
  const char* kind = a.kind == ArenaSpec::Kind::Unbounded ? "unbounded"
                     : a.kind == ArenaSpec::Kind::BoundedClamp ? "clamp"
                                                                : "torus";
  Json j = {{"kind", kind}};
  if (a.kind != ArenaSpec::Kind::Unbounded) {
    j["width_m"] = a.width;
    j["height_m"] = a.height;
  }
  return j;
}

Vec2 read_point(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(where + " must be [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

SpawnSpec read_spawn(const Json& j) {
  ObjectReader r(j, "spawn");
  SpawnSpec s;
  if (r.has("center_m")) s.center = read_point(r.at("center_m"), "spawn.center_m");
  r.read("width_m", s.width);
  r.read("height_m", s.height);
  r.read("min_separation_m", s.min_separation);
  r.read("max_attempts", s.max_attempts);
  r.finish();
  return s;
}

NoiseSpec read_noise(const Json& j) {
  ObjectReader r(j, "noise");
  NoiseSpec n;
  r.read("actuation_std", n.actuation_std);
  r.read("false_negative_rate", n.false_negative_rate);
  r.read("false_positive_rate", n.false_positive_rate);
  r.finish();
  return n;
}

void read_population(const Json& j, PopulationModel& p) {
  ObjectReader r(j, "population");
  if (r.has("speed_factor")) p.speed_factor = read_normal(r.at("speed_factor"), "population.speed_factor");
  if (r.has("turn_factor")) p.turn_factor = read_normal(r.at("turn_factor"), "population.turn_factor");
  if (r.has("vision_distance_m")) {
    p.vision_distance = read_normal(r.at("vision_distance_m"), "population.vision_distance_m");
  }
  const bool rad = r.has("vision_halfangle_rad");
  const bool deg = r.has("vision_halfangle_deg");
  if (rad && deg) throw ConfigError("population: give vision_halfangle_rad or vision_halfangle_deg, not both");
  if (rad) p.vision_halfangle = read_normal(r.at("vision_halfangle_rad"), "population.vision_halfangle_rad");
  if (deg) {
    p.vision_halfangle = read_normal(r.at("vision_halfangle_deg"), "population.vision_halfangle_deg", deg_to_rad(1.0));
  }
  r.finish();
}

AgentOverride read_override(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  AgentOverride o;
  o.id = r.at("id").get<AgentId>();
  o.x = r.get<double>("x_m");
  o.y = r.get<double>("y_m");
  o.heading = read_angle(r, "heading", where);
  o.speed_factor = r.get<double>("speed_factor");
  o.turn_factor = r.get<double>("turn_factor");
  o.vision_distance = r.get<double>("vision_distance_m");
  o.vision_halfangle = read_angle(r, "vision_halfangle", where);
  r.finish();
  return o;
}

Json override_json(const AgentOverride& o) {
  Json j = {{"id", o.id}};
  if (o.x) j["x_m"] = *o.x;
  if (o.y) j["y_m"] = *o.y;
  if (o.heading) j["heading_rad"] = *o.heading;
  if (o.speed_factor) j["speed_factor"] = *o.speed_factor;
  if (o.turn_factor) j["turn_factor"] = *o.turn_factor;
  if (o.vision_distance) j["vision_distance_m"] = *o.vision_distance;
  if (o.vision_halfangle) j["vision_halfangle_rad"] = *o.vision_halfangle;
  return j;
}

ClassifierConfig read_classifier(const Json& j) {
  ObjectReader r(j, "classifier");
  ClassifierConfig c;
  r.read("mill_threshold", c.mill_threshold);
  r.read("ellipse_threshold", c.ellipse_threshold);
  r.read("window_fraction", c.window_fraction);
  r.read("min_window_ticks", c.min_window_ticks);
  if (r.has("link_distance_m") && !j.at("link_distance_m").is_null()) c.link_distance = r.get<double>("link_distance_m");
  r.read("circliness_epsilon_m", c.circliness_epsilon);
  r.read("pivot_epsilon_rad_s", c.pivot_epsilon);
  r.finish();
  if (!(c.mill_threshold > 0.0) || !(c.ellipse_threshold > c.mill_threshold)) {
    throw ConfigError("classifier thresholds need 0 < mill_threshold < ellipse_threshold");
  }
  if (!(c.window_fraction > 0.0 && c.window_fraction <= 1.0)) {
    throw ConfigError("classifier.window_fraction must lie in (0, 1]");
  }
  if (c.link_distance && !(*c.link_distance > 0.0)) throw ConfigError("classifier.link_distance_m must be > 0");
  return c;
}

AgentState read_agent_state(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  AgentState a;
  a.id = r.at("id").get<AgentId>();
  a.x = r.at("x_m").get<double>();
  a.y = r.at("y_m").get<double>();
  a.heading = r.at("heading_rad").get<double>();
  r.read("speed_factor", a.speed_factor);
  r.read("turn_factor", a.turn_factor);
  r.read("vision_distance_m", a.vision_distance);
  r.read("vision_halfangle_rad", a.vision_halfangle);
  if (r.has("controller")) a.controller = read_controller(r.at("controller"), where + ".controller", a.controller);
  r.read("last_sensor", a.last_sensor);
  if (r.has("last_input")) {
    ObjectReader in(r.at("last_input"), where + ".last_input");
    in.read("forward_speed_m_s", a.last_input.forward_speed);
    in.read("turn_rate_rad_s", a.last_input.turn_rate);
    in.finish();
  }
  r.finish();
  return a;
}

WorldConfig read_world(ObjectReader& r, const std::filesystem::path& base_dir) {
  WorldConfig c;
  r.read("n_agents", c.n_agents);
  r.read("dt_s", c.dt);
  r.read("seed", c.seed);
  if (r.has("arena")) c.arena = read_arena(r.at("arena"));
  if (r.has("spawn")) c.spawn = read_spawn(r.at("spawn"));
  if (r.has("noise")) c.noise = read_noise(r.at("noise"));
  if (r.has("controller")) c.default_controller = read_controller(r.at("controller"), "controller", c.default_controller);
  if (r.has("calibration_profile")) {
    std::filesystem::path p = r.at("calibration_profile").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c.population = population_of(read_profile(p));
  }
  if (r.has("population")) read_population(r.at("population"), c.population);
  if (r.has("controller_assignments")) {
    const Json& list = r.at("controller_assignments");
    if (!list.is_array()) throw ConfigError("controller_assignments must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "controller_assignments[" + std::to_string(i) + "]";
      if (!list[i].is_object() || !list[i].contains("id")) throw ConfigError(where + ".id is required");
      const AgentId id = list[i]["id"].get<AgentId>();
      Json rest = list[i];
      rest.erase("id");
      if (c.controller_assignments.contains(id)) throw ConfigError(where + ": agent assigned twice");
      c.controller_assignments[id] = read_controller(rest, where, c.default_controller);
    }
  }
  if (r.has("agents")) {
    const Json& list = r.at("agents");
    if (!list.is_array()) throw ConfigError("agents must be an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      c.agent_overrides.push_back(read_override(list[i], "agents[" + std::to_string(i) + "]"));
    }
  }
  if (r.has("actuator_limits")) {
    ObjectReader l(r.at("actuator_limits"), "actuator_limits");
    l.read_limit("max_speed_m_s", c.limits.max_speed);
    l.read_limit("max_turn_rate_rad_s", c.limits.max_turn_rate);
    l.finish();
  }
  r.read("body_radius_m", c.body_radius);
  if (r.has("sensing")) {
    ObjectReader s(r.at("sensing"), "sensing");
    if (auto m = s.get<std::string>("method")) {
      if (*m == "grid") {
        c.sensing = SensingMethod::Grid;
      } else if (*m == "brute_force") {
        c.sensing = SensingMethod::BruteForce;
      } else {
        throw ConfigError("sensing.method: unknown method '" + *m + "'");
      }
    }
    s.read("occlusion", c.occlusion);
    s.finish();
  }
  return c;
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir) {
  try {
    ObjectReader top(doc, "config");
    const std::string schema = top.get<std::string>("schema").value_or(std::string(kConfigSchema));
    RunConfig rc;

    if (schema == kSnapshotSchema) {
      rc = parse_run_config(top.at("config"), base_dir);
      ObjectReader st(top.at("state"), "state");
      WorldState ws;
      ws.tick = st.at("tick").get<std::uint64_t>();
      const Json& agents = st.at("agents");
      if (!agents.is_array()) throw ConfigError("state.agents must be an array");
      for (std::size_t i = 0; i < agents.size(); ++i) {
        ws.agents.push_back(read_agent_state(agents[i], "state.agents[" + std::to_string(i) + "]"));
      }
      st.finish();
      top.finish();
      rc.state = std::move(ws);
      // Validate by constructing; the snapshot constructor checks ids and state.
      (void)instantiate(rc);
      return rc;
    }
    if (schema != kConfigSchema) throw ConfigError("unsupported schema '" + schema + "'");

    rc.world = read_world(top, base_dir);
    if (top.has("classifier")) rc.classifier = read_classifier(top.at("classifier"));
    top.read("ticks", rc.ticks);
    top.finish();
    rc.world.validate();
    return rc;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

RunConfig parse_run_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_run_config(doc, base_dir);
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), file.parent_path());
}

Json to_json(const ClassifierConfig& c) {
  return {{"mill_threshold", c.mill_threshold},
          {"ellipse_threshold", c.ellipse_threshold},
          {"window_fraction", c.window_fraction},
          {"min_window_ticks", c.min_window_ticks},
          {"link_distance_m", c.link_distance ? Json(*c.link_distance) : Json(nullptr)},
          {"circliness_epsilon_m", c.circliness_epsilon},
          {"pivot_epsilon_rad_s", c.pivot_epsilon}};
}

Json to_json(const WorldConfig& c) {
  Json assignments = Json::array();
  for (const auto& [id, m] : c.controller_assignments) {
    Json a = {{"id", id}};
    a.update(controller_json(m));
    assignments.push_back(std::move(a));
  }
  Json overrides = Json::array();
  for (const auto& o : c.agent_overrides) overrides.push_back(override_json(o));
  const auto& p = c.population;
  return {{"schema", kConfigSchema},
          {"n_agents", c.n_agents},
          {"dt_s", c.dt},
          {"seed", c.seed},
          {"arena", arena_json(c.arena)},
          {"spawn",
           {{"center_m", {c.spawn.center.x, c.spawn.center.y}},
            {"width_m", c.spawn.width},
            {"height_m", c.spawn.height},
            {"min_separation_m", c.spawn.min_separation},
            {"max_attempts", c.spawn.max_attempts}}},
          {"noise",
           {{"actuation_std", c.noise.actuation_std},
            {"false_negative_rate", c.noise.false_negative_rate},
            {"false_positive_rate", c.noise.false_positive_rate}}},
          {"controller", controller_json(c.default_controller)},
          {"controller_assignments", std::move(assignments)},
          {"population",
           {{"speed_factor", normal_json(p.speed_factor)},
            {"turn_factor", normal_json(p.turn_factor)},
            {"vision_distance_m", normal_json(p.vision_distance)},
            {"vision_halfangle_rad", normal_json(p.vision_halfangle)}}},
          {"agents", std::move(overrides)},
          {"actuator_limits",
           {{"max_speed_m_s", limit_json(c.limits.max_speed)},
            {"max_turn_rate_rad_s", limit_json(c.limits.max_turn_rate)}}},
          {"body_radius_m", c.body_radius},
          {"sensing",
           {{"method", c.sensing == SensingMethod::Grid ? "grid" : "brute_force"}, {"occlusion", c.occlusion}}}};
}

Json to_json(const RunConfig& rc) {
  Json j = to_json(rc.world);
  j["classifier"] = to_json(rc.classifier);
  j["ticks"] = rc.ticks;
  if (!rc.state) return j;
  Json agents = Json::array();
  for (const auto& a : rc.state->agents) agents.push_back(to_json(a));
  return {{"schema", kSnapshotSchema}, {"config", std::move(j)}, {"state", {{"tick", rc.state->tick}, {"agents", agents}}}};
}

Json to_json(const AgentState& a) {
  return {{"id", a.id},
          {"x_m", a.x},
          {"y_m", a.y},
          {"heading_rad", a.heading},
          {"speed_factor", a.speed_factor},
          {"turn_factor", a.turn_factor},
          {"vision_distance_m", a.vision_distance},
          {"vision_halfangle_rad", a.vision_halfangle},
          {"controller", controller_json(a.controller)},
          {"last_sensor", a.last_sensor},
          {"last_input", {{"forward_speed_m_s", a.last_input.forward_speed}, {"turn_rate_rad_s", a.last_input.turn_rate}}}};
}

Json snapshot_json(const World& world, const ClassifierConfig& classifier, std::uint64_t ticks) {
  RunConfig rc{world.config(), classifier, ticks, WorldState{world.tick(), {}}};
  rc.state->agents.assign(world.agents().begin(), world.agents().end());
  return to_json(rc);
}

World instantiate(const RunConfig& config) {
  if (config.state) return World(config.world, config.state->tick, config.state->agents);
  return World(config.world);
}

}  // namespace swarmsim
