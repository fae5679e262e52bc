#include "swarmsim/world.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {

constexpr std::uint32_t kMaxResamples = 1000;

void check_normal(const Normal& n, const char* name) {
  if (!std::isfinite(n.mean) || !(n.mean > 0.0)) {
    throw ConfigError(std::string(name) + ": distribution mean must be > 0");
  }
  if (!std::isfinite(n.std) || n.std < 0.0) throw ConfigError(std::string(name) + ": std must be >= 0");
}

double draw_positive(const KeyedRandom& rng, Stream stream, AgentId id, const Normal& dist, double upper) {
  if (dist.std == 0.0) return dist.mean;
  for (std::uint32_t attempt = 0; attempt < kMaxResamples; ++attempt) {
    const double v = dist.mean + dist.std * rng.normal(stream, id, attempt);
    if (v > 0.0 && v <= upper) return v;
  }
  throw ConfigError("could not draw a positive idiosyncrasy value; check the distribution");
}

}  // namespace

void WorldConfig::validate() const {
  if (n_agents < 1) throw ConfigError("n_agents must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  arena.validate();
  if (!(spawn.width > 0.0) || !(spawn.height > 0.0)) throw ConfigError("spawn box needs width and height > 0");
  if (spawn.min_separation < 0.0) throw ConfigError("spawn min_separation must be >= 0");
  if (noise.actuation_std < 0.0 || !std::isfinite(noise.actuation_std)) {
    throw ConfigError("noise.actuation_std must be >= 0");
  }
  for (double p : {noise.false_negative_rate, noise.false_positive_rate}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sensor noise rates must lie in [0, 1]");
  }
  swarmsim::validate(default_controller);
  for (const auto& [id, mode] : controller_assignments) {
    if (id >= n_agents) throw ConfigError("controller assignment for unknown agent " + std::to_string(id));
    swarmsim::validate(mode);
  }
  check_normal(population.speed_factor, "speed_factor");
  check_normal(population.turn_factor, "turn_factor");
  check_normal(population.vision_distance, "vision_distance");
  check_normal(population.vision_halfangle, "vision_halfangle");
  if (population.vision_halfangle.mean > std::numbers::pi) throw ConfigError("vision_halfangle mean exceeds pi");
  for (const auto& o : agent_overrides) {
    if (o.id >= n_agents) throw ConfigError("override for unknown agent " + std::to_string(o.id));
  }
  if (!(limits.max_speed > 0.0) || !(limits.max_turn_rate > 0.0)) throw ConfigError("actuator limits must be > 0");
  if (!(body_radius >= 0.0)) throw ConfigError("body_radius must be >= 0");
}

ControllerMode WorldConfig::controller_for(AgentId id) const {
  const auto it = controller_assignments.find(id);
  return it == controller_assignments.end() ? default_controller : it->second;
}

AgentParameters sample_agent_parameters(const PopulationModel& population, std::uint64_t seed, AgentId id) {
  const KeyedRandom rng(seed);
  const double inf = std::numeric_limits<double>::infinity();
  AgentParameters p;
  p.speed_factor = draw_positive(rng, Stream::SpeedFactor, id, population.speed_factor, inf);
  p.turn_factor = draw_positive(rng, Stream::TurnFactor, id, population.turn_factor, inf);
  p.vision_distance = draw_positive(rng, Stream::VisionDistance, id, population.vision_distance, inf);
  p.vision_halfangle =
      draw_positive(rng, Stream::VisionHalfangle, id, population.vision_halfangle, std::numbers::pi);
  return p;
}

// Sampling order: agents by ascending id; per agent the idiosyncrasies, then
// the spawn position (rejection attempts keyed by attempt number), then the
// heading. Only the rejection test looks at lower-id agents.
World::World(WorldConfig config) : config_(std::move(config)) {
  config_.validate();
  const KeyedRandom rng(config_.seed);
  const auto& spawn = config_.spawn;
  agents_.reserve(config_.n_agents);

  for (AgentId id = 0; id < config_.n_agents; ++id) {
    const AgentOverride* over = nullptr;
    for (const auto& o : config_.agent_overrides) {
      if (o.id == id) over = &o;
    }

    AgentState a;
    a.id = id;
    const AgentParameters p = sample_agent_parameters(config_.population, config_.seed, id);
    a.speed_factor = over && over->speed_factor ? *over->speed_factor : p.speed_factor;
    a.turn_factor = over && over->turn_factor ? *over->turn_factor : p.turn_factor;
    a.vision_distance = over && over->vision_distance ? *over->vision_distance : p.vision_distance;
    a.vision_halfangle = over && over->vision_halfangle ? *over->vision_halfangle : p.vision_halfangle;

    bool placed = false;
    for (std::uint32_t attempt = 0; attempt < spawn.max_attempts && !placed; ++attempt) {
      a.x = spawn.center.x + (rng.uniform(Stream::SpawnX, id, attempt) - 0.5) * spawn.width;
      a.y = spawn.center.y + (rng.uniform(Stream::SpawnY, id, attempt) - 0.5) * spawn.height;
      if (over && over->x) a.x = *over->x;
      if (over && over->y) a.y = *over->y;
      placed = true;
      if (spawn.min_separation > 0.0) {
        for (const auto& b : agents_) {
          if (distance(a.position(), b.position()) < spawn.min_separation) placed = false;
        }
      }
    }
    if (!placed) {
      std::ostringstream msg;
      msg << "spawn region too small for " << config_.n_agents << " agents at min_separation "
          << spawn.min_separation << " m";
      throw ConfigError(msg.str());
    }
    const Vec2 p0 = config_.arena.apply(a.position());
    a.x = p0.x;
    a.y = p0.y;
    a.heading = over && over->heading ? wrap_angle(*over->heading) : kTwoPi * rng.uniform(Stream::Heading, id);
    a.controller = config_.controller_for(id);
    swarmsim::validate(a);
    agents_.push_back(a);
  }
}

World::World(WorldConfig config, std::uint64_t tick, std::vector<AgentState> agents)
    : config_(std::move(config)), tick_(tick), agents_(std::move(agents)) {
  if (agents_.empty()) throw ConfigError("a world needs at least one agent");
  std::sort(agents_.begin(), agents_.end(), [](const AgentState& a, const AgentState& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < agents_.size(); ++i) {
    if (agents_[i].id == agents_[i - 1].id) throw ConfigError("duplicate agent id " + std::to_string(agents_[i].id));
  }
  config_.n_agents = agents_.size();
  config_.controller_assignments.clear();
  config_.agent_overrides.clear();
  config_.validate();
  for (const auto& a : agents_) swarmsim::validate(a);
}

std::size_t World::index_of(AgentId id) const {
  const auto it = std::lower_bound(agents_.begin(), agents_.end(), id,
                                   [](const AgentState& a, AgentId v) { return a.id < v; });
  if (it == agents_.end() || it->id != id) throw std::out_of_range("unknown agent id " + std::to_string(id));
  return static_cast<std::size_t>(it - agents_.begin());
}

const AgentState& World::agent(AgentId id) const { return agents_[index_of(id)]; }

std::vector<std::uint8_t> World::raw_readings(std::span<const Vec2> directions) const {
  const SensingOptions opt{config_.arena, config_.occlusion, config_.body_radius};
  return config_.sensing == SensingMethod::Grid ? sense_all_grid(agents_, opt, directions)
                                                : sense_all_brute_force(agents_, opt, directions);
}

bool World::apply_sensor_noise(bool reading, AgentId id) const {
  const auto& n = config_.noise;
  if (n.false_negative_rate == 0.0 && n.false_positive_rate == 0.0) return reading;
  const double u = KeyedRandom(config_.seed).uniform(Stream::SensorFlip, tick_, id);
  if (reading) return !(u < n.false_negative_rate);
  return u < n.false_positive_rate;
}

ActuationDraw World::actuation_draw(AgentId id) const {
  const double s = config_.noise.actuation_std;
  if (s == 0.0) return {};
  const KeyedRandom rng(config_.seed);
  return {std::max(0.0, 1.0 + s * rng.normal(Stream::ActuationSpeed, tick_, id)),
          std::max(0.0, 1.0 + s * rng.normal(Stream::ActuationTurn, tick_, id))};
}

bool World::sense(AgentId id) const {
  const std::size_t i = index_of(id);
  const SensingOptions opt{config_.arena, config_.occlusion, config_.body_radius};
  return apply_sensor_noise(sense_brute_force(agents_, i, opt), id);
}

void World::step() {
  thread_local std::vector<Vec2> directions;
  directions.resize(agents_.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    directions[i] = {std::cos(agents_[i].heading), std::sin(agents_[i].heading)};
  }
  const std::vector<std::uint8_t> raw = raw_readings(directions);
  // Built aside and swapped in, so a failed step leaves the world untouched.
  thread_local std::vector<AgentState> next;
  next.clear();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentState& a = agents_[i];
    const bool y = apply_sensor_noise(raw[i] != 0, a.id);
    const ControlInput u = saturate(apply_controller(a.controller, y), config_.limits);
    AgentState moved = step_agent(a, u, config_.dt, actuation_draw(a.id), config_.arena, directions[i]);
    moved.last_sensor = y;
    next.push_back(moved);
  }
  agents_.swap(next);
  ++tick_;
}

void World::assign_controller(AgentId id, const ControllerMode& mode) {
  swarmsim::validate(mode);
  agents_[index_of(id)].controller = mode;
}

void World::set_all_controllers(double v, double omega) {
  ControllerMode probe{ControllerTag::Milling, v, omega};
  swarmsim::validate(probe);
  for (auto& a : agents_) {
    a.controller.v = v;
    a.controller.omega = omega;
  }
  config_.default_controller.v = v;
  config_.default_controller.omega = omega;
  for (auto& [id, mode] : config_.controller_assignments) {
    mode.v = v;
    mode.omega = omega;
  }
}

void World::set_vision(std::optional<double> distance, std::optional<double> halfangle) {
  if (distance && (!(*distance > 0.0) || !std::isfinite(*distance))) throw ConfigError("vision distance must be > 0");
  if (halfangle && !(*halfangle > 0.0 && *halfangle <= std::numbers::pi)) {
    throw ConfigError("vision half-angle must be in (0, pi]");
  }
  for (auto& a : agents_) {
    if (distance) a.vision_distance = *distance;
    if (halfangle) a.vision_halfangle = *halfangle;
  }
  if (distance) config_.population.vision_distance.mean = *distance;
  if (halfangle) config_.population.vision_halfangle.mean = *halfangle;
}

void World::set_noise(const NoiseSpec& noise) {
  WorldConfig probe = config_;
  probe.noise = noise;
  probe.validate();
  config_.noise = noise;
}

World init_world(const WorldConfig& config) { return World(config); }

World step_world(World world) {
  world.step();
  return world;
}

bool sense(const World& world, AgentId id) { return world.sense(id); }

}  // namespace swarmsim
