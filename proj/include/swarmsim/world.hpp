#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "swarmsim/agent.hpp"
#include "swarmsim/arena.hpp"
#include "swarmsim/random.hpp"
#include "swarmsim/sensing.hpp"

namespace swarmsim {

struct NoiseSpec {
  double actuation_std = 0.0;  // per-step multiplicative, on both speed and turn
  double false_negative_rate = 0.0;
  double false_positive_rate = 0.0;

  bool enabled() const { return actuation_std > 0.0 || false_negative_rate > 0.0 || false_positive_rate > 0.0; }
  bool operator==(const NoiseSpec&) const = default;
};

struct Normal {
  double mean = 0.0;
  double std = 0.0;

  bool operator==(const Normal&) const = default;
};

/// Distributions the per-agent idiosyncrasies are drawn from.
struct PopulationModel {
  Normal speed_factor{1.0, 0.0};
  Normal turn_factor{1.0, 0.0};
  Normal vision_distance{1.10, 0.0};            // m
  Normal vision_halfangle{deg_to_rad(24.5), 0.0};  // rad

  bool operator==(const PopulationModel&) const = default;
};

/// Explicit values for one agent; unset fields fall back to sampling.
struct AgentOverride {
  AgentId id = 0;
  std::optional<double> x, y, heading;
  std::optional<double> speed_factor, turn_factor;
  std::optional<double> vision_distance, vision_halfangle;

  bool operator==(const AgentOverride&) const = default;
};

/// Parameters drawn for one agent.
struct AgentParameters {
  double speed_factor = 1.0;
  double turn_factor = 1.0;
  double vision_distance = 1.10;
  double vision_halfangle = deg_to_rad(24.5);

  bool operator==(const AgentParameters&) const = default;
};

/// Axis-aligned spawn box. Positions and headings are uniform inside it.
struct SpawnSpec {
  Vec2 center{};
  double width = 2.0;
  double height = 2.0;
  double min_separation = 0.0;  // m; 0 disables rejection
  std::uint32_t max_attempts = 10000;

  bool operator==(const SpawnSpec&) const = default;
};

enum class SensingMethod { Grid, BruteForce };

struct WorldConfig {
  std::size_t n_agents = 6;
  double dt = 0.022;  // s
  ArenaSpec arena{};
  SpawnSpec spawn{};
  NoiseSpec noise{};
  std::uint64_t seed = 0;
  ControllerMode default_controller{};
  std::map<AgentId, ControllerMode> controller_assignments;
  PopulationModel population{};
  std::vector<AgentOverride> agent_overrides;
  ActuatorLimits limits{};
  double body_radius = 0.0975;  // m, half the 19 cm robot length
  SensingMethod sensing = SensingMethod::Grid;
  bool occlusion = false;

  bool operator==(const WorldConfig&) const = default;

  /// Throws ConfigError on any violated invariant.
  void validate() const;

  ControllerMode controller_for(AgentId id) const;
};

/// Draws one agent's idiosyncrasies. Each draw is keyed by (seed, id,
/// resample attempt) and non-positive draws are resampled, so the result does
/// not depend on how many other agents exist or in what order they are drawn.
AgentParameters sample_agent_parameters(const PopulationModel& population, std::uint64_t seed, AgentId id);

/// A swarm at one tick. Value type: copying a World forks the simulation.
class World {
 public:
  /// Samples a fresh world from the config (ids 0..n-1, drawn in id order).
  explicit World(WorldConfig config);

  /// Rebuilds a world from an explicit state, e.g. a snapshot. Agents are
  /// kept sorted by id; ids must be unique.
  World(WorldConfig config, std::uint64_t tick, std::vector<AgentState> agents);

  const WorldConfig& config() const { return config_; }
  std::uint64_t tick() const { return tick_; }
  double sim_time() const { return static_cast<double>(tick_) * config_.dt; }
  std::span<const AgentState> agents() const { return agents_; }
  std::size_t size() const { return agents_.size(); }

  const AgentState& agent(AgentId id) const;

  /// Sensor reading agent `id` would take against the current snapshot,
  /// including seeded noise flips for the upcoming tick.
  bool sense(AgentId id) const;

  /// Advances one synchronous tick: all agents sense the current snapshot,
  /// choose inputs, then move together.
  void step();

  // Mutators used by interactive sessions between ticks.
  void assign_controller(AgentId id, const ControllerMode& mode);
  void set_all_controllers(double v, double omega);
  void set_vision(std::optional<double> distance, std::optional<double> halfangle);
  void set_noise(const NoiseSpec& noise);

  bool operator==(const World&) const = default;

 private:
  std::size_t index_of(AgentId id) const;
  std::vector<std::uint8_t> raw_readings(std::span<const Vec2> directions) const;
  bool apply_sensor_noise(bool reading, AgentId id) const;
  ActuationDraw actuation_draw(AgentId id) const;

  WorldConfig config_;
  std::uint64_t tick_ = 0;
  std::vector<AgentState> agents_;
};

World init_world(const WorldConfig& config);

/// Functional form of World::step.
World step_world(World world);

/// Raw sensor reading for one agent including noise; throws std::out_of_range
/// for an unknown id.
bool sense(const World& world, AgentId id);

}  // namespace swarmsim
