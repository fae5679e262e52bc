#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "swarmsim/arena.hpp"
#include "swarmsim/geometry.hpp"

namespace swarmsim {

using AgentId = std::uint32_t;

enum class ControllerTag : std::uint8_t { Milling = 0, Diffusing = 1, SelfCentering = 2 };

std::string_view to_string(ControllerTag tag);
std::optional<ControllerTag> parse_controller_tag(std::string_view name);

/// A reactive controller law plus its magnitudes. Signs come from the law.
struct ControllerMode {
  ControllerTag tag = ControllerTag::Milling;
  double v = 0.25;      // m/s, > 0
  double omega = 0.785;  // rad/s, > 0

  bool operator==(const ControllerMode&) const = default;
};

/// Commanded forward speed (m/s) and turn rate (rad/s), both signed.
struct ControlInput {
  double forward_speed = 0.0;
  double turn_rate = 0.0;

  bool operator==(const ControlInput&) const = default;
};

struct ActuatorLimits {
  double max_speed = std::numeric_limits<double>::infinity();      // m/s
  double max_turn_rate = std::numeric_limits<double>::infinity();  // rad/s

  bool operator==(const ActuatorLimits&) const = default;
};

struct AgentState {
  AgentId id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians from +x, counterclockwise, in [0, 2π)
  double speed_factor = 1.0;
  double turn_factor = 1.0;
  double vision_distance = 1.10;          // m
  double vision_halfangle = deg_to_rad(24.5);  // rad, half of the 49° cone
  ControllerMode controller{};
  bool last_sensor = false;
  ControlInput last_input{};

  Vec2 position() const { return {x, y}; }
  bool operator==(const AgentState&) const = default;
};

/// Multiplicative per-step actuation factors; all ones when noise is off.
struct ActuationDraw {
  double speed = 1.0;
  double turn = 1.0;
};

/// Total map from (controller law, binary reading) to a command.
ControlInput apply_controller(const ControllerMode& mode, bool detected);

ControlInput saturate(const ControlInput& input, const ActuatorLimits& limits);

/// One explicit Euler step of the idiosyncratic unicycle, then the arena
/// rule. Throws ModelIntegrityError on non-finite state, input or result.
AgentState step_agent(const AgentState& state, const ControlInput& input, double dt,
                      const ActuationDraw& draw = {}, const ArenaSpec& arena = {});
/// Same step with the heading's (cos, sin) supplied by the caller.
AgentState step_agent(const AgentState& state, const ControlInput& input, double dt, const ActuationDraw& draw,
                      const ArenaSpec& arena, Vec2 direction);

/// Validates the per-agent invariants; throws ConfigError.
void validate(const AgentState& state);
void validate(const ControllerMode& mode);

}  // namespace swarmsim
