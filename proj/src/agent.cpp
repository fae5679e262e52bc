#include "swarmsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swarmsim/errors.hpp"

namespace swarmsim {

std::string_view to_string(ControllerTag tag) {
  switch (tag) {
    case ControllerTag::Milling:
      return "milling";
    case ControllerTag::Diffusing:
      return "diffusing";
    case ControllerTag::SelfCentering:
      return "self_centering";
  }
  return "unknown";
}

std::optional<ControllerTag> parse_controller_tag(std::string_view name) {
  if (name == "milling") return ControllerTag::Milling;
  if (name == "diffusing") return ControllerTag::Diffusing;
  if (name == "self_centering") return ControllerTag::SelfCentering;
  return std::nullopt;
}

ControlInput apply_controller(const ControllerMode& mode, bool detected) {
  switch (mode.tag) {
    case ControllerTag::Milling:
      // Left on detection, right otherwise.
      return detected ? ControlInput{mode.v, mode.omega} : ControlInput{mode.v, -mode.omega};
    case ControllerTag::Diffusing:
      // Back away from what is seen, otherwise spin in place.
      return detected ? ControlInput{-mode.v, 0.0} : ControlInput{0.0, mode.omega};
    case ControllerTag::SelfCentering:
      return detected ? ControlInput{mode.v, mode.omega} : ControlInput{0.0, -3.0 * mode.omega};
  }
  return {};
}

ControlInput saturate(const ControlInput& input, const ActuatorLimits& limits) {
  return {std::clamp(input.forward_speed, -limits.max_speed, limits.max_speed),
          std::clamp(input.turn_rate, -limits.max_turn_rate, limits.max_turn_rate)};
}

namespace {

bool finite(const AgentState& s) {
  return std::isfinite(s.x) && std::isfinite(s.y) && std::isfinite(s.heading) &&
         std::isfinite(s.speed_factor) && std::isfinite(s.turn_factor);
}

[[noreturn]] void integrity_failure(const AgentState& s, const char* what) {
  std::ostringstream msg;
  msg << "agent " << s.id << ": " << what;
  throw ModelIntegrityError(msg.str());
}

}  // namespace

AgentState step_agent(const AgentState& state, const ControlInput& input, double dt,
                      const ActuationDraw& draw, const ArenaSpec& arena) {
  return step_agent(state, input, dt, draw, arena, {std::cos(state.heading), std::sin(state.heading)});
}

AgentState step_agent(const AgentState& state, const ControlInput& input, double dt, const ActuationDraw& draw,
                      const ArenaSpec& arena, Vec2 direction) {
  if (!(dt > 0.0) || !std::isfinite(dt)) integrity_failure(state, "dt must be positive and finite");
  if (!finite(state)) integrity_failure(state, "non-finite state");
  if (!std::isfinite(input.forward_speed) || !std::isfinite(input.turn_rate)) {
    integrity_failure(state, "non-finite control input");
  }
  if (!std::isfinite(draw.speed) || !std::isfinite(draw.turn)) {
    integrity_failure(state, "non-finite actuation draw");
  }

  const double speed = input.forward_speed * state.speed_factor * draw.speed;
  const double turn = input.turn_rate * state.turn_factor * draw.turn;

  AgentState next = state;
  const Vec2 moved = arena.apply({state.x + speed * direction.x * dt, state.y + speed * direction.y * dt});
  next.x = moved.x;
  next.y = moved.y;
  next.heading = wrap_angle(state.heading + turn * dt);
  next.last_input = input;
  if (!finite(next)) integrity_failure(state, "step produced a non-finite state");
  return next;
}

void validate(const ControllerMode& mode) {
  if (!(mode.v > 0.0) || !std::isfinite(mode.v)) throw ConfigError("controller v must be > 0");
  if (!(mode.omega > 0.0) || !std::isfinite(mode.omega)) throw ConfigError("controller omega must be > 0");
}

void validate(const AgentState& s) {
  std::ostringstream msg;
  msg << "agent " << s.id << ": ";
  if (!finite(s)) throw ConfigError(msg.str() + "non-finite state");
  if (!(s.speed_factor > 0.0) || !(s.turn_factor > 0.0)) {
    throw ConfigError(msg.str() + "actuation factors must be > 0");
  }
  if (!(s.vision_distance >= 0.0) || !std::isfinite(s.vision_distance)) {
    throw ConfigError(msg.str() + "vision distance must be >= 0");
  }
  if (!(s.vision_halfangle > 0.0) || s.vision_halfangle > std::numbers::pi) {
    throw ConfigError(msg.str() + "vision half-angle must be in (0, pi]");
  }
  if (!(s.heading >= 0.0 && s.heading < kTwoPi)) throw ConfigError(msg.str() + "heading outside [0, 2pi)");
  validate(s.controller);
}

}  // namespace swarmsim
