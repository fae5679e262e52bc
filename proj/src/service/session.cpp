#include "swarmsim/service/session.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "swarmsim/errors.hpp"

namespace swarmsim::service {

namespace {

constexpr std::uint64_t kMaxStep = 1'000'000;
constexpr double kMaxSpeed = 1000.0;

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Rejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const Json& field(const Json& cmd, const char* key) {
  if (!cmd.contains(key)) throw Rejected(std::string("missing field '") + key + "'");
  return cmd.at(key);
}

double number(const Json& cmd, const char* key) {
  const Json& v = field(cmd, key);
  if (!v.is_number()) throw Rejected(std::string("field '") + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw Rejected(std::string("field '") + key + "' must be finite");
  return d;
}

std::uint64_t count(const Json& cmd, const char* key) {
  const Json& v = field(cmd, key);
  const bool ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  if (!ok) throw Rejected(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

void set_noise_param(NoiseSpec& n, const std::string& name, double value) {
  if (name == "actuation_std") n.actuation_std = value;
  if (name == "false_negative_rate") n.false_negative_rate = value;
  if (name == "false_positive_rate") n.false_positive_rate = value;
}

}  // namespace

Json error_message(std::string_view reason, const Json& echo) {
  return {{"type", "error"}, {"version", kProtocolVersion}, {"reason", reason}, {"echo", echo}};
}

Session::Session(RunConfig config) : config_(std::move(config)), world_(instantiate(config_)) {}

Session::Reply Session::handle_text(std::string_view text) {
  Json command;
  try {
    command = Json::parse(text);
  } catch (const Json::parse_error& e) {
    return {false, error_message(std::string("malformed JSON: ") + e.what(), Json(std::string(text))), std::nullopt};
  }
  return handle(command);
}

Session::Reply Session::handle(const Json& command) {
  // Work on copies so a rejected command leaves no trace.
  const RunConfig saved_config = config_;
  const World saved_world = world_;
  const bool saved_running = running_;
  const double saved_speed = speed_;
  const double saved_rate = frame_rate_;
  const std::uint64_t saved_epoch = epoch_;
  std::optional<Json> frame;
  try {
    Json ack = apply(command, frame);
    return {true, std::move(ack), std::move(frame)};
  } catch (const std::exception& e) {
    config_ = saved_config;
    world_ = saved_world;
    running_ = saved_running;
    speed_ = saved_speed;
    frame_rate_ = saved_rate;
    epoch_ = saved_epoch;
    return {false, error_message(e.what(), command), std::nullopt};
  }
}

Json Session::apply(const Json& cmd, std::optional<Json>& frame_out) {
  if (!cmd.is_object()) throw Rejected("command must be a JSON object");
  if (!cmd.contains("version") || cmd["version"] != kProtocolVersion) {
    throw Rejected("unsupported or missing protocol version (expected 1)");
  }
  const Json& type_field = field(cmd, "type");
  if (!type_field.is_string()) throw Rejected("field 'type' must be a string");
  const std::string type = type_field.get<std::string>();
  Json ack = {{"type", "ack"}, {"version", kProtocolVersion}, {"command", type}, {"echo", cmd}};

  if (type == "set_param") {
    const std::string name = field(cmd, "name").get<std::string>();
    const double value = number(cmd, "value");
    if (name == "v" || name == "omega") {
      const auto& m = world_.config().default_controller;
      world_.set_all_controllers(name == "v" ? value : m.v, name == "omega" ? value : m.omega);
    } else if (name == "vision_distance") {
      world_.set_vision(value, std::nullopt);
    } else if (name == "vision_halfangle") {
      world_.set_vision(std::nullopt, value);
    } else if (name == "actuation_std" || name == "false_negative_rate" || name == "false_positive_rate") {
      NoiseSpec n = world_.config().noise;
      set_noise_param(n, name, value);
      world_.set_noise(n);
    } else if (name == "frame_rate") {
      if (!(value > 0.0 && value <= kMaxFrameRate)) throw Rejected("frame_rate must lie in (0, 60]");
      frame_rate_ = value;
    } else {
      throw Rejected("unknown parameter '" + name + "'");
    }
  } else if (type == "assign_controller") {
    const AgentId id = static_cast<AgentId>(count(cmd, "agent_id"));
    const Json& c = field(cmd, "controller");
    if (!c.is_object()) throw Rejected("field 'controller' must be an object");
    ControllerMode mode = world_.agent(id).controller;
    const auto tag = parse_controller_tag(field(c, "law").get<std::string>());
    if (!tag) throw Rejected("unknown controller law '" + c["law"].get<std::string>() + "'");
    mode.tag = *tag;
    if (c.contains("v_m_s")) mode.v = number(c, "v_m_s");
    if (c.contains("omega_rad_s")) mode.omega = number(c, "omega_rad_s");
    world_.assign_controller(id, mode);
  } else if (type == "pause") {
    running_ = false;
  } else if (type == "resume") {
    running_ = true;
  } else if (type == "step") {
    if (running_) throw Rejected("step is only allowed while paused");
    const std::uint64_t k = cmd.contains("k") ? count(cmd, "k") : 1;
    if (k < 1 || k > kMaxStep) throw Rejected("k must lie in [1, 1000000]");
    for (std::uint64_t i = 0; i < k; ++i) world_.step();
    frame_out = frame();
  } else if (type == "reset") {
    RunConfig next = config_;
    if (cmd.contains("seed")) next.world.seed = count(cmd, "seed");
    replace(std::move(next));
    frame_out = frame();
  } else if (type == "set_speed") {
    const double m = number(cmd, "multiplier");
    if (!(m > 0.0 && m <= kMaxSpeed)) throw Rejected("multiplier must lie in (0, 1000]");
    speed_ = m;
  } else if (type == "load_config") {
    replace(parse_run_config(field(cmd, "config")));
    frame_out = frame();
  } else if (type == "snapshot") {
    ack["snapshot"] = snapshot();
  } else if (type == "get_config") {
    ack["config"] = config_json();
  } else {
    throw Rejected("unknown command type '" + type + "'");
  }
  ack["tick"] = world_.tick();
  ack["epoch"] = epoch_;
  ack["running"] = running_;
  return ack;
}

void Session::replace(RunConfig config) {
  World next = instantiate(config);
  config_ = std::move(config);
  world_ = std::move(next);
  running_ = false;
  ++epoch_;
}

std::optional<std::string> Session::tick() {
  if (!running_) return std::nullopt;
  try {
    world_.step();
  } catch (const std::exception& e) {
    running_ = false;
    return std::string(e.what());
  }
  return std::nullopt;
}

Json Session::frame() const {
  Json agents = Json::array();
  for (const auto& a : world_.agents()) {
    agents.push_back({a.id, a.x, a.y, a.heading, a.last_sensor ? 1 : 0, std::string(to_string(a.controller.tag))});
  }
  const MetricTrace m = measure(world_, config_.classifier);
  return {{"type", "frame"},
          {"version", kProtocolVersion},
          {"epoch", epoch_},
          {"tick", world_.tick()},
          {"sim_time_s", world_.sim_time()},
          {"running", running_},
          {"agents", std::move(agents)},
          {"metrics",
           {{"circliness", finite_or_null(m.circliness)},
            {"diffusion", finite_or_null(m.diffusion)},
            {"n_components", m.n_components}}}};
}

Json Session::snapshot() const { return snapshot_json(world_, config_.classifier, config_.ticks); }

Json Session::config_json() const {
  RunConfig rc = config_;
  rc.world = world_.config();
  rc.state.reset();
  return to_json(rc);
}

}  // namespace swarmsim::service
