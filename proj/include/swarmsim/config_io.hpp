#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swarmsim/metrics.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

inline constexpr std::string_view kConfigSchema = "swarmsim.config/1";
inline constexpr std::string_view kSnapshotSchema = "swarmsim.snapshot/1";
inline constexpr std::uint64_t kDefaultTicks = 5455;  // ~120 s at 22 ms

using Json = nlohmann::ordered_json;

/// Explicit world state carried by a snapshot.
struct WorldState {
  std::uint64_t tick = 0;
  std::vector<AgentState> agents;

  bool operator==(const WorldState&) const = default;
};

/// Everything a run file describes: the world, the classifier, a default
/// run length and, for snapshots, the state to resume from.
struct RunConfig {
  WorldConfig world{};
  ClassifierConfig classifier{};
  std::uint64_t ticks = kDefaultTicks;
  std::optional<WorldState> state;

  bool operator==(const RunConfig&) const = default;
};

/// Parses a config or snapshot document. Relative paths inside it (e.g.
/// "calibration_profile") resolve against base_dir. Throws ConfigError.
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig parse_run_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& file);

/// Canonical JSON for a config; parse_run_config(to_json(c)) == c.
Json to_json(const WorldConfig& config);
Json to_json(const ClassifierConfig& config);
Json to_json(const RunConfig& config);
Json to_json(const AgentState& state);

/// Config plus full state; enough to fork the simulation deterministically.
Json snapshot_json(const World& world, const ClassifierConfig& classifier = {}, std::uint64_t ticks = kDefaultTicks);

/// A fresh world from the config or, when a state is present, the resumed one.
World instantiate(const RunConfig& config);

}  // namespace swarmsim
