#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swarmsim/agent.hpp"
#include "swarmsim/metrics.hpp"

namespace swarmsim {

class World;

inline constexpr std::string_view kRunRecordSchema = "swarmsim.run/1";
inline constexpr std::uint32_t kBinaryTraceVersion = 1;

struct AgentSample {
  AgentId id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  bool sensor = false;
  ControllerTag controller = ControllerTag::Milling;

  bool operator==(const AgentSample&) const = default;
};

struct TickRecord {
  std::uint64_t tick = 0;
  std::vector<AgentSample> agents;  // empty when agent recording is off
  MetricTrace metrics{};

  bool operator==(const TickRecord&) const = default;
};

struct RunHeader {
  std::uint64_t seed = 0;
  double dt = 0.022;
  std::uint32_t n_agents = 0;
  double mean_vision_distance = 0.0;
  double body_radius = 0.0;

  bool operator==(const RunHeader&) const = default;
};

/// Time series of one simulation: initial state plus one entry per tick.
struct RunRecord {
  RunHeader header{};
  std::vector<TickRecord> ticks;

  bool operator==(const RunRecord&) const = default;
};

struct RecordOptions {
  bool record_agents = true;
  ClassifierConfig classifier{};
};

AgentSample sample_of(const AgentState& state);

/// Records the world's current state, then steps it `ticks` times recording
/// after each step. The world is left at its final state.
RunRecord simulate(World& world, std::uint64_t ticks, const RecordOptions& options = {});

// JSON-lines: a header line, one line per tick, and an optional summary line
// carrying the classification. Non-finite metrics are written as null and
// read back as +inf. See docs/formats.md.
void write_jsonl(std::ostream& out, const RunRecord& record,
                 const std::optional<Classification>& summary = std::nullopt);
RunRecord read_jsonl(std::istream& in);

// Fixed-width little-endian binary trace. See docs/formats.md.
void write_binary(std::ostream& out, const RunRecord& record);
RunRecord read_binary(std::istream& in);

}  // namespace swarmsim
