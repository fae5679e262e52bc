#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swarmsim/agent.hpp"
#include "swarmsim/geometry.hpp"

namespace swarmsim {

class World;
struct RunRecord;

inline constexpr double kDefaultCirclinessEpsilon = 1e-9;  // m
inline constexpr double kDefaultPivotEpsilon = 1e-6;       // rad/s

/// Macroscopic state of the swarm at one tick.
struct MetricTrace {
  std::uint64_t tick = 0;
  double circliness = std::numeric_limits<double>::infinity();
  double diffusion = std::numeric_limits<double>::infinity();
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  std::uint32_t n_components = 1;
  std::uint32_t collisions = 0;  // pairs closer than the body radius

  bool operator==(const MetricTrace&) const = default;
};

/// Phase-diagram regions, ordered from best to worst for tie-breaking.
enum class PhaseLabel : std::uint8_t { Mill = 0, Ellipsoidal = 1, SeparatedGroups = 2, CollidingClusters = 3 };

std::string_view to_string(PhaseLabel label);
std::optional<PhaseLabel> parse_phase_label(std::string_view name);

struct ClassifierConfig {
  double mill_threshold = 0.2;      // c < this is a mill
  double ellipse_threshold = 1.0;   // c < this (and >= mill) is ellipsoidal
  double window_fraction = 0.2;     // trailing fraction of ticks averaged
  std::size_t min_window_ticks = 100;
  std::optional<double> link_distance;  // m; defaults to the mean vision distance
  double circliness_epsilon = kDefaultCirclinessEpsilon;
  double pivot_epsilon = kDefaultPivotEpsilon;

  bool operator==(const ClassifierConfig&) const = default;

  /// Trailing window length for a record with `n_ticks` tick entries.
  std::size_t window_for(std::size_t n_ticks) const;
};

struct Classification {
  PhaseLabel label = PhaseLabel::Mill;
  double mean_circliness = 0.0;  // over the window
  double final_diffusion = 0.0;
  std::uint32_t final_components = 1;
  std::uint64_t window_collisions = 0;
  std::size_t window_ticks = 0;
};

Vec2 centroid(std::span<const Vec2> positions);

/// (max - min) / min of distances to the centroid; +inf when the minimum
/// falls below `epsilon`. Requires at least two points.
double circliness(std::span<const Vec2> positions, double epsilon = kDefaultCirclinessEpsilon);

/// Centre of the circle the agent traces under a constant input. With dt = 0
/// this is the continuous-time centre p + r(-sin h, cos h), r = (u1 s)/(u2 t).
/// With dt > 0 it is the centre of the circle through the explicit Euler
/// iterates, so stepping with the same dt keeps the distance exactly
/// constant. Undefined (nullopt) for |u2 t| < epsilon.
std::optional<Vec2> pivot(const AgentState& state, const ControlInput& input, double dt = 0.0,
                          double epsilon = kDefaultPivotEpsilon);

/// min over pairs of pivot separation divided by `gamma`. Agents without a
/// pivot contribute their position. Requires at least two agents.
double diffusion_metric(std::span<const Vec2> pivots, double gamma);

/// Diffusion metric of a world using each agent's last input and the
/// population-mean vision distance.
double diffusion_metric(const World& world, double epsilon = kDefaultPivotEpsilon);

/// Connected components under i~j iff |pi - pj| <= link_distance. Groups are
/// sorted internally and numbered by their smallest member index.
std::vector<std::vector<std::size_t>> cluster_components(std::span<const Vec2> positions,
                                                         double link_distance);

double mean_vision_distance(const World& world);

/// Every per-tick metric for the world's current snapshot.
MetricTrace measure(const World& world, const ClassifierConfig& config = {});

/// Assigns a phase region from the trailing window of a record's metric
/// traces. Throws std::invalid_argument when the record is too short.
Classification classify_run(const RunRecord& record, const ClassifierConfig& config = {});

/// Same rule applied to a bare trace sequence.
Classification classify_traces(std::span<const MetricTrace> traces, const ClassifierConfig& config = {});

}  // namespace swarmsim
