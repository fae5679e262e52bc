#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "swarmsim/config_io.hpp"
#include "swarmsim/metrics.hpp"

namespace swarmsim {

inline constexpr std::string_view kSweepPlanSchema = "swarmsim.sweep/1";
inline constexpr std::string_view kPhaseDiagramSchema = "swarmsim.phase/1";

/// Sweepable parameters. Values are SI: m/s, rad/s, count, m, rad.
enum class SweepParam { V, Omega, NAgents, VisionDistance, VisionHalfangle };

std::string_view to_string(SweepParam p);
std::optional<SweepParam> parse_sweep_param(std::string_view name);
/// Column name with unit suffix, e.g. "omega_rad_s".
std::string_view column_name(SweepParam p);

struct SweepAxis {
  SweepParam param = SweepParam::V;
  std::vector<double> values;

  bool operator==(const SweepAxis&) const = default;
};

struct SweepPlan {
  std::vector<SweepAxis> axes;
  std::size_t trials_per_cell = 1;
  RunConfig base{};
  std::uint64_t ticks_per_run = kDefaultTicks;
  std::uint64_t master_seed = 0;

  /// Throws ConfigError on an empty axis list or value list, a repeated
  /// axis, zero trials, or non-integral agent counts.
  void validate() const;
};

using Coordinates = std::vector<std::pair<SweepParam, double>>;

struct PlannedCell {
  std::size_t index = 0;
  Coordinates coordinates;
  std::vector<std::uint64_t> seeds;  // one per trial
};

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t cell, std::size_t trial);

/// Cartesian product, row-major in axis order (last axis varies fastest).
/// Throws ConfigError if two (cell, trial) pairs would share a seed.
std::vector<PlannedCell> plan_grid(const SweepPlan& plan);

/// The base config with the cell's coordinates and the trial seed applied.
WorldConfig cell_config(const WorldConfig& base, const Coordinates& coordinates, std::uint64_t seed);

struct TrialResult {
  std::uint64_t seed = 0;
  std::optional<PhaseLabel> label;  // empty when the trial failed
  double circliness = 0.0;          // trailing-window mean
  double diffusion = 0.0;           // at the final tick
  std::uint64_t collisions = 0;     // colliding pairs summed over the window
  std::string error;

  bool operator==(const TrialResult&) const = default;
};

struct PhaseCell {
  std::size_t index = 0;
  Coordinates coordinates;
  std::vector<TrialResult> trials;
  std::optional<PhaseLabel> aggregate;  // empty when every trial failed

  bool operator==(const PhaseCell&) const = default;
};

/// Most frequent label; ties go to the later (worse) label. Empty input gives
/// no label.
std::optional<PhaseLabel> aggregate_label(const std::vector<TrialResult>& trials);

struct SweepReport {
  std::vector<double> cell_wall_seconds;
  double wall_seconds = 0.0;
  std::uint64_t total_ticks = 0;
  std::size_t failed_trials = 0;
};

struct SweepOptions {
  std::size_t workers = 1;
  /// Called after each finished trial with (done, total); serialized.
  std::function<void(std::size_t, std::size_t)> progress;
  /// When set, each trial's binary trace is written here.
  std::optional<std::filesystem::path> trace_dir;
};

struct SweepOutcome {
  std::vector<PhaseCell> cells;
  SweepReport report;
};

/// Runs every (cell, trial). Cells are identical for any worker count; a
/// failing trial is recorded in its cell and the sweep continues.
SweepOutcome run_sweep(const SweepPlan& plan, const SweepOptions& options);

/// Classifies one trial; exceptions are recorded, not thrown.
TrialResult run_trial(const WorldConfig& config, std::uint64_t ticks, const ClassifierConfig& classifier,
                      const std::optional<std::filesystem::path>& trace_file = std::nullopt);

enum class PhaseFormat { Csv, Jsonl };

/// One row per cell. CSV columns: one per axis (unit-suffixed), then label,
/// circliness mean/min/max, diffusion mean/min/max, trials, failed. With
/// grid_header the CSV starts with a "# grid {...}" line describing the axes.
/// Throws ConfigError on cells with differing axis sets.
void emit_phase_diagram(std::ostream& out, const std::vector<PhaseCell>& cells, PhaseFormat format,
                        bool grid_header = true);

/// Reads the JSONL form back.
std::vector<PhaseCell> read_phase_jsonl(std::istream& in);

SweepPlan parse_sweep_plan(const Json& doc, const std::filesystem::path& base_dir = {});
SweepPlan load_sweep_plan(const std::filesystem::path& file);

}  // namespace swarmsim
