#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmsim/agent.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

inline constexpr std::string_view kCalibrationSchema = "swarmsim.calibration/1";

inline constexpr double kRawSpeedLimit = 100.0;  // |u1| in raw command units
inline constexpr double kRawTurnLimit = 2.0;     // |u2| in raw command units

/// One measured trial. Commands are raw, measurements in cm/s and deg/s.
struct MeasurementTrial {
  std::string robot_id;
  double u1 = 0.0;
  double u2 = 0.0;
  double speed_cm_s = 0.0;
  double turn_deg_s = 0.0;
  std::size_t line = 0;  // source line, 0 when not from a file

  bool operator==(const MeasurementTrial&) const = default;
};

/// Parses the measurement CSV (header robot_id,u1,u2,speed_cm_s,turn_deg_s).
/// An empty input is a valid empty list. Throws ParseError listing every bad row.
std::vector<MeasurementTrial> parse_measurements(std::istream& in);
std::vector<MeasurementTrial> parse_measurements(const std::filesystem::path& file);

/// individual / group. Throws std::invalid_argument when group <= 0.
double actuation_factor(double individual_avg, double group_avg);

/// Sample mean and unbiased (n - 1) standard deviation. Needs >= 2 values.
Normal fit_population(std::span<const double> factors);

/// Group-average response at one commanded level.
struct LevelResponse {
  double u1 = 0.0;
  double u2 = 0.0;
  double speed_cm_s = 0.0;
  double turn_deg_s = 0.0;

  bool operator==(const LevelResponse&) const = default;
};

struct RobotProfile {
  double speed_factor = 1.0;  // θ1, averaged across speed levels
  double turn_factor = 1.0;   // θ2, averaged across turn levels
  double mean_speed_at_ref_cm_s = 0.0;  // robot average at the highest |u1| level
  std::map<std::string, double> speed_factor_by_level;  // key "u1,u2"
  std::map<std::string, double> turn_factor_by_level;

  bool operator==(const RobotProfile&) const = default;
};

struct SensorStats {
  Normal vision_distance{1.10, 0.0};           // m
  Normal vision_halfangle{deg_to_rad(24.5), 0.0};  // rad

  bool operator==(const SensorStats&) const = default;
};

struct CalibrationProfile {
  std::map<std::string, RobotProfile> per_robot;
  Normal speed_factor{1.0, 0.0};
  Normal turn_factor{1.0, 0.0};
  SensorStats sensor{};
  double dt = 0.022;  // s
  std::vector<LevelResponse> levels;  // sorted by (u1, u2)
  ActuatorLimits limits{};            // SI, from the highest measured level
  std::vector<std::string> warnings;

  bool operator==(const CalibrationProfile&) const = default;
};

/// Per-level group averages (mean of robot averages), per-robot factors per
/// level, factors averaged across levels, population fits over all per-level
/// factors. Robots without usable trials are excluded with a warning.
CalibrationProfile build_profile(std::span<const MeasurementTrial> trials,
                                 const std::optional<SensorStats>& sensor_stats = std::nullopt);

/// n draws of agent parameters from the profile's distributions.
std::vector<AgentParameters> sample_profile(const CalibrationProfile& profile, std::size_t n, std::uint64_t seed);

/// Population model a world config consumes.
PopulationModel population_of(const CalibrationProfile& profile);

/// Maps a raw command to SI (m/s, rad/s) by linear interpolation between the
/// measured group-average levels, anchored at (0, 0). Extrapolates linearly
/// from the last segment.
ControlInput raw_to_si(const CalibrationProfile& profile, double u1, double u2);

void write_profile(std::ostream& out, const CalibrationProfile& profile);
CalibrationProfile read_profile(std::istream& in);
CalibrationProfile read_profile(const std::filesystem::path& file);

}  // namespace swarmsim
