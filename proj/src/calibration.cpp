#include "swarmsim/calibration.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "swarmsim/errors.hpp"

namespace swarmsim {

using ojson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 5> kColumns{"robot_id", "u1", "u2", "speed_cm_s", "turn_deg_s"};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string level_key(double u1, double u2) { return format_number(u1) + "," + format_number(u2); }

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

std::vector<MeasurementTrial> parse_measurements(std::istream& in) {
  std::vector<MeasurementTrial> trials;
  std::vector<RowError> errors;
  std::array<std::size_t, kColumns.size()> column{};
  std::size_t n_fields = 0;
  bool have_header = false;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto fields = split(view);

    if (!have_header) {
      have_header = true;
      n_fields = fields.size();
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) {
          errors.push_back({line_no, "missing column '" + std::string(kColumns[c]) + "'"});
        } else {
          column[c] = static_cast<std::size_t>(it - fields.begin());
        }
      }
      if (!errors.empty()) break;
      continue;
    }

    if (fields.size() != n_fields) {
      errors.push_back({line_no, "expected " + std::to_string(n_fields) + " fields, got " +
                                     std::to_string(fields.size())});
      continue;
    }
    MeasurementTrial t;
    t.line = line_no;
    t.robot_id = std::string(fields[column[0]]);
    if (t.robot_id.empty()) {
      errors.push_back({line_no, "empty robot_id"});
      continue;
    }
    std::array<double, 4> values{};
    bool ok = true;
    for (std::size_t c = 1; c < kColumns.size(); ++c) {
      const auto v = parse_number(fields[column[c]]);
      if (!v) {
        errors.push_back({line_no, std::string(kColumns[c]) + " is not a finite number: '" +
                                       std::string(fields[column[c]]) + "'"});
        ok = false;
        break;
      }
      values[c - 1] = *v;
    }
    if (!ok) continue;
    t.u1 = values[0];
    t.u2 = values[1];
    t.speed_cm_s = values[2];
    t.turn_deg_s = values[3];
    if (std::abs(t.u1) > kRawSpeedLimit) {
      errors.push_back({line_no, "u1 = " + format_number(t.u1) + " outside [-100, 100]"});
      continue;
    }
    if (std::abs(t.u2) > kRawTurnLimit) {
      errors.push_back({line_no, "u2 = " + format_number(t.u2) + " outside [-2, 2]"});
      continue;
    }
    trials.push_back(std::move(t));
  }
  if (!errors.empty()) throw ParseError("malformed measurement CSV", std::move(errors));
  return trials;
}

std::vector<MeasurementTrial> parse_measurements(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return parse_measurements(in);
}

double actuation_factor(double individual_avg, double group_avg) {
  if (!(group_avg > 0.0)) throw std::invalid_argument("group average must be > 0");
  return individual_avg / group_avg;
}

Normal fit_population(std::span<const double> factors) {
  if (factors.size() < 2) throw std::invalid_argument("fit_population needs at least two values");
  const double mean = mean_of(factors);
  double ss = 0.0;
  for (double f : factors) ss += (f - mean) * (f - mean);
  return {mean, std::sqrt(ss / static_cast<double>(factors.size() - 1))};
}

namespace {

struct LevelKey {
  double u1;
  double u2;
  auto operator<=>(const LevelKey&) const = default;
};

struct Accumulator {
  double speed = 0.0;
  double turn = 0.0;
  std::size_t n = 0;
};

// Robot averages per level, then factors per level against the group mean.
// Returns per-robot per-level factors keyed by level.
std::map<std::string, std::map<LevelKey, double>> level_factors(
    const std::map<LevelKey, std::map<std::string, double>>& robot_avg, std::vector<std::string>& warnings,
    const char* what) {
  std::map<std::string, std::map<LevelKey, double>> out;
  for (const auto& [level, robots] : robot_avg) {
    std::vector<double> magnitudes;
    for (const auto& [id, v] : robots) magnitudes.push_back(std::abs(v));
    const double group = mean_of(magnitudes);
    if (!(group > 0.0)) {
      warnings.push_back(std::string("level ") + level_key(level.u1, level.u2) + ": group average " + what +
                         " is zero, level skipped");
      continue;
    }
    for (const auto& [id, v] : robots) out[id][level] = actuation_factor(std::abs(v), group);
  }
  return out;
}

}  // namespace

CalibrationProfile build_profile(std::span<const MeasurementTrial> trials,
                                 const std::optional<SensorStats>& sensor_stats) {
  CalibrationProfile profile;
  if (sensor_stats) profile.sensor = *sensor_stats;

  std::set<std::string> robots;
  std::map<LevelKey, std::map<std::string, Accumulator>> acc;
  for (const auto& t : trials) {
    robots.insert(t.robot_id);
    if (t.u1 == 0.0 && t.u2 == 0.0) continue;
    auto& a = acc[{t.u1, t.u2}][t.robot_id];
    a.speed += t.speed_cm_s;
    a.turn += t.turn_deg_s;
    ++a.n;
  }

  std::map<LevelKey, std::map<std::string, double>> speed_avg;
  std::map<LevelKey, std::map<std::string, double>> turn_avg;
  std::set<std::string> usable;
  for (const auto& [level, by_robot] : acc) {
    LevelResponse response{level.u1, level.u2, 0.0, 0.0};
    for (const auto& [id, a] : by_robot) {
      const double s = a.speed / static_cast<double>(a.n);
      const double w = a.turn / static_cast<double>(a.n);
      if (level.u1 != 0.0) speed_avg[level][id] = s;
      if (level.u2 != 0.0) turn_avg[level][id] = w;
      response.speed_cm_s += s;
      response.turn_deg_s += w;
      usable.insert(id);
    }
    response.speed_cm_s /= static_cast<double>(by_robot.size());
    response.turn_deg_s /= static_cast<double>(by_robot.size());
    profile.levels.push_back(response);
  }
  for (const auto& id : robots) {
    if (!usable.contains(id)) profile.warnings.push_back("robot " + id + ": no usable trials, excluded");
  }

  const auto speed_factors = level_factors(speed_avg, profile.warnings, "speed");
  const auto turn_factors = level_factors(turn_avg, profile.warnings, "turn rate");

  std::vector<double> all_speed;
  std::vector<double> all_turn;
  for (const auto& id : usable) {
    RobotProfile r;
    if (const auto it = speed_factors.find(id); it != speed_factors.end()) {
      std::vector<double> f;
      for (const auto& [level, v] : it->second) {
        r.speed_factor_by_level[level_key(level.u1, level.u2)] = v;
        f.push_back(v);
        all_speed.push_back(v);
      }
      r.speed_factor = mean_of(f);
    }
    if (const auto it = turn_factors.find(id); it != turn_factors.end()) {
      std::vector<double> f;
      for (const auto& [level, v] : it->second) {
        r.turn_factor_by_level[level_key(level.u1, level.u2)] = v;
        f.push_back(v);
        all_turn.push_back(v);
      }
      r.turn_factor = mean_of(f);
    }
    // Reference level: the largest |u1| this robot was driven at.
    double best = -1.0;
    for (const auto& [level, by_robot] : speed_avg) {
      const auto it = by_robot.find(id);
      if (it != by_robot.end() && std::abs(level.u1) > best) {
        best = std::abs(level.u1);
        r.mean_speed_at_ref_cm_s = it->second;
      }
    }
    profile.per_robot.emplace(id, std::move(r));
  }

  if (all_speed.size() >= 2) profile.speed_factor = fit_population(all_speed);
  if (all_turn.size() >= 2) profile.turn_factor = fit_population(all_turn);

  double max_speed = 0.0;
  double max_turn = 0.0;
  for (const auto& l : profile.levels) {
    if (l.u1 != 0.0) max_speed = std::max(max_speed, std::abs(l.speed_cm_s) / 100.0);
    if (l.u2 != 0.0) max_turn = std::max(max_turn, deg_to_rad(std::abs(l.turn_deg_s)));
  }
  if (max_speed > 0.0) profile.limits.max_speed = max_speed;
  if (max_turn > 0.0) profile.limits.max_turn_rate = max_turn;
  return profile;
}

PopulationModel population_of(const CalibrationProfile& profile) {
  return {profile.speed_factor, profile.turn_factor, profile.sensor.vision_distance, profile.sensor.vision_halfangle};
}

std::vector<AgentParameters> sample_profile(const CalibrationProfile& profile, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_profile needs n >= 1");
  const PopulationModel pop = population_of(profile);
  for (const Normal* d : {&pop.speed_factor, &pop.turn_factor, &pop.vision_distance, &pop.vision_halfangle}) {
    if (!(d->mean > 0.0)) throw ConfigError("profile distribution has a non-positive mean");
  }
  std::vector<AgentParameters> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_agent_parameters(pop, seed, static_cast<AgentId>(i)));
  return out;
}

namespace {

double interpolate(std::map<double, std::vector<double>> points, double u) {
  std::vector<std::pair<double, double>> curve{{0.0, 0.0}};
  for (const auto& [x, ys] : points) {
    if (x != 0.0) curve.emplace_back(x, mean_of(ys));
  }
  if (curve.size() == 1) {
    if (u == 0.0) return 0.0;
    throw std::invalid_argument("profile has no measured level for this command axis");
  }
  std::sort(curve.begin(), curve.end());
  std::size_t hi = 1;
  while (hi + 1 < curve.size() && curve[hi].first < u) ++hi;
  const auto [x0, y0] = curve[hi - 1];
  const auto [x1, y1] = curve[hi];
  return y0 + (y1 - y0) * (u - x0) / (x1 - x0);
}

}  // namespace

ControlInput raw_to_si(const CalibrationProfile& profile, double u1, double u2) {
  std::map<double, std::vector<double>> speed;
  std::map<double, std::vector<double>> turn;
  for (const auto& l : profile.levels) {
    if (l.u1 != 0.0) speed[l.u1].push_back(l.speed_cm_s);
    if (l.u2 != 0.0) turn[l.u2].push_back(l.turn_deg_s);
  }
  return {interpolate(speed, u1) / 100.0, deg_to_rad(interpolate(turn, u2))};
}

namespace {

ojson normal_json(const Normal& n) { return {{"mean", n.mean}, {"std", n.std}}; }

Normal normal_from(const ojson& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

ojson limit_json(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

double limit_from(const ojson& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

void reject_unknown(const ojson& j, std::initializer_list<std::string_view> keys, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown key '" + k + "' in " + where);
    }
  }
}

}  // namespace

void write_profile(std::ostream& out, const CalibrationProfile& p) {
  ojson robots = ojson::object();
  for (const auto& [id, r] : p.per_robot) {
    ojson by_speed = ojson::object();
    for (const auto& [k, v] : r.speed_factor_by_level) by_speed[k] = v;
    ojson by_turn = ojson::object();
    for (const auto& [k, v] : r.turn_factor_by_level) by_turn[k] = v;
    robots[id] = {{"speed_factor", r.speed_factor},
                  {"turn_factor", r.turn_factor},
                  {"mean_speed_at_ref_cm_s", r.mean_speed_at_ref_cm_s},
                  {"speed_factor_by_level", std::move(by_speed)},
                  {"turn_factor_by_level", std::move(by_turn)}};
  }
  ojson levels = ojson::array();
  for (const auto& l : p.levels) {
    levels.push_back({{"u1", l.u1}, {"u2", l.u2}, {"speed_cm_s", l.speed_cm_s}, {"turn_deg_s", l.turn_deg_s}});
  }
  ojson j = {{"schema", kCalibrationSchema},
             {"dt_s", p.dt},
             {"population", {{"speed_factor", normal_json(p.speed_factor)}, {"turn_factor", normal_json(p.turn_factor)}}},
             {"sensor",
              {{"vision_distance_m", normal_json(p.sensor.vision_distance)},
               {"vision_halfangle_rad", normal_json(p.sensor.vision_halfangle)}}},
             {"actuator_limits",
              {{"max_speed_m_s", limit_json(p.limits.max_speed)},
               {"max_turn_rate_rad_s", limit_json(p.limits.max_turn_rate)}}},
             {"levels", std::move(levels)},
             {"robots", std::move(robots)},
             {"warnings", p.warnings}};
  out << j.dump(2) << '\n';
}

CalibrationProfile read_profile(std::istream& in) {
  ojson j;
  try {
    j = ojson::parse(in);
  } catch (const ojson::parse_error& e) {
    throw ConfigError(std::string("calibration profile is not valid JSON: ") + e.what());
  }
  try {
    reject_unknown(j, {"schema", "dt_s", "population", "sensor", "actuator_limits", "levels", "robots", "warnings"},
                   "calibration profile");
    if (j.at("schema").get<std::string>() != kCalibrationSchema) {
      throw ConfigError("unsupported calibration schema '" + j.at("schema").get<std::string>() + "'");
    }
    CalibrationProfile p;
    p.dt = j.at("dt_s").get<double>();
    p.speed_factor = normal_from(j.at("population").at("speed_factor"));
    p.turn_factor = normal_from(j.at("population").at("turn_factor"));
    p.sensor.vision_distance = normal_from(j.at("sensor").at("vision_distance_m"));
    p.sensor.vision_halfangle = normal_from(j.at("sensor").at("vision_halfangle_rad"));
    if (j.contains("actuator_limits")) {
      p.limits.max_speed = limit_from(j["actuator_limits"].at("max_speed_m_s"));
      p.limits.max_turn_rate = limit_from(j["actuator_limits"].at("max_turn_rate_rad_s"));
    }
    if (j.contains("levels")) {
      for (const auto& l : j["levels"]) {
        p.levels.push_back({l.at("u1").get<double>(), l.at("u2").get<double>(), l.at("speed_cm_s").get<double>(),
                            l.at("turn_deg_s").get<double>()});
      }
    }
    if (j.contains("robots")) {
      for (const auto& [id, r] : j["robots"].items()) {
        RobotProfile rp;
        rp.speed_factor = r.at("speed_factor").get<double>();
        rp.turn_factor = r.at("turn_factor").get<double>();
        rp.mean_speed_at_ref_cm_s = r.value("mean_speed_at_ref_cm_s", 0.0);
        if (r.contains("speed_factor_by_level")) {
          for (const auto& [k, v] : r["speed_factor_by_level"].items()) rp.speed_factor_by_level[k] = v.get<double>();
        }
        if (r.contains("turn_factor_by_level")) {
          for (const auto& [k, v] : r["turn_factor_by_level"].items()) rp.turn_factor_by_level[k] = v.get<double>();
        }
        p.per_robot.emplace(id, std::move(rp));
      }
    }
    if (j.contains("warnings")) p.warnings = j["warnings"].get<std::vector<std::string>>();

    for (const Normal* n : {&p.speed_factor, &p.turn_factor, &p.sensor.vision_distance, &p.sensor.vision_halfangle}) {
      if (!(n->mean > 0.0) || !(n->std >= 0.0)) throw ConfigError("profile distributions need mean > 0 and std >= 0");
    }
    if (!(p.dt > 0.0)) throw ConfigError("profile dt_s must be > 0");
    return p;
  } catch (const ojson::exception& e) {
    throw ConfigError(std::string("malformed calibration profile: ") + e.what());
  }
}

CalibrationProfile read_profile(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open calibration profile " + file.string());
  return read_profile(in);
}

}  // namespace swarmsim
