#include "swarmsim/sweep.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "swarmsim/errors.hpp"
#include "swarmsim/random.hpp"
#include "swarmsim/record.hpp"

namespace swarmsim {

namespace {

constexpr std::array<SweepParam, 5> kParams{SweepParam::V, SweepParam::Omega, SweepParam::NAgents,
                                            SweepParam::VisionDistance, SweepParam::VisionHalfangle};

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or_inf(const Json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

}  // namespace

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::V:
      return "v";
    case SweepParam::Omega:
      return "omega";
    case SweepParam::NAgents:
      return "n_agents";
    case SweepParam::VisionDistance:
      return "vision_distance";
    case SweepParam::VisionHalfangle:
      return "vision_halfangle";
  }
  return "unknown";
}

std::optional<SweepParam> parse_sweep_param(std::string_view name) {
  for (auto p : kParams) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view column_name(SweepParam p) {
  switch (p) {
    case SweepParam::V:
      return "v_m_s";
    case SweepParam::Omega:
      return "omega_rad_s";
    case SweepParam::NAgents:
      return "n_agents";
    case SweepParam::VisionDistance:
      return "vision_distance_m";
    case SweepParam::VisionHalfangle:
      return "vision_halfangle_rad";
  }
  return "unknown";
}

void SweepPlan::validate() const {
  if (axes.empty()) throw ConfigError("sweep plan needs at least one axis");
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const auto& a = axes[i];
    const std::string name(to_string(a.param));
    if (a.values.empty()) throw ConfigError("sweep axis '" + name + "' has no values");
    for (std::size_t j = 0; j < i; ++j) {
      if (axes[j].param == a.param) throw ConfigError("sweep axis '" + name + "' appears twice");
    }
    for (double v : a.values) {
      if (!std::isfinite(v) || !(v > 0.0)) throw ConfigError("sweep axis '" + name + "' values must be > 0");
      if (a.param == SweepParam::NAgents && v != std::floor(v)) {
        throw ConfigError("sweep axis 'n_agents' values must be integers");
      }
    }
  }
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
}

std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t cell, std::size_t trial) {
  return hash_combine(master_seed, {static_cast<std::uint64_t>(cell), static_cast<std::uint64_t>(trial)});
}

std::vector<PlannedCell> plan_grid(const SweepPlan& plan) {
  plan.validate();
  std::size_t n_cells = 1;
  for (const auto& a : plan.axes) n_cells *= a.values.size();

  std::vector<PlannedCell> cells(n_cells);
  std::unordered_set<std::uint64_t> used;
  for (std::size_t c = 0; c < n_cells; ++c) {
    PlannedCell& cell = cells[c];
    cell.index = c;
    std::size_t rest = c;
    cell.coordinates.resize(plan.axes.size());
    for (std::size_t k = plan.axes.size(); k-- > 0;) {
      const auto& axis = plan.axes[k];
      cell.coordinates[k] = {axis.param, axis.values[rest % axis.values.size()]};
      rest /= axis.values.size();
    }
    for (std::size_t t = 0; t < plan.trials_per_cell; ++t) {
      const std::uint64_t seed = trial_seed(plan.master_seed, c, t);
      if (!used.insert(seed).second) {
        throw ConfigError("derived seed collision at cell " + std::to_string(c) + ", trial " + std::to_string(t));
      }
      cell.seeds.push_back(seed);
    }
  }
  return cells;
}

WorldConfig cell_config(const WorldConfig& base, const Coordinates& coordinates, std::uint64_t seed) {
  WorldConfig c = base;
  c.seed = seed;
  for (const auto& [param, value] : coordinates) {
    switch (param) {
      case SweepParam::V:
        c.default_controller.v = value;
        for (auto& [id, m] : c.controller_assignments) m.v = value;
        break;
      case SweepParam::Omega:
        c.default_controller.omega = value;
        for (auto& [id, m] : c.controller_assignments) m.omega = value;
        break;
      case SweepParam::NAgents:
        c.n_agents = static_cast<std::size_t>(value);
        std::erase_if(c.controller_assignments, [&](const auto& kv) { return kv.first >= c.n_agents; });
        std::erase_if(c.agent_overrides, [&](const AgentOverride& o) { return o.id >= c.n_agents; });
        break;
      case SweepParam::VisionDistance:
        c.population.vision_distance.mean = value;
        for (auto& o : c.agent_overrides) o.vision_distance.reset();
        break;
      case SweepParam::VisionHalfangle:
        c.population.vision_halfangle.mean = value;
        for (auto& o : c.agent_overrides) o.vision_halfangle.reset();
        break;
    }
  }
  return c;
}

std::optional<PhaseLabel> aggregate_label(const std::vector<TrialResult>& trials) {
  std::array<std::size_t, 4> votes{};
  for (const auto& t : trials) {
    if (t.label) ++votes[static_cast<std::size_t>(*t.label)];
  }
  std::optional<PhaseLabel> best;
  std::size_t best_votes = 0;
  for (std::size_t l = 0; l < votes.size(); ++l) {
    // >= lets a later (worse) label win ties.
    if (votes[l] > 0 && votes[l] >= best_votes) {
      best = static_cast<PhaseLabel>(l);
      best_votes = votes[l];
    }
  }
  return best;
}

TrialResult run_trial(const WorldConfig& config, std::uint64_t ticks, const ClassifierConfig& classifier,
                      const std::optional<std::filesystem::path>& trace_file) {
  TrialResult r;
  r.seed = config.seed;
  try {
    World world(config);
    Classification c;
    const std::size_t n = static_cast<std::size_t>(ticks) + 1;
    const std::size_t window = classifier.window_for(n);
    if (!trace_file && n >= window) {
      // Only the trailing window feeds the label, so skip metrics before it.
      std::vector<MetricTrace> traces(n);
      if (window == n) traces[0] = measure(world, classifier);
      for (std::size_t k = 1; k < n; ++k) {
        world.step();
        if (k >= n - window) traces[k] = measure(world, classifier);
      }
      c = classify_traces(traces, classifier);
    } else {
      const RecordOptions opts{trace_file.has_value(), classifier};
      const RunRecord record = simulate(world, ticks, opts);
      c = classify_run(record, classifier);
      if (trace_file) {
        std::ofstream out(*trace_file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write trace " + trace_file->string());
        write_binary(out, record);
      }
    }
    r.label = c.label;
    r.circliness = c.mean_circliness;
    r.diffusion = c.final_diffusion;
    r.collisions = c.window_collisions;
  } catch (const std::exception& e) {
    r.label.reset();
    r.error = e.what();
  }
  return r;
}

SweepOutcome run_sweep(const SweepPlan& plan, const SweepOptions& options) {
  if (options.workers < 1) throw std::invalid_argument("run_sweep needs at least one worker");
  const std::vector<PlannedCell> planned = plan_grid(plan);
  const std::size_t trials = plan.trials_per_cell;
  const std::size_t total = planned.size() * trials;
  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  SweepOutcome outcome;
  outcome.cells.resize(planned.size());
  for (const auto& p : planned) {
    outcome.cells[p.index].index = p.index;
    outcome.cells[p.index].coordinates = p.coordinates;
    outcome.cells[p.index].trials.resize(trials);
  }
  std::vector<double> trial_seconds(total, 0.0);

  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  const auto started = std::chrono::steady_clock::now();

  auto worker = [&] {
    for (std::size_t job = next.fetch_add(1); job < total; job = next.fetch_add(1)) {
      const std::size_t c = job / trials;
      const std::size_t t = job % trials;
      const auto t0 = std::chrono::steady_clock::now();
      std::optional<std::filesystem::path> trace;
      if (options.trace_dir) {
        trace = *options.trace_dir / ("cell" + std::to_string(c) + "_trial" + std::to_string(t) + ".swtr");
      }
      const WorldConfig config = cell_config(plan.base.world, planned[c].coordinates, planned[c].seeds[t]);
      outcome.cells[c].trials[t] = run_trial(config, plan.ticks_per_run, plan.base.classifier, trace);
      trial_seconds[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      if (options.progress) {
        const std::lock_guard lock(progress_mutex);
        options.progress(++done, total);
      }
    }
  };

  const std::size_t n_threads = std::min(options.workers, std::max<std::size_t>(total, 1));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  auto& report = outcome.report;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report.cell_wall_seconds.assign(planned.size(), 0.0);
  for (auto& cell : outcome.cells) {
    cell.aggregate = aggregate_label(cell.trials);
    for (std::size_t t = 0; t < trials; ++t) {
      report.cell_wall_seconds[cell.index] += trial_seconds[cell.index * trials + t];
      if (cell.trials[t].label) {
        report.total_ticks += plan.ticks_per_run;
      } else {
        ++report.failed_trials;
      }
    }
  }
  return outcome;
}

namespace {

struct Stats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

Stats stats_of(const std::vector<double>& v) {
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {nan, nan, nan};
  }
  Stats s{0.0, v.front(), v.front()};
  for (double x : v) {
    s.mean += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean /= static_cast<double>(v.size());
  return s;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  return format_number(v);
}

std::vector<SweepParam> axis_set(const std::vector<PhaseCell>& cells) {
  std::vector<SweepParam> axes;
  for (const auto& [p, v] : cells.front().coordinates) axes.push_back(p);
  for (const auto& cell : cells) {
    if (cell.coordinates.size() != axes.size()) throw ConfigError("phase cells have heterogeneous axis sets");
    for (std::size_t k = 0; k < axes.size(); ++k) {
      if (cell.coordinates[k].first != axes[k]) throw ConfigError("phase cells have heterogeneous axis sets");
    }
  }
  return axes;
}

/// Distinct values per axis in first-seen order.
Json grid_json(const std::vector<PhaseCell>& cells, const std::vector<SweepParam>& axes) {
  Json list = Json::array();
  for (std::size_t k = 0; k < axes.size(); ++k) {
    std::vector<double> values;
    for (const auto& cell : cells) {
      const double v = cell.coordinates[k].second;
      if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
    }
    list.push_back({{"param", std::string(to_string(axes[k]))},
                    {"column", std::string(column_name(axes[k]))},
                    {"values", values}});
  }
  return {{"type", "grid"}, {"schema", kPhaseDiagramSchema}, {"axes", std::move(list)}, {"n_cells", cells.size()}};
}

}  // namespace

void emit_phase_diagram(std::ostream& out, const std::vector<PhaseCell>& cells, PhaseFormat format, bool grid_header) {
  if (cells.empty()) throw std::invalid_argument("no phase cells to emit");
  const auto axes = axis_set(cells);

  if (format == PhaseFormat::Jsonl) {
    if (grid_header) out << grid_json(cells, axes).dump() << '\n';
    for (const auto& cell : cells) {
      Json coords = Json::object();
      for (const auto& [p, v] : cell.coordinates) coords[std::string(to_string(p))] = v;
      Json trials = Json::array();
      for (const auto& t : cell.trials) {
        trials.push_back({{"seed", t.seed},
                          {"label", t.label ? Json(std::string(to_string(*t.label))) : Json(nullptr)},
                          {"circliness", finite_or_null(t.circliness)},
                          {"diffusion", finite_or_null(t.diffusion)},
                          {"collisions", t.collisions},
                          {"error", t.error}});
      }
      const Json line = {{"type", "cell"},
                         {"index", cell.index},
                         {"coordinates", std::move(coords)},
                         {"label", cell.aggregate ? Json(std::string(to_string(*cell.aggregate))) : Json(nullptr)},
                         {"trials", std::move(trials)}};
      out << line.dump() << '\n';
    }
    return;
  }

  if (grid_header) out << "# grid " << grid_json(cells, axes).dump() << '\n';
  for (auto p : axes) out << column_name(p) << ',';
  out << "label,circliness_mean,circliness_min,circliness_max,diffusion_mean,diffusion_min,diffusion_max,trials,"
         "failed\n";
  for (const auto& cell : cells) {
    std::vector<double> c;
    std::vector<double> d;
    std::size_t failed = 0;
    for (const auto& t : cell.trials) {
      if (!t.label) {
        ++failed;
        continue;
      }
      c.push_back(t.circliness);
      d.push_back(t.diffusion);
    }
    const Stats sc = stats_of(c);
    const Stats sd = stats_of(d);
    for (const auto& [p, v] : cell.coordinates) out << format_number(v) << ',';
    out << (cell.aggregate ? to_string(*cell.aggregate) : std::string_view("Error")) << ',' << csv_number(sc.mean)
        << ',' << csv_number(sc.min) << ',' << csv_number(sc.max) << ',' << csv_number(sd.mean) << ','
        << csv_number(sd.min) << ',' << csv_number(sd.max) << ',' << cell.trials.size() << ',' << failed << '\n';
  }
}

std::vector<PhaseCell> read_phase_jsonl(std::istream& in) {
  std::vector<PhaseCell> cells;
  std::vector<RowError> errors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      const std::string type = j.at("type").get<std::string>();
      if (type == "grid") {
        if (j.at("schema").get<std::string>() != kPhaseDiagramSchema) throw std::runtime_error("unsupported schema");
        continue;
      }
      if (type != "cell") throw std::runtime_error("unknown line type '" + type + "'");
      PhaseCell cell;
      cell.index = j.at("index").get<std::size_t>();
      for (const auto& [name, value] : j.at("coordinates").items()) {
        const auto p = parse_sweep_param(name);
        if (!p) throw std::runtime_error("unknown axis '" + name + "'");
        cell.coordinates.emplace_back(*p, value.get<double>());
      }
      if (!j.at("label").is_null()) cell.aggregate = parse_phase_label(j["label"].get<std::string>());
      for (const auto& t : j.at("trials")) {
        TrialResult r;
        r.seed = t.at("seed").get<std::uint64_t>();
        if (!t.at("label").is_null()) {
          r.label = parse_phase_label(t["label"].get<std::string>());
          if (!r.label) throw std::runtime_error("unknown label");
        }
        r.circliness = number_or_inf(t.at("circliness"));
        r.diffusion = number_or_inf(t.at("diffusion"));
        r.collisions = t.at("collisions").get<std::uint64_t>();
        r.error = t.at("error").get<std::string>();
        cell.trials.push_back(std::move(r));
      }
      cells.push_back(std::move(cell));
    } catch (const std::exception& e) {
      errors.push_back({line_no, e.what()});
    }
  }
  if (!errors.empty()) throw ParseError("malformed phase diagram", std::move(errors));
  return cells;
}

SweepPlan parse_sweep_plan(const Json& doc, const std::filesystem::path& base_dir) {
  try {
    if (!doc.is_object()) throw ConfigError("sweep plan must be an object");
    for (const auto& [k, v] : doc.items()) {
      static const std::array<std::string_view, 6> known{"schema", "axes", "trials_per_cell", "ticks_per_run",
                                                         "master_seed", "base_config"};
      if (std::find(known.begin(), known.end(), k) == known.end()) {
        throw ConfigError("unknown key '" + k + "' in sweep plan");
      }
    }
    if (doc.value("schema", std::string(kSweepPlanSchema)) != kSweepPlanSchema) {
      throw ConfigError("unsupported sweep plan schema");
    }
    SweepPlan plan;
    for (const auto& a : doc.at("axes")) {
      const std::string name = a.at("param").get<std::string>();
      const auto p = parse_sweep_param(name);
      if (!p) throw ConfigError("unknown sweep parameter '" + name + "'");
      SweepAxis axis{*p, {}};
      const bool deg = a.contains("values_deg");
      if (deg == a.contains("values")) throw ConfigError("axis '" + name + "' needs exactly one of values, values_deg");
      if (deg && *p != SweepParam::Omega && *p != SweepParam::VisionHalfangle) {
        throw ConfigError("values_deg only applies to angular axes");
      }
      for (const auto& v : a.at(deg ? "values_deg" : "values")) {
        axis.values.push_back(deg ? deg_to_rad(v.get<double>()) : v.get<double>());
      }
      for (const auto& [k, v] : a.items()) {
        if (k != "param" && k != "values" && k != "values_deg") throw ConfigError("unknown key '" + k + "' in axis");
      }
      plan.axes.push_back(std::move(axis));
    }
    plan.trials_per_cell = doc.value("trials_per_cell", std::size_t{1});
    plan.ticks_per_run = doc.value("ticks_per_run", kDefaultTicks);
    plan.master_seed = doc.value("master_seed", std::uint64_t{0});
    if (doc.contains("base_config")) {
      const Json& base = doc["base_config"];
      if (base.is_string()) {
        std::filesystem::path p = base.get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        plan.base = load_run_config(p);
      } else {
        plan.base = parse_run_config(base, base_dir);
      }
      if (plan.base.state) throw ConfigError("a sweep base config cannot be a snapshot");
    }
    plan.validate();
    return plan;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed sweep plan: ") + e.what());
  }
}

SweepPlan load_sweep_plan(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open sweep plan " + file.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("sweep plan is not valid JSON: ") + e.what());
  }
  return parse_sweep_plan(doc, file.parent_path());
}

}  // namespace swarmsim
