#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "swarmsim/calibration.hpp"
#include "swarmsim/config_io.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/record.hpp"
#include "swarmsim/sweep.hpp"

namespace py = pybind11;
using namespace swarmsim;

namespace {

std::vector<Vec2> to_points(const std::vector<std::pair<double, double>>& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const auto& [x, y] : pts) out.push_back({x, y});
  return out;
}

py::dict classification_dict(const Classification& c) {
  py::dict d;
  d["label"] = std::string(to_string(c.label));
  d["mean_circliness"] = c.mean_circliness;
  d["final_diffusion"] = c.final_diffusion;
  d["final_components"] = c.final_components;
  d["window_collisions"] = c.window_collisions;
  d["window_ticks"] = c.window_ticks;
  return d;
}

py::dict metrics_dict(const MetricTrace& m) {
  py::dict d;
  d["tick"] = m.tick;
  d["circliness"] = m.circliness;
  d["diffusion"] = m.diffusion;
  d["min_pairwise_distance"] = m.min_pairwise_distance;
  d["n_components"] = m.n_components;
  d["collisions"] = m.collisions;
  return d;
}

/// Python-facing world: parsed from config JSON, keeps its classifier.
class PyWorld {
 public:
  explicit PyWorld(const std::string& config_json)
      : config_(parse_run_config_text(config_json)), world_(instantiate(config_)) {}

  void step(std::uint64_t n) {
    py::gil_scoped_release release;
    for (std::uint64_t i = 0; i < n; ++i) world_.step();
  }

  std::uint64_t tick() const { return world_.tick(); }
  double sim_time() const { return world_.sim_time(); }

  std::vector<py::tuple> agents() const {
    std::vector<py::tuple> out;
    for (const auto& a : world_.agents()) {
      out.push_back(py::make_tuple(a.id, a.x, a.y, a.heading, a.last_sensor, std::string(to_string(a.controller.tag))));
    }
    return out;
  }

  bool sense(AgentId id) const { return world_.sense(id); }

  void assign_controller(AgentId id, const std::string& law, std::optional<double> v, std::optional<double> omega) {
    const auto tag = parse_controller_tag(law);
    if (!tag) throw std::invalid_argument("unknown controller law '" + law + "'");
    ControllerMode m = world_.agent(id).controller;
    m.tag = *tag;
    if (v) m.v = *v;
    if (omega) m.omega = *omega;
    world_.assign_controller(id, m);
  }

  py::dict metrics() const { return metrics_dict(measure(world_, config_.classifier)); }

  std::string snapshot() const { return snapshot_json(world_, config_.classifier, config_.ticks).dump(); }

 private:
  RunConfig config_;
  World world_;
};

/// Simulates a config and returns the classification plus metric series.
py::dict run(const std::string& config_json, std::optional<std::uint64_t> ticks, std::optional<std::uint64_t> seed) {
  RunConfig rc = parse_run_config_text(config_json);
  if (seed) rc.world.seed = *seed;
  RunRecord record;
  {
    py::gil_scoped_release release;
    World world = instantiate(rc);
    record = simulate(world, ticks.value_or(rc.ticks), {false, rc.classifier});
  }
  std::vector<double> c;
  std::vector<double> d;
  for (const auto& t : record.ticks) {
    c.push_back(t.metrics.circliness);
    d.push_back(t.metrics.diffusion);
  }
  py::dict out;
  out["circliness"] = c;
  out["diffusion"] = d;
  if (record.ticks.size() >= rc.classifier.window_for(record.ticks.size())) {
    out["classification"] = classification_dict(classify_run(record, rc.classifier));
  } else {
    out["classification"] = py::none();
  }
  return out;
}

std::string run_record_jsonl(const std::string& config_json, std::optional<std::uint64_t> ticks) {
  const RunConfig rc = parse_run_config_text(config_json);
  World world = instantiate(rc);
  const RunRecord record = simulate(world, ticks.value_or(rc.ticks), {true, rc.classifier});
  std::optional<Classification> summary;
  if (record.ticks.size() >= rc.classifier.window_for(record.ticks.size())) summary = classify_run(record, rc.classifier);
  std::ostringstream out;
  write_jsonl(out, record, summary);
  return out.str();
}

py::dict classify_jsonl(const std::string& text) {
  std::istringstream in(text);
  return classification_dict(classify_run(read_jsonl(in)));
}

std::string build_profile_csv(const std::string& csv) {
  std::istringstream in(csv);
  const auto trials = parse_measurements(in);
  std::ostringstream out;
  write_profile(out, build_profile(trials));
  return out.str();
}

std::string sweep_csv(const std::string& plan_json, std::size_t workers) {
  const SweepPlan plan = parse_sweep_plan(Json::parse(plan_json));
  SweepOutcome outcome;
  {
    py::gil_scoped_release release;
    outcome = run_sweep(plan, {workers, {}, std::nullopt});
  }
  std::ostringstream out;
  emit_phase_diagram(out, outcome.cells, PhaseFormat::Csv);
  return out.str();
}

std::vector<std::tuple<std::size_t, std::vector<double>, std::vector<std::uint64_t>>> plan_cells(
    const std::string& plan_json) {
  std::vector<std::tuple<std::size_t, std::vector<double>, std::vector<std::uint64_t>>> out;
  for (const auto& cell : plan_grid(parse_sweep_plan(Json::parse(plan_json)))) {
    std::vector<double> coords;
    for (const auto& [p, v] : cell.coordinates) coords.push_back(v);
    out.emplace_back(cell.index, std::move(coords), cell.seeds);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_swarmsim, m) {
  m.doc() = "Reactive swarm simulator: worlds, metrics, calibration and sweeps.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ModelIntegrityError>(m, "ModelIntegrityError", PyExc_ArithmeticError);

  py::class_<PyWorld>(m, "World")
      .def(py::init<const std::string&>(), py::arg("config_json"))
      .def("step", &PyWorld::step, py::arg("n") = 1)
      .def_property_readonly("tick", &PyWorld::tick)
      .def_property_readonly("sim_time", &PyWorld::sim_time)
      .def("agents", &PyWorld::agents, "List of (id, x, y, heading, sensor, controller).")
      .def("sense", &PyWorld::sense, py::arg("agent_id"))
      .def("assign_controller", &PyWorld::assign_controller, py::arg("agent_id"), py::arg("law"),
           py::arg("v") = py::none(), py::arg("omega") = py::none())
      .def("metrics", &PyWorld::metrics)
      .def("snapshot_json", &PyWorld::snapshot);

  m.def("run", &run, py::arg("config_json"), py::arg("ticks") = py::none(), py::arg("seed") = py::none());
  m.def("run_record_jsonl", &run_record_jsonl, py::arg("config_json"), py::arg("ticks") = py::none());
  m.def("classify_jsonl", &classify_jsonl, py::arg("text"));

  m.def(
      "circliness", [](const std::vector<std::pair<double, double>>& pts) { return circliness(to_points(pts)); },
      py::arg("points"));
  m.def(
      "diffusion_metric",
      [](const std::vector<std::pair<double, double>>& pivots, double gamma) {
        return diffusion_metric(to_points(pivots), gamma);
      },
      py::arg("pivots"), py::arg("gamma"));
  m.def(
      "pivot",
      [](double x, double y, double heading, double forward_speed, double turn_rate, double speed_factor,
         double turn_factor, double dt) -> std::optional<std::pair<double, double>> {
        AgentState s;
        s.x = x;
        s.y = y;
        s.heading = heading;
        s.speed_factor = speed_factor;
        s.turn_factor = turn_factor;
        const auto p = pivot(s, {forward_speed, turn_rate}, dt);
        if (!p) return std::nullopt;
        return std::pair{p->x, p->y};
      },
      py::arg("x"), py::arg("y"), py::arg("heading"), py::arg("forward_speed"), py::arg("turn_rate"),
      py::arg("speed_factor") = 1.0, py::arg("turn_factor") = 1.0, py::arg("dt") = 0.0);
  m.def(
      "cluster_components",
      [](const std::vector<std::pair<double, double>>& pts, double link) {
        return cluster_components(to_points(pts), link);
      },
      py::arg("points"), py::arg("link_distance"));

  m.def("actuation_factor", &actuation_factor, py::arg("individual_avg"), py::arg("group_avg"));
  m.def(
      "fit_population",
      [](const std::vector<double>& f) {
        const Normal n = fit_population(f);
        return std::pair{n.mean, n.std};
      },
      py::arg("factors"));
  m.def("build_profile_json", &build_profile_csv, py::arg("csv_text"));

  m.def("plan_grid", &plan_cells, py::arg("plan_json"));
  m.def("sweep_csv", &sweep_csv, py::arg("plan_json"), py::arg("workers") = 1);
}
