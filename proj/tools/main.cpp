// swarmsim command-line tool. Exit codes: 0 success, 1 runtime failure,
// 2 usage or configuration error.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "manifest.hpp"
#include "swarmsim/calibration.hpp"
#include "swarmsim/config_io.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/record.hpp"
#include "swarmsim/sweep.hpp"
#ifdef SWARMSIM_WITH_SERVICE
#include "swarmsim/service/server.hpp"
#endif

namespace fs = std::filesystem;
using namespace swarmsim;

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeFailure = 1;
constexpr int kUsageError = 2;

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("swarmsim-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::ofstream open_out(const fs::path& p, bool binary = false) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string fmt(double v) {
  if (!std::isfinite(v)) return "inf";
  std::ostringstream s;
  s << std::setprecision(4) << v;
  return s.str();
}

/// Reruns `produce` into a scratch file and compares hashes with `out`.
template <typename Produce>
int check_determinism(const fs::path& out, Produce&& produce) {
  TempDir tmp;
  const fs::path again = tmp.path() / out.filename();
  produce(again);
  const std::string a = cli::sha256_file(out);
  const std::string b = cli::sha256_file(again);
  if (a != b) {
    std::cerr << "deterministic check FAILED: " << a << " != " << b << '\n';
    return kRuntimeFailure;
  }
  std::cout << "deterministic check ok: sha256 " << a << '\n';
  return kOk;
}

struct RunArgs {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  fs::path out;
  std::optional<fs::path> trace;
  bool no_agents = false;
  bool deterministic_check = false;
  std::optional<fs::path> manifest;
};

int cmd_run(const RunArgs& a, const std::vector<std::string>& argv) {
  RunConfig rc = load_run_config(a.config);
  if (a.seed) rc.world.seed = *a.seed;
  const std::uint64_t ticks = a.ticks.value_or(rc.ticks);

  std::optional<Classification> summary;
  auto produce = [&](const fs::path& out, const std::optional<fs::path>& trace) {
    World world = instantiate(rc);
    const RunRecord record = simulate(world, ticks, {!a.no_agents, rc.classifier});
    summary.reset();
    if (record.ticks.size() >= rc.classifier.window_for(record.ticks.size())) {
      summary = classify_run(record, rc.classifier);
    }
    auto file = open_out(out);
    write_jsonl(file, record, summary);
    if (trace) {
      auto bin = open_out(*trace, true);
      write_binary(bin, record);
    }
  };
  produce(a.out, a.trace);

  std::cout << "run: seed " << rc.world.seed << ", " << rc.world.n_agents << " agents, " << ticks << " ticks ("
            << fmt(static_cast<double>(ticks) * rc.world.dt) << " s)\n";
  if (summary) {
    std::cout << "label: " << to_string(summary->label) << '\n'
              << "window mean circliness: " << fmt(summary->mean_circliness) << '\n'
              << "final diffusion: " << fmt(summary->final_diffusion) << '\n';
  } else {
    std::cout << "label: n/a (record shorter than the classifier window)\n";
  }
  std::cout << "wrote " << a.out.string() << '\n';

  std::vector<fs::path> outputs{a.out};
  if (a.trace) outputs.push_back(*a.trace);
  cli::append_manifest(a.manifest.value_or(cli::default_manifest_for(a.out)),
                       {"run", argv, a.config.string(), rc.world.seed, {a.config}, outputs});

  if (a.deterministic_check) return check_determinism(a.out, [&](const fs::path& p) { produce(p, std::nullopt); });
  return kOk;
}

struct SweepArgs {
  fs::path plan;
  std::size_t workers = 1;
  fs::path out;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> trace_dir;
  bool no_grid_header = false;
  bool quiet = false;
  bool deterministic_check = false;
  std::optional<fs::path> manifest;
};

void print_summary(const std::vector<PhaseCell>& cells, const SweepPlan& plan) {
  if (plan.axes.size() == 2) {
    const auto& rows = plan.axes[0];
    const auto& cols = plan.axes[1];
    std::cout << std::setw(12) << (std::string(column_name(rows.param)) + "\\" + std::string(column_name(cols.param)))
              << '\n';
    std::cout << std::setw(12) << "";
    for (double c : cols.values) std::cout << std::setw(8) << fmt(c);
    std::cout << '\n';
    for (std::size_t r = 0; r < rows.values.size(); ++r) {
      std::cout << std::setw(12) << fmt(rows.values[r]);
      for (std::size_t c = 0; c < cols.values.size(); ++c) {
        const auto& label = cells[r * cols.values.size() + c].aggregate;
        std::cout << std::setw(8) << (label ? std::string(to_string(*label)).substr(0, 6) : "error");
      }
      std::cout << '\n';
    }
    return;
  }
  for (const auto& cell : cells) {
    for (const auto& [p, v] : cell.coordinates) std::cout << column_name(p) << '=' << fmt(v) << ' ';
    std::cout << "-> " << (cell.aggregate ? to_string(*cell.aggregate) : "error") << '\n';
  }
}

int cmd_sweep(const SweepArgs& a, const std::vector<std::string>& argv) {
  if (a.workers < 1) throw std::invalid_argument("--workers must be >= 1");
  if (a.format != "csv" && a.format != "jsonl") throw std::invalid_argument("--format must be csv or jsonl");
  SweepPlan plan = load_sweep_plan(a.plan);
  if (a.seed) plan.master_seed = *a.seed;
  const PhaseFormat format = a.format == "csv" ? PhaseFormat::Csv : PhaseFormat::Jsonl;

  SweepOptions options;
  options.workers = a.workers;
  options.trace_dir = a.trace_dir;
  if (!a.quiet) {
    options.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 10 == 0) std::cerr << "\rtrials " << done << '/' << total << std::flush;
      if (done == total) std::cerr << '\n';
    };
  }
  const SweepOutcome outcome = run_sweep(plan, options);
  {
    auto file = open_out(a.out);
    emit_phase_diagram(file, outcome.cells, format, !a.no_grid_header);
  }
  const fs::path report_path = fs::path(a.out.string() + ".report.json");
  {
    const auto& r = outcome.report;
    Json report = {{"cells", outcome.cells.size()},
                   {"trials_per_cell", plan.trials_per_cell},
                   {"ticks_per_run", plan.ticks_per_run},
                   {"total_ticks", r.total_ticks},
                   {"failed_trials", r.failed_trials},
                   {"workers", a.workers},
                   {"wall_seconds", r.wall_seconds},
                   {"cell_wall_seconds", r.cell_wall_seconds}};
    auto file = open_out(report_path);
    file << report.dump(2) << '\n';
  }

  print_summary(outcome.cells, plan);
  std::cout << outcome.cells.size() << " cells, " << outcome.report.total_ticks << " ticks, "
            << outcome.report.failed_trials << " failed trials, " << fmt(outcome.report.wall_seconds) << " s wall\n"
            << "wrote " << a.out.string() << '\n';

  std::vector<fs::path> inputs{a.plan};
  cli::append_manifest(a.manifest.value_or(cli::default_manifest_for(a.out)),
                       {"sweep", argv, a.plan.string(), plan.master_seed, inputs, {a.out, report_path}});

  if (a.deterministic_check) {
    return check_determinism(a.out, [&](const fs::path& p) {
      SweepOptions again;
      again.workers = a.workers;
      const SweepOutcome o = run_sweep(plan, again);
      auto file = open_out(p);
      emit_phase_diagram(file, o.cells, format, !a.no_grid_header);
    });
  }
  if (outcome.report.failed_trials > 0) std::cerr << "warning: some trials failed; see the error column\n";
  return kOk;
}

struct CalibrateArgs {
  fs::path in;
  fs::path out;
  std::optional<double> vision_distance_m;
  std::optional<double> fov_deg;
  std::optional<fs::path> manifest;
};

int cmd_calibrate(const CalibrateArgs& a, const std::vector<std::string>& argv) {
  const auto trials = parse_measurements(a.in);
  if (trials.empty()) throw ConfigError("no measurements in " + a.in.string());
  std::optional<SensorStats> sensor;
  if (a.vision_distance_m || a.fov_deg) {
    sensor = SensorStats{};
    if (a.vision_distance_m) sensor->vision_distance.mean = *a.vision_distance_m;
    if (a.fov_deg) sensor->vision_halfangle.mean = deg_to_rad(*a.fov_deg / 2.0);
  }
  const CalibrationProfile profile = build_profile(trials, sensor);
  if (profile.per_robot.empty()) throw ConfigError("no robot has usable trials");
  {
    auto file = open_out(a.out);
    write_profile(file, profile);
  }
  std::cout << std::left << std::setw(12) << "robot" << std::setw(12) << "speed θ" << std::setw(12) << "turn θ"
            << "per level\n";
  for (const auto& [id, r] : profile.per_robot) {
    std::cout << std::setw(12) << id << std::setw(12) << fmt(r.speed_factor) << std::setw(12) << fmt(r.turn_factor);
    for (const auto& [level, f] : r.speed_factor_by_level) std::cout << " u=(" << level << "): " << fmt(f);
    std::cout << '\n';
  }
  std::cout << "population speed factor N(" << fmt(profile.speed_factor.mean) << ", " << fmt(profile.speed_factor.std)
            << "^2), turn factor N(" << fmt(profile.turn_factor.mean) << ", " << fmt(profile.turn_factor.std) << "^2)\n";
  for (const auto& w : profile.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << a.out.string() << '\n';
  cli::append_manifest(a.manifest.value_or(cli::default_manifest_for(a.out)),
                       {"calibrate", argv, std::nullopt, std::nullopt, {a.in}, {a.out}});
  return kOk;
}

int cmd_classify(const fs::path& in, const std::optional<fs::path>& config) {
  std::ifstream file(in, std::ios::binary);
  if (!file) throw ConfigError("cannot open record " + in.string());
  std::array<char, 4> magic{};
  file.read(magic.data(), magic.size());
  file.clear();
  file.seekg(0);
  const bool binary = file.gcount() == 4 && std::string_view(magic.data(), 4) == "SWTR";
  const RunRecord record = binary ? read_binary(file) : read_jsonl(file);
  const ClassifierConfig classifier = config ? load_run_config(*config).classifier : ClassifierConfig{};
  const Classification c = classify_run(record, classifier);
  std::cout << "label: " << to_string(c.label) << '\n'
            << "window mean circliness: " << fmt(c.mean_circliness) << '\n'
            << "final diffusion: " << fmt(c.final_diffusion) << '\n'
            << "final components: " << c.final_components << '\n'
            << "window collisions: " << c.window_collisions << '\n'
            << "window ticks: " << c.window_ticks << '\n';
  return kOk;
}

#ifdef SWARMSIM_WITH_SERVICE
int cmd_serve(const std::optional<fs::path>& config, const std::string& address, std::uint16_t port,
              const fs::path& data_dir) {
  const RunConfig rc = config ? load_run_config(*config) : RunConfig{};
  service::Server server(rc, {address, port, data_dir});
  server.start();
  std::cout << "listening on http://" << address << ':' << server.port() << " (WebSocket /session)" << std::endl;
  server.run_until_signal();
  return kOk;
}
#endif

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"swarmsim: reactive swarm simulator, sweeps, calibration and live sessions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SWARMSIM_VERSION);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "simulate one world and write its run record");
  run_cmd->add_option("--config", run.config, "config or snapshot JSON")->required();
  run_cmd->add_option("--seed", run.seed, "override the config seed");
  run_cmd->add_option("--ticks", run.ticks, "ticks to simulate (default from config)");
  run_cmd->add_option("--out", run.out, "run record output (JSON lines)")->required();
  run_cmd->add_option("--trace", run.trace, "also write a binary trace");
  run_cmd->add_flag("--no-agents", run.no_agents, "record metrics only");
  run_cmd->add_flag("--deterministic-check", run.deterministic_check, "rerun and compare output hashes");
  run_cmd->add_option("--manifest", run.manifest, "manifest file (default: manifest.jsonl beside --out)");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep and write the phase diagram");
  sweep_cmd->add_option("--plan", sweep.plan, "sweep plan JSON")->required();
  sweep_cmd->add_option("--workers", sweep.workers, "worker threads");
  sweep_cmd->add_option("--out", sweep.out, "phase diagram output")->required();
  sweep_cmd->add_option("--format", sweep.format, "csv or jsonl");
  sweep_cmd->add_option("--seed", sweep.seed, "override the plan master seed");
  sweep_cmd->add_option("--trace-dir", sweep.trace_dir, "write one binary trace per trial here");
  sweep_cmd->add_flag("--no-grid-header", sweep.no_grid_header, "omit the grid metadata line");
  sweep_cmd->add_flag("--quiet", sweep.quiet, "no progress output");
  sweep_cmd->add_flag("--deterministic-check", sweep.deterministic_check, "rerun and compare output hashes");
  sweep_cmd->add_option("--manifest", sweep.manifest, "manifest file (default: manifest.jsonl beside --out)");

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "build a calibration profile from measurements");
  cal_cmd->add_option("--in", cal.in, "measurement CSV")->required();
  cal_cmd->add_option("--out", cal.out, "profile JSON output")->required();
  cal_cmd->add_option("--vision-distance-m", cal.vision_distance_m, "measured detection distance");
  cal_cmd->add_option("--fov-deg", cal.fov_deg, "measured full cone opening");
  cal_cmd->add_option("--manifest", cal.manifest, "manifest file (default: manifest.jsonl beside --out)");

  fs::path classify_in;
  std::optional<fs::path> classify_config;
  auto* classify_cmd = app.add_subcommand("classify", "classify a recorded run");
  classify_cmd->add_option("--in", classify_in, "run record (JSON lines or binary trace)")->required();
  classify_cmd->add_option("--config", classify_config, "config whose classifier settings to use");

  std::optional<fs::path> serve_config;
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  fs::path data_dir = "data";
  auto* serve_cmd = app.add_subcommand("serve", "run the live session server");
  serve_cmd->add_option("--config", serve_config, "initial config or snapshot");
  serve_cmd->add_option("--port", port, "TCP port");
  serve_cmd->add_option("--address", address, "bind address");
  serve_cmd->add_option("--data-dir", data_dir, "directory served by /phase-diagram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run_cmd) return cmd_run(run, args);
    if (*sweep_cmd) return cmd_sweep(sweep, args);
    if (*cal_cmd) return cmd_calibrate(cal, args);
    if (*classify_cmd) return cmd_classify(classify_in, classify_config);
    if (*serve_cmd) {
#ifdef SWARMSIM_WITH_SERVICE
      return cmd_serve(serve_config, address, port, data_dir);
#else
      std::cerr << "error: built without the live service\n";
      return kUsageError;
#endif
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& row : e.rows()) std::cerr << "  line " << row.line << ": " << row.message << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsageError;
}
