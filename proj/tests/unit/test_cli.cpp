#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "swarmsim/calibration.hpp"
#include "swarmsim/config_io.hpp"

namespace fs = std::filesystem;
using namespace swarmsim;

namespace {

const fs::path kSource = SWARMSIM_SOURCE_DIR;
const fs::path kConfigs = kSource / "configs";

struct Scratch {
  fs::path dir = fs::temp_directory_path() / "swarmsim_cli_test";
  Scratch() {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& name) const { return dir / name; }
};

struct Result {
  int code;
  std::string out;
};

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Result run(const std::string& args, const Scratch& s) {
  const fs::path log = s / "stdout.txt";
  const std::string command = std::string("'") + SWARMSIM_CLI + "' " + args + " > " + quote(log) + " 2>&1";
  const int status = std::system(command.c_str());
  std::ifstream in(log);
  std::stringstream text;
  text << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, text.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string small_plan() {
  return R"({"schema": "swarmsim.sweep/1", "base_config": ")" + (kConfigs / "milling.json").string() +
         R"(", "axes": [{"param": "v", "values": [0.1, 0.25]}, {"param": "omega", "values_deg": [30, 45]}],
            "trials_per_cell": 2, "ticks_per_run": 300, "master_seed": 7})";
}

}  // namespace

TEST_CASE("run writes a record and prints the label") {
  Scratch s;
  const auto r = run("run --config " + quote(kConfigs / "milling.json") + " --out " + quote(s / "run.jsonl"), s);
  CAPTURE(r.out);
  CHECK(r.code == 0);
  CHECK(r.out.find("label: Mill") != std::string::npos);
  CHECK(fs::exists(s / "run.jsonl"));
  CHECK(fs::exists(s / "manifest.jsonl"));
  const std::string manifest = slurp(s / "manifest.jsonl");
  CHECK(manifest.find("run.jsonl") != std::string::npos);

  const auto c = run("classify --in " + quote(s / "run.jsonl"), s);
  CHECK(c.code == 0);
  CHECK(c.out.find("label: Mill") != std::string::npos);
}

TEST_CASE("zero ticks is a valid run") {
  Scratch s;
  const auto r = run("run --config " + quote(kConfigs / "milling.json") + " --ticks 0 --out " + quote(s / "r.jsonl"),
                     s);
  CAPTURE(r.out);
  CHECK(r.code == 0);
}

TEST_CASE("run determinism check and binary trace") {
  Scratch s;
  const auto r = run("run --config " + quote(kConfigs / "diffusing.json") + " --ticks 400 --deterministic-check --out " +
                         quote(s / "r.jsonl") + " --trace " + quote(s / "r.swtr"),
                     s);
  CAPTURE(r.out);
  CHECK(r.code == 0);
  CHECK(r.out.find("deterministic check ok") != std::string::npos);
  const auto c = run("classify --in " + quote(s / "r.swtr"), s);
  CHECK(c.code == 0);
}

TEST_CASE("usage and configuration errors exit with 2") {
  Scratch s;
  CHECK(run("run --config " + quote(s / "nope.json") + " --out " + quote(s / "r.jsonl"), s).code == 2);
  CHECK(run("run --out " + quote(s / "r.jsonl"), s).code == 2);
  CHECK(run("frobnicate", s).code == 2);
  write(s / "bad.json", R"({"n_agents": 3, "colour": "red"})");
  CHECK(run("run --config " + quote(s / "bad.json") + " --out " + quote(s / "r.jsonl"), s).code == 2);
  write(s / "plan.json", small_plan());
  CHECK(run("sweep --plan " + quote(s / "plan.json") + " --workers 0 --out " + quote(s / "p.csv"), s).code == 2);
  CHECK(run("sweep --plan " + quote(s / "plan.json") + " --format xml --out " + quote(s / "p.csv"), s).code == 2);
  write(s / "empty.csv", "");
  CHECK(run("calibrate --in " + quote(s / "empty.csv") + " --out " + quote(s / "p.json"), s).code == 2);
  write(s / "broken.csv", "robot_id,u1,u2,speed_cm_s,turn_deg_s\nr1,50,0,abc,0\n");
  const auto broken = run("calibrate --in " + quote(s / "broken.csv") + " --out " + quote(s / "p.json"), s);
  CHECK(broken.code == 2);
  CHECK(broken.out.find("line 2") != std::string::npos);
}

TEST_CASE("classify rejects records shorter than the window") {
  Scratch s;
  REQUIRE(run("run --config " + quote(kConfigs / "milling.json") + " --ticks 10 --out " + quote(s / "short.jsonl"), s)
              .code == 0);
  CHECK(run("classify --in " + quote(s / "short.jsonl"), s).code == 2);
}

TEST_CASE("classify reports diffusion for two agents spinning apart") {
  Scratch s;
  write(s / "pair.json", R"({
    "n_agents": 2, "ticks": 200,
    "controller": {"law": "diffusing", "v_m_s": 0.3, "omega_deg_s": 150},
    "agents": [{"id": 0, "x_m": -1.5, "y_m": 0.0, "heading_deg": 180},
               {"id": 1, "x_m": 1.5, "y_m": 0.0, "heading_deg": 0}]})");
  REQUIRE(run("run --config " + quote(s / "pair.json") + " --out " + quote(s / "pair.jsonl"), s).code == 0);
  const auto c = run("classify --in " + quote(s / "pair.jsonl"), s);
  CAPTURE(c.out);
  REQUIRE(c.code == 0);
  const auto at = c.out.find("final diffusion: ");
  REQUIRE(at != std::string::npos);
  CHECK(std::stod(c.out.substr(at + 17)) == doctest::Approx(3.0 / 1.1).epsilon(1e-3));
}

TEST_CASE("sweep output is identical across reruns and worker counts") {
  Scratch s;
  write(s / "plan.json", small_plan());
  const auto a = run("sweep --quiet --plan " + quote(s / "plan.json") + " --workers 1 --out " + quote(s / "a.csv"), s);
  CAPTURE(a.out);
  REQUIRE(a.code == 0);
  REQUIRE(run("sweep --quiet --plan " + quote(s / "plan.json") + " --workers 3 --out " + quote(s / "b.csv"), s).code ==
          0);
  REQUIRE(run("sweep --quiet --plan " + quote(s / "plan.json") + " --workers 1 --out " + quote(s / "c.csv"), s).code ==
          0);
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
  CHECK(slurp(s / "a.csv") == slurp(s / "c.csv"));
  CHECK(slurp(s / "a.csv").rfind("# grid ", 0) == 0);
  REQUIRE(run("sweep --quiet --plan " + quote(s / "plan.json") + " --format jsonl --out " + quote(s / "a.jsonl"), s)
              .code == 0);
  CHECK(fs::file_size(s / "a.jsonl") > 0);
}

TEST_CASE("calibrate writes a profile that reads back equal") {
  Scratch s;
  const auto r = run("calibrate --in " + quote(kSource / "data" / "table1_measurements.csv") + " --out " +
                         quote(s / "profile.json"),
                     s);
  CAPTURE(r.out);
  REQUIRE(r.code == 0);
  const CalibrationProfile p = read_profile(s / "profile.json");
  CHECK(p == build_profile(parse_measurements(kSource / "data" / "table1_measurements.csv")));
  CHECK(p.per_robot.size() == 3);

  // The profile drives a run config.
  write(s / "cal.json", R"({"n_agents": 4, "ticks": 50, "calibration_profile": "profile.json"})");
  CHECK(run("run --config " + quote(s / "cal.json") + " --out " + quote(s / "cal.jsonl"), s).code == 0);
}
