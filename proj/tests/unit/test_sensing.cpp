#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "swarmsim/geometry.hpp"
#include "swarmsim/sensing.hpp"

using namespace swarmsim;

namespace {

AgentState at(double x, double y, double heading = 0.0, double range = 1.10, double half = deg_to_rad(24.5)) {
  AgentState s{};
  s.x = x;
  s.y = y;
  s.heading = heading;
  s.vision_distance = range;
  s.vision_halfangle = half;
  return s;
}

// Independent cone test on explicit bearings.
bool oracle_sees(const AgentState& o, Vec2 offset) {
  const double d = std::hypot(offset.x, offset.y);
  if (d > o.vision_distance) return false;
  if (d == 0.0) return true;
  const double bearing = std::atan2(offset.y, offset.x) - o.heading;
  return std::abs(std::remainder(bearing, 2.0 * std::numbers::pi)) <= o.vision_halfangle;
}

std::vector<AgentState> random_world(std::mt19937_64& rng, std::size_t n, double extent, bool varied_range) {
  std::uniform_real_distribution<double> pos(-0.5 * extent, 0.5 * extent);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  std::uniform_real_distribution<double> range(0.2, 2.0);
  std::uniform_real_distribution<double> half(0.05, std::numbers::pi);
  std::vector<AgentState> agents;
  for (std::size_t i = 0; i < n; ++i) {
    AgentState a = at(pos(rng), pos(rng), ang(rng));
    a.id = static_cast<AgentId>(i);
    if (varied_range) {
      a.vision_distance = range(rng);
      a.vision_halfangle = half(rng);
    }
    agents.push_back(a);
  }
  return agents;
}

}  // namespace

TEST_CASE("dead ahead in range is seen") {
  const std::vector<AgentState> agents{at(0, 0), at(0.5, 0)};
  CHECK(sense_brute_force(agents, 0));
  CHECK(sense_all_grid(agents)[0] == 1);
}

TEST_CASE("out of range is not seen") {
  const std::vector<AgentState> agents{at(0, 0), at(2.0, 0)};
  CHECK_FALSE(sense_brute_force(agents, 0));
  CHECK(sense_all_grid(agents)[0] == 0);
}

TEST_CASE("bearing just outside the half-angle is not seen") {
  const double b = deg_to_rad(30.0);
  const std::vector<AgentState> agents{at(0, 0), at(std::cos(b), std::sin(b))};
  CHECK_FALSE(sense_brute_force(agents, 0));
  CHECK_FALSE(oracle_sees(agents[0], agents[1].position()));
  const double inside = deg_to_rad(20.0);
  const std::vector<AgentState> near{at(0, 0), at(std::cos(inside), -std::sin(inside))};
  CHECK(sense_brute_force(near, 0));
}

TEST_CASE("range boundary is inclusive") {
  const std::vector<AgentState> agents{at(0, 0, 0.0, 1.0), at(1.0, 0)};
  CHECK(sense_brute_force(agents, 0));
}

TEST_CASE("an agent never sees itself") {
  const std::vector<AgentState> agents{at(0, 0)};
  CHECK_FALSE(sense_brute_force(agents, 0));
  CHECK(sense_all_grid(agents)[0] == 0);
}

TEST_CASE("cone test agrees with an atan2 bearing oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> ang(0.0, kTwoPi);
  std::uniform_real_distribution<double> half(0.01, std::numbers::pi);
  int checked = 0;
  for (int k = 0; k < 20000; ++k) {
    const AgentState o = at(0, 0, ang(rng), 1.1, half(rng));
    const Vec2 off{u(rng), u(rng)};
    // Skip draws within rounding distance of the cone boundary.
    const double d = std::hypot(off.x, off.y);
    const double bearing = std::abs(std::remainder(std::atan2(off.y, off.x) - o.heading, kTwoPi));
    if (std::abs(d - o.vision_distance) < 1e-9 || std::abs(bearing - o.vision_halfangle) < 1e-9) continue;
    REQUIRE(in_field_of_view(o, off) == oracle_sees(o, off));
    ++checked;
  }
  CHECK(checked > 19000);
}

TEST_CASE("full circle vision reduces to a range test") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  const AgentState o = at(0, 0, 1.0, 1.1, std::numbers::pi);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 off{u(rng), u(rng)};
    CHECK(in_field_of_view(o, off) == (off.norm() <= 1.1));
  }
}

TEST_CASE("torus sensing wraps across the seam") {
  SensingOptions opt;
  opt.arena = ArenaSpec::torus(4.0, 4.0);
  const std::vector<AgentState> agents{at(1.8, 0.0, 0.0), at(-1.8, 0.0)};
  CHECK(sense_brute_force(agents, 0, opt));
  CHECK_FALSE(sense_brute_force(agents, 0));
}

TEST_CASE("occlusion blocks a target behind another agent") {
  SensingOptions opt;
  opt.occlusion = true;
  // Narrow cone: the blocker's centre is outside it but its body covers the sight line.
  const std::vector<AgentState> agents{at(0, 0, 0.0, 1.1, deg_to_rad(1.0)), at(0.4, 0.08), at(0.8, 0.0)};
  CHECK(sense_brute_force(agents, 0));
  CHECK_FALSE(sense_brute_force(agents, 0, opt));
  CHECK(sense_all_grid(agents, opt) == sense_all_brute_force(agents, opt));
  // Moved clear of the line, the target is visible again.
  std::vector<AgentState> clear = agents;
  clear[1].y = 0.2;
  CHECK(sense_brute_force(clear, 0, opt));
}

TEST_CASE("grid sensing equals brute force on random worlds") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> count(1, 60);
  std::uniform_real_distribution<double> extent(0.5, 25.0);
  for (int trial = 0; trial < 600; ++trial) {
    SensingOptions opt;
    const double e = extent(rng);
    switch (trial % 4) {
      case 0:
        break;
      case 1:
        opt.arena = ArenaSpec::torus(e, 0.5 * e + 0.5);
        break;
      case 2:
        opt.arena = ArenaSpec::clamp(e, e);
        break;
      case 3:
        opt.occlusion = true;
        break;
    }
    auto agents = random_world(rng, count(rng), e, trial % 3 == 0);
    if (opt.arena.kind == ArenaSpec::Kind::Torus) {
      for (auto& a : agents) {
        const Vec2 p = opt.arena.apply(a.position());
        a.x = p.x;
        a.y = p.y;
      }
    }
    REQUIRE(sense_all_grid(agents, opt) == sense_all_brute_force(agents, opt));
  }
}

TEST_CASE("grid handles agents exactly one cell apart and coincident agents") {
  std::vector<AgentState> agents;
  for (int i = 0; i < 10; ++i) agents.push_back(at(1.1 * i, 0.0, i % 2 ? std::numbers::pi : 0.0));
  agents.push_back(at(0.0, 0.0, 0.0));
  CHECK(sense_all_grid(agents) == sense_all_brute_force(agents));
}
