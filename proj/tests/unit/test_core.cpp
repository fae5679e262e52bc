#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "swarmsim/agent.hpp"
#include "swarmsim/arena.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/geometry.hpp"
#include "swarmsim/random.hpp"

using namespace swarmsim;
using doctest::Approx;

TEST_SUITE("geometry") {
  TEST_CASE("wrap_angle maps into [0, 2pi)") {
    CHECK(wrap_angle(0.0) == 0.0);
    CHECK(wrap_angle(kTwoPi) == 0.0);
    CHECK(wrap_angle(-1e-20) == 0.0);
    CHECK(wrap_angle(-std::numbers::pi / 2) == Approx(1.5 * std::numbers::pi));
    CHECK(wrap_angle(7.0) == Approx(7.0 - kTwoPi));
    for (double a = -50.0; a < 50.0; a += 0.37) {
      const double w = wrap_angle(a);
      CHECK(w >= 0.0);
      CHECK(w < kTwoPi);
      CHECK(std::sin(w) == Approx(std::sin(a)).epsilon(1e-9));
    }
  }

  TEST_CASE("wrap_signed maps into (-pi, pi]") {
    CHECK(wrap_signed(std::numbers::pi) == Approx(std::numbers::pi));
    CHECK(wrap_signed(-std::numbers::pi) == Approx(std::numbers::pi));
    CHECK(wrap_signed(1.5 * std::numbers::pi) == Approx(-0.5 * std::numbers::pi));
  }

  TEST_CASE("degree conversion") {
    CHECK(deg_to_rad(180.0) == Approx(std::numbers::pi));
    CHECK(rad_to_deg(deg_to_rad(24.5)) == Approx(24.5));
  }
}

TEST_SUITE("random") {
  TEST_CASE("draws are pure functions of their keys") {
    const KeyedRandom a(7);
    const KeyedRandom b(7);
    CHECK(a.bits(Stream::SpawnX, 3, 4) == b.bits(Stream::SpawnX, 3, 4));
    CHECK(a.bits(Stream::SpawnX, 3, 4) != a.bits(Stream::SpawnY, 3, 4));
    CHECK(a.bits(Stream::SpawnX, 3, 4) != a.bits(Stream::SpawnX, 4, 3));
    CHECK(a.bits(Stream::SpawnX, 3) != KeyedRandom(8).bits(Stream::SpawnX, 3));
  }

  TEST_CASE("uniform and normal moments") {
    const KeyedRandom r(123);
    const int n = 200000;
    double su = 0.0;
    double sn = 0.0;
    double sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform(Stream::Heading, static_cast<std::uint64_t>(i));
      REQUIRE(u >= 0.0);
      REQUIRE(u < 1.0);
      su += u;
      const double z = r.normal(Stream::SpeedFactor, static_cast<std::uint64_t>(i));
      sn += z;
      sn2 += z * z;
    }
    CHECK(su / n == Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == Approx(1.0).epsilon(0.02));
  }

  TEST_CASE("hash_combine has no collisions on a small grid") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 200; ++i) {
      for (std::uint64_t j = 0; j < 50; ++j) seen.insert(hash_combine(1, {i, j}));
    }
    CHECK(seen.size() == 200u * 50u);
  }
}

TEST_SUITE("controllers") {
  const ControllerMode base{ControllerTag::Milling, 0.25, 0.5};

  TEST_CASE("milling law") {
    ControllerMode m = base;
    CHECK(apply_controller(m, true) == ControlInput{0.25, 0.5});
    CHECK(apply_controller(m, false) == ControlInput{0.25, -0.5});
  }

  TEST_CASE("diffusing law") {
    ControllerMode m = base;
    m.tag = ControllerTag::Diffusing;
    CHECK(apply_controller(m, true) == ControlInput{-0.25, 0.0});
    CHECK(apply_controller(m, false) == ControlInput{0.0, 0.5});
  }

  TEST_CASE("self-centering law") {
    ControllerMode m = base;
    m.tag = ControllerTag::SelfCentering;
    CHECK(apply_controller(m, true) == ControlInput{0.25, 0.5});
    CHECK(apply_controller(m, false) == ControlInput{0.0, -1.5});
  }

  TEST_CASE("tag names round-trip") {
    for (auto t : {ControllerTag::Milling, ControllerTag::Diffusing, ControllerTag::SelfCentering}) {
      CHECK(parse_controller_tag(to_string(t)) == t);
    }
    CHECK_FALSE(parse_controller_tag("spin").has_value());
  }

  TEST_CASE("saturation clamps both channels symmetrically") {
    const ActuatorLimits lim{0.2, 1.0};
    CHECK(saturate({0.3, -2.0}, lim) == ControlInput{0.2, -1.0});
    CHECK(saturate({-0.3, 0.5}, lim) == ControlInput{-0.2, 0.5});
    CHECK(saturate({5.0, 5.0}, ActuatorLimits{}) == ControlInput{5.0, 5.0});
  }

  TEST_CASE("controller validation") {
    CHECK_THROWS_AS(validate(ControllerMode{ControllerTag::Milling, 0.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(validate(ControllerMode{ControllerTag::Milling, 1.0, -1.0}), ConfigError);
    CHECK_NOTHROW(validate(base));
  }
}

TEST_SUITE("step_agent") {
  TEST_CASE("pure forward motion") {
    const AgentState s{};
    const AgentState n = step_agent(s, {1.0, 0.0}, 1.0);
    CHECK(n.x == Approx(1.0));
    CHECK(n.y == Approx(0.0));
    CHECK(n.heading == 0.0);
  }

  TEST_CASE("heading convention is counterclockwise from +x") {
    AgentState s{};
    s.heading = std::numbers::pi / 2;
    const AgentState n = step_agent(s, {1.0, 0.0}, 1.0);
    CHECK(n.x == Approx(0.0).epsilon(1e-12));
    CHECK(n.y == Approx(1.0));
    CHECK(n.heading == Approx(std::numbers::pi / 2));
  }

  TEST_CASE("turn factor scales the turn rate") {
    AgentState s{};
    s.turn_factor = 2.0;
    const AgentState n = step_agent(s, {0.0, 0.5}, 0.022);
    CHECK(n.heading == Approx(0.022));
    CHECK(n.x == 0.0);
    CHECK(n.y == 0.0);
  }

  TEST_CASE("speed factor and actuation draw scale the displacement") {
    AgentState s{};
    s.speed_factor = 1.5;
    const AgentState n = step_agent(s, {2.0, 0.0}, 0.1, {0.5, 1.0});
    CHECK(n.x == Approx(2.0 * 1.5 * 0.5 * 0.1));
  }

  TEST_CASE("zero input is a fixed point and idiosyncrasies pass through") {
    AgentState s{};
    s.x = 0.3;
    s.y = -1.2;
    s.heading = 2.0;
    s.speed_factor = 0.97;
    s.turn_factor = 1.04;
    s.vision_distance = 0.9;
    const AgentState n = step_agent(s, {0.0, 0.0}, 0.022);
    CHECK(n.x == s.x);
    CHECK(n.y == s.y);
    CHECK(n.heading == s.heading);
    CHECK(n.speed_factor == s.speed_factor);
    CHECK(n.turn_factor == s.turn_factor);
    CHECK(n.vision_distance == s.vision_distance);
  }

  TEST_CASE("heading stays in [0, 2pi) under negative turning") {
    AgentState s{};
    for (int i = 0; i < 1000; ++i) {
      s = step_agent(s, {0.1, -3.0}, 0.022);
      REQUIRE(s.heading >= 0.0);
      REQUIRE(s.heading < kTwoPi);
    }
  }

  TEST_CASE("non-finite inputs are model-integrity errors") {
    const AgentState s{};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(step_agent(s, {nan, 0.0}, 0.022), ModelIntegrityError);
    CHECK_THROWS_AS(step_agent(s, {0.0, inf}, 0.022), ModelIntegrityError);
    AgentState bad{};
    bad.x = inf;
    CHECK_THROWS_AS(step_agent(bad, {0.0, 0.0}, 0.022), ModelIntegrityError);
    CHECK_THROWS_AS(step_agent(s, {0.0, 0.0}, 0.0), ModelIntegrityError);
    CHECK_THROWS_AS(step_agent(s, {1e308, 0.0}, 1e10), ModelIntegrityError);
  }

  TEST_CASE("agent validation") {
    AgentState s{};
    CHECK_NOTHROW(validate(s));
    s.speed_factor = 0.0;
    CHECK_THROWS_AS(validate(s), ConfigError);
    s = AgentState{};
    s.vision_halfangle = 4.0;
    CHECK_THROWS_AS(validate(s), ConfigError);
  }
}

TEST_SUITE("arena") {
  TEST_CASE("clamp keeps agents inside the box") {
    const ArenaSpec a = ArenaSpec::clamp(2.0, 4.0);
    CHECK(a.apply({3.0, -5.0}) == Vec2{1.0, -2.0});
    AgentState s{};
    s.x = 0.95;
    const AgentState n = step_agent(s, {1.0, 0.0}, 1.0, {}, a);
    CHECK(n.x == 1.0);
  }

  TEST_CASE("torus wraps and uses the minimum image") {
    const ArenaSpec a = ArenaSpec::torus(2.0, 2.0);
    const Vec2 p = a.apply({1.25, -1.5});
    CHECK(p.x == Approx(-0.75));
    CHECK(p.y == Approx(0.5));
    const Vec2 d = a.displacement({0.9, 0.0}, {-0.9, 0.0});
    CHECK(d.x == Approx(0.2));
    CHECK(d.y == Approx(0.0));
  }

  TEST_CASE("unbounded displacement is plain subtraction") {
    const ArenaSpec a{};
    CHECK(a.displacement({1.0, 2.0}, {4.0, -2.0}) == Vec2{3.0, -4.0});
  }

  TEST_CASE("bounded arenas need a positive extent") {
    CHECK_THROWS_AS(ArenaSpec::torus(0.0, 1.0).validate(), ConfigError);
    CHECK_NOTHROW(ArenaSpec::clamp(1.0, 1.0).validate());
  }
}
