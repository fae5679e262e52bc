#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include "swarmsim/metrics.hpp"
#include "swarmsim/record.hpp"
#include "swarmsim/world.hpp"

using namespace swarmsim;
using doctest::Approx;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// All-pairs union-find, grouped and ordered by smallest member.
std::vector<std::vector<std::size_t>> union_find_components(const std::vector<Vec2>& pts, double link) {
  std::vector<std::size_t> parent(pts.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const double dx = pts[i].x - pts[j].x;
      const double dy = pts[i].y - pts[j].y;
      if (std::sqrt(dx * dx + dy * dy) <= link) parent[find(i)] = find(j);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < pts.size(); ++i) by_root[find(i)].push_back(i);
  std::vector<std::vector<std::size_t>> groups;
  for (auto& [root, members] : by_root) groups.push_back(members);
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return groups;
}

MetricTrace trace(double c, std::uint32_t components = 1, std::uint32_t collisions = 0) {
  MetricTrace t;
  t.circliness = c;
  t.n_components = components;
  t.collisions = collisions;
  t.diffusion = 0.5;
  return t;
}

}  // namespace

TEST_SUITE("centroid") {
  TEST_CASE("examples") {
    const std::vector<Vec2> two{{0, 0}, {2, 0}};
    CHECK(centroid(two) == Vec2{1, 0});
    const std::vector<Vec2> one{{1, 1}};
    CHECK(centroid(one) == Vec2{1, 1});
    const std::vector<Vec2> four{{1, 0}, {-1, 0}, {0, 2}, {0, -2}};
    CHECK(centroid(four) == Vec2{0, 0});
  }

  TEST_CASE("empty input is an argument error") {
    CHECK_THROWS_AS(centroid(std::vector<Vec2>{}), std::invalid_argument);
  }
}

TEST_SUITE("circliness") {
  TEST_CASE("examples") {
    const std::vector<Vec2> four{{1, 0}, {-1, 0}, {0, 2}, {0, -2}};
    CHECK(circliness(four) == Approx(1.0));
    const std::vector<Vec2> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    CHECK(circliness(square) == 0.0);
    const std::vector<Vec2> centred{{0, 0}, {1, 0}, {-1, 0}};
    CHECK(circliness(centred) == kInf);
  }

  TEST_CASE("needs two points") {
    CHECK_THROWS_AS(circliness(std::vector<Vec2>{{0, 0}}), std::invalid_argument);
  }

  TEST_CASE("regular polygons are perfect circles") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> radius(0.01, 100.0);
    std::uniform_real_distribution<double> angle(0.0, kTwoPi);
    std::uniform_real_distribution<double> shift(-1000.0, 1000.0);
    for (int k = 0; k < 500; ++k) {
      const int n = 2 + k % 11;
      const double r = radius(rng);
      const double rot = angle(rng);
      const Vec2 c{shift(rng), shift(rng)};
      std::vector<Vec2> pts;
      for (int i = 0; i < n; ++i) {
        const double a = rot + kTwoPi * i / n;
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
      }
      REQUIRE(circliness(pts) < 1e-9);
    }
  }

  TEST_CASE("translation, rotation and scale invariance") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
      std::vector<Vec2> pts(7);
      for (auto& p : pts) p = {g(rng), g(rng)};
      const double base = circliness(pts);
      const double rot = 0.3 * k;
      std::vector<Vec2> moved;
      for (const auto& p : pts) {
        moved.push_back({3.0 * (p.x * std::cos(rot) - p.y * std::sin(rot)) + 5.0,
                         3.0 * (p.x * std::sin(rot) + p.y * std::cos(rot)) - 2.0});
      }
      CHECK(circliness(moved) == Approx(base).epsilon(1e-9));
    }
  }

  TEST_CASE("epsilon is configurable") {
    const std::vector<Vec2> pts{{0, 0}, {1e-6, 0}, {-1e-6, 0}, {0, 1e-3}};
    CHECK(std::isfinite(circliness(pts, 1e-12)));
    CHECK(circliness(pts, 1e-3) == kInf);
  }
}

TEST_SUITE("pivot") {
  TEST_CASE("spin in place pivots on the agent") {
    AgentState s{};
    s.x = 0.4;
    s.y = -0.2;
    s.heading = 1.3;
    const auto o = pivot(s, {0.0, 0.7});
    REQUIRE(o);
    CHECK(*o == Vec2{0.4, -0.2});
  }

  TEST_CASE("continuous centre for unit speed and turn rate") {
    const auto o = pivot(AgentState{}, {1.0, 1.0});
    REQUIRE(o);
    CHECK(o->x == Approx(0.0));
    CHECK(o->y == Approx(1.0));
    const auto right = pivot(AgentState{}, {1.0, -1.0});
    CHECK(right->y == Approx(-1.0));
  }

  TEST_CASE("straight line has no pivot") {
    CHECK_FALSE(pivot(AgentState{}, {1.0, 0.0}).has_value());
    CHECK_FALSE(pivot(AgentState{}, {1.0, 1e-7}).has_value());
    CHECK(pivot(AgentState{}, {1.0, 1e-7}, 0.0, 1e-8).has_value());
  }

  TEST_CASE("factors scale the radius") {
    AgentState s{};
    s.speed_factor = 1.2;
    s.turn_factor = 0.8;
    const auto o = pivot(s, {0.25, 0.5});
    CHECK(o->y == Approx(0.25 * 1.2 / (0.5 * 0.8)));
  }

  TEST_CASE("discrete pivot is a fixed point of the Euler iteration") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> v(0.05, 0.5);
    std::uniform_real_distribution<double> w(0.1, 3.0);
    std::uniform_real_distribution<double> h(0.0, kTwoPi);
    std::uniform_real_distribution<double> f(0.9, 1.1);
    for (int k = 0; k < 50; ++k) {
      AgentState s{};
      s.heading = h(rng);
      s.speed_factor = f(rng);
      s.turn_factor = f(rng);
      const ControlInput u{v(rng), (k % 2 ? 1.0 : -1.0) * w(rng)};
      const auto o = pivot(s, u, 0.022);
      REQUIRE(o);
      const double r0 = distance(s.position(), *o);
      const double scale = std::abs(u.forward_speed / u.turn_rate);
      for (int t = 0; t < 1000; ++t) {
        s = step_agent(s, u, 0.022);
        REQUIRE(std::abs(distance(s.position(), *o) - r0) < 1e-9 * scale);
      }
      // Same circle seen from any later point on it.
      const auto later = pivot(s, u, 0.022);
      CHECK(distance(*later, *o) < 1e-9 * scale);
    }
  }

  TEST_CASE("continuous and discrete pivots converge as dt shrinks") {
    AgentState s{};
    s.heading = 0.4;
    const ControlInput u{0.25, 0.785};
    const auto c = pivot(s, u, 0.0);
    double prev = kInf;
    for (double dt : {0.1, 0.022, 0.001, 1e-5}) {
      const double gap = distance(*pivot(s, u, dt), *c);
      CHECK(gap < prev);
      prev = gap;
    }
    CHECK(prev < 1e-5);
  }
}

TEST_SUITE("diffusion metric") {
  TEST_CASE("examples") {
    const std::vector<Vec2> far{{0, 0}, {2.2, 0}};
    CHECK(diffusion_metric(far, 1.1) == Approx(2.0));
    const std::vector<Vec2> edge{{0, 0}, {1.1, 0}};
    CHECK(diffusion_metric(edge, 1.1) == Approx(1.0));
    const std::vector<Vec2> same{{0.3, 0.3}, {0.3, 0.3}, {5, 5}};
    CHECK(diffusion_metric(same, 1.1) == 0.0);
  }

  TEST_CASE("argument errors") {
    CHECK_THROWS_AS(diffusion_metric(std::vector<Vec2>{{0, 0}}, 1.1), std::invalid_argument);
    CHECK_THROWS_AS(diffusion_metric(std::vector<Vec2>{{0, 0}, {1, 1}}, 0.0), std::invalid_argument);
  }

  TEST_CASE("symmetric under relabeling") {
    std::vector<Vec2> pts{{0, 0}, {3, 1}, {-2, 4}, {1, -1}};
    const double d = diffusion_metric(pts, 1.1);
    std::reverse(pts.begin(), pts.end());
    CHECK(diffusion_metric(pts, 1.1) == d);
  }

  TEST_CASE("world form uses last inputs and the population vision distance") {
    WorldConfig c;
    c.n_agents = 2;
    c.default_controller = {ControllerTag::Diffusing, 0.3, 1.0};
    AgentOverride a;
    a.id = 0;
    a.x = 0.0;
    a.y = 0.0;
    a.heading = std::numbers::pi;
    AgentOverride b = a;
    b.id = 1;
    b.x = 3.0;
    b.heading = 0.0;
    c.agent_overrides = {a, b};
    World w(c);
    w.step();  // neither sees the other: both spin in place
    CHECK(w.agents()[0].last_input == ControlInput{0.0, 1.0});
    CHECK(diffusion_metric(w) == Approx(3.0 / 1.1));
    CHECK(measure(w).diffusion == Approx(3.0 / 1.1));
  }
}

TEST_SUITE("cluster components") {
  TEST_CASE("examples") {
    const std::vector<Vec2> chain{{0, 0}, {1, 0}, {2, 0.3}, {2.5, 1.2}};
    CHECK(cluster_components(chain, 1.1).size() == 1);
    const std::vector<Vec2> pairs{{0, 0}, {0.5, 0}, {11, 0}, {11.5, 0}};
    const auto g = cluster_components(pairs, 1.1);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == std::vector<std::size_t>{0, 1});
    CHECK(g[1] == std::vector<std::size_t>{2, 3});
  }

  TEST_CASE("boundary distance links") {
    std::vector<Vec2> line;
    for (int i = 0; i < 5; ++i) line.push_back({0.5 * i, 0.0});
    CHECK(cluster_components(line, 0.5).size() == 1);
    CHECK(union_find_components(line, 0.5).size() == 1);
  }

  TEST_CASE("numbering by smallest member") {
    const std::vector<Vec2> pts{{10, 0}, {0, 0}, {10.5, 0}, {0.5, 0}, {20, 0}};
    const auto g = cluster_components(pts, 1.0);
    REQUIRE(g.size() == 3);
    CHECK(g[0] == std::vector<std::size_t>{0, 2});
    CHECK(g[1] == std::vector<std::size_t>{1, 3});
    CHECK(g[2] == std::vector<std::size_t>{4});
  }

  TEST_CASE("agrees with union-find on random instances") {
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<std::size_t> count(1, 50);
    std::uniform_real_distribution<double> extent(0.5, 20.0);
    for (int k = 0; k < 300; ++k) {
      const double e = extent(rng);
      std::uniform_real_distribution<double> pos(0.0, e);
      std::vector<Vec2> pts(count(rng));
      for (auto& p : pts) p = {pos(rng), pos(rng)};
      REQUIRE(cluster_components(pts, 1.1) == union_find_components(pts, 1.1));
    }
  }

  TEST_CASE("link distance must be positive") {
    CHECK_THROWS_AS(cluster_components(std::vector<Vec2>{{0, 0}}, 0.0), std::invalid_argument);
  }
}

TEST_SUITE("classifier") {
  TEST_CASE("window length") {
    ClassifierConfig c;
    CHECK(c.window_for(5456) == 1091);
    CHECK(c.window_for(200) == 100);
    CHECK(c.window_for(0) == 100);
  }

  TEST_CASE("rule table") {
    const ClassifierConfig cfg;
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(0.15)), cfg).label == PhaseLabel::Mill);
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(0.5)), cfg).label == PhaseLabel::Ellipsoidal);
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(1.5, 2)), cfg).label == PhaseLabel::SeparatedGroups);
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(1.5, 1)), cfg).label ==
          PhaseLabel::CollidingClusters);
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(1.5, 3, 1)), cfg).label ==
          PhaseLabel::CollidingClusters);
    CHECK(classify_traces(std::vector<MetricTrace>(200, trace(kInf, 2)), cfg).label ==
          PhaseLabel::SeparatedGroups);
  }

  TEST_CASE("thresholds are exclusive below and inclusive above") {
    ClassifierConfig cfg;
    cfg.mill_threshold = 0.25;  // exactly representable, so the window mean is exact
    CHECK(classify_traces(std::vector<MetricTrace>(100, trace(0.25)), cfg).label == PhaseLabel::Ellipsoidal);
    CHECK(classify_traces(std::vector<MetricTrace>(100, trace(1.0, 1)), cfg).label ==
          PhaseLabel::CollidingClusters);
  }

  TEST_CASE("only the trailing window counts") {
    std::vector<MetricTrace> t(400, trace(5.0, 2, 3));
    for (std::size_t i = 300; i < 400; ++i) t[i] = trace(0.1, 1);
    const Classification c = classify_traces(t);
    CHECK(c.window_ticks == 100);
    CHECK(c.label == PhaseLabel::Mill);
    CHECK(c.mean_circliness == Approx(0.1));
    CHECK(c.window_collisions == 0);
  }

  TEST_CASE("too-short records are argument errors") {
    CHECK_THROWS_AS(classify_traces(std::vector<MetricTrace>(99, trace(0.1))), std::invalid_argument);
    CHECK_THROWS_AS(classify_run(RunRecord{}), std::invalid_argument);
  }

  TEST_CASE("label names round-trip") {
    for (auto l : {PhaseLabel::Mill, PhaseLabel::Ellipsoidal, PhaseLabel::SeparatedGroups,
                   PhaseLabel::CollidingClusters}) {
      CHECK(parse_phase_label(to_string(l)) == l);
    }
  }
}

TEST_CASE("measure on a world") {
  WorldConfig c;
  c.n_agents = 4;
  c.body_radius = 0.2;
  std::vector<AgentOverride> over;
  const std::vector<Vec2> pts{{0, 0}, {0.1, 0}, {5, 0}, {5, 1}};
  for (AgentId i = 0; i < 4; ++i) {
    AgentOverride o;
    o.id = i;
    o.x = pts[i].x;
    o.y = pts[i].y;
    o.heading = 0.0;
    over.push_back(o);
  }
  c.agent_overrides = over;
  const World w(c);
  const MetricTrace m = measure(w);
  CHECK(m.collisions == 1);
  CHECK(m.n_components == 2);
  CHECK(m.min_pairwise_distance == Approx(0.1));
  CHECK(m.circliness == Approx(circliness(pts)));
  ClassifierConfig wide;
  wide.link_distance = 10.0;
  CHECK(measure(w, wide).n_components == 1);
}
