#include "swarmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "swarmsim/record.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

std::string_view to_string(PhaseLabel label) {
  switch (label) {
    case PhaseLabel::Mill:
      return "Mill";
    case PhaseLabel::Ellipsoidal:
      return "Ellipsoidal";
    case PhaseLabel::SeparatedGroups:
      return "SeparatedGroups";
    case PhaseLabel::CollidingClusters:
      return "CollidingClusters";
  }
  return "Unknown";
}

std::optional<PhaseLabel> parse_phase_label(std::string_view name) {
  for (auto l : {PhaseLabel::Mill, PhaseLabel::Ellipsoidal, PhaseLabel::SeparatedGroups,
                 PhaseLabel::CollidingClusters}) {
    if (to_string(l) == name) return l;
  }
  return std::nullopt;
}

std::size_t ClassifierConfig::window_for(std::size_t n_ticks) const {
  const auto fraction = static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(n_ticks)));
  return std::max(min_window_ticks, std::max<std::size_t>(fraction, 1));
}

Vec2 centroid(std::span<const Vec2> positions) {
  if (positions.empty()) throw std::invalid_argument("centroid of an empty point set");
  Vec2 sum{};
  for (const auto& p : positions) sum += p;
  return sum / static_cast<double>(positions.size());
}

double circliness(std::span<const Vec2> positions, double epsilon) {
  if (positions.size() < 2) throw std::invalid_argument("circliness needs at least two points");
  const Vec2 mu = centroid(positions);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (const auto& p : positions) {
    const double r = distance(p, mu);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (lo < epsilon) return std::numeric_limits<double>::infinity();
  return (hi - lo) / lo;
}

std::optional<Vec2> pivot(const AgentState& state, const ControlInput& input, double dt, double epsilon) {
  const double speed = input.forward_speed * state.speed_factor;
  const double turn = input.turn_rate * state.turn_factor;
  if (!(std::abs(turn) >= epsilon)) return std::nullopt;

  const Vec2 p = state.position();
  const Vec2 tangent{std::cos(state.heading), std::sin(state.heading)};
  const Vec2 normal{-tangent.y, tangent.x};
  if (speed == 0.0) return p;
  if (dt <= 0.0) return p + normal * (speed / turn);

  // Euler iterates are vertices of a regular polygon with chord `chord` and
  // exterior angle `angle`; its circumcentre sits on the chord's bisector.
  const double chord = speed * dt;
  const double angle = turn * dt;
  return p + tangent * (0.5 * chord) + normal * (0.5 * chord / std::tan(0.5 * angle));
}

namespace {

// Squared-distance screen: decides `sqrt(d2) <= limit` without the root
// unless d2 is within rounding of the boundary.
bool within(double d2, double limit) {
  const double l2 = limit * limit;
  if (d2 < l2 * (1.0 - 1e-9)) return true;
  if (d2 > l2 * (1.0 + 1e-9)) return false;
  return std::sqrt(d2) <= limit;
}

bool closer_than(double d2, double limit) {
  const double l2 = limit * limit;
  if (d2 < l2 * (1.0 - 1e-9)) return true;
  if (d2 > l2 * (1.0 + 1e-9)) return false;
  return std::sqrt(d2) < limit;
}

}  // namespace

double diffusion_metric(std::span<const Vec2> pivots, double gamma) {
  if (pivots.size() < 2) throw std::invalid_argument("diffusion metric needs at least two agents");
  if (!(gamma > 0.0)) throw std::invalid_argument("diffusion metric needs gamma > 0");
  // sqrt is monotone, so the root of the smallest square is the smallest distance.
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    for (std::size_t j = i + 1; j < pivots.size(); ++j) best = std::min(best, (pivots[i] - pivots[j]).norm2());
  }
  return std::sqrt(best) / gamma;
}

double mean_vision_distance(const World& world) {
  double sum = 0.0;
  for (const auto& a : world.agents()) sum += a.vision_distance;
  return sum / static_cast<double>(world.size());
}

namespace {

std::vector<Vec2> world_pivots(const World& world, double epsilon) {
  std::vector<Vec2> out;
  out.reserve(world.size());
  for (const auto& a : world.agents()) {
    out.push_back(pivot(a, a.last_input, world.config().dt, epsilon).value_or(a.position()));
  }
  return out;
}

std::vector<Vec2> positions_of(const World& world) {
  std::vector<Vec2> out;
  out.reserve(world.size());
  for (const auto& a : world.agents()) out.push_back(a.position());
  return out;
}

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<std::size_t> parent;
};

}  // namespace

double diffusion_metric(const World& world, double epsilon) {
  return diffusion_metric(world_pivots(world, epsilon), mean_vision_distance(world));
}

std::vector<std::vector<std::size_t>> cluster_components(std::span<const Vec2> positions, double link_distance) {
  if (!(link_distance > 0.0)) throw std::invalid_argument("link_distance must be > 0");
  const std::size_t n = positions.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return positions[a].x < positions[b].x || (positions[a].x == positions[b].x && a < b);
  });

  // Sweep along x: only pairs within link_distance in x can be linked.
  DisjointSets sets(n);
  for (std::size_t s = 0; s < n; ++s) {
    const Vec2 p = positions[order[s]];
    for (std::size_t t = s + 1; t < n && positions[order[t]].x - p.x <= link_distance; ++t) {
      if (within((p - positions[order[t]]).norm2(), link_distance)) sets.unite(order[s], order[t]);
    }
  }

  // The root is always the smallest member, so visiting ids in order yields
  // groups numbered by smallest member with members already sorted.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = groups.size();
      groups.emplace_back();
    }
    groups[slot[root]].push_back(i);
  }
  return groups;
}

MetricTrace measure(const World& world, const ClassifierConfig& config) {
  MetricTrace m;
  m.tick = world.tick();
  const auto agents = world.agents();
  if (agents.size() < 2) return m;

  const std::vector<Vec2> positions = positions_of(world);
  const double gamma = mean_vision_distance(world);
  m.circliness = circliness(positions, config.circliness_epsilon);
  m.diffusion = diffusion_metric(world_pivots(world, config.pivot_epsilon), gamma);

  const double body = world.config().body_radius;
  double min2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const double d2 = (positions[i] - positions[j]).norm2();
      min2 = std::min(min2, d2);
      if (closer_than(d2, body)) ++m.collisions;
    }
  }
  m.min_pairwise_distance = std::sqrt(min2);
  const double link = config.link_distance.value_or(gamma);
  m.n_components = static_cast<std::uint32_t>(cluster_components(positions, link).size());
  return m;
}

Classification classify_traces(std::span<const MetricTrace> traces, const ClassifierConfig& config) {
  const std::size_t window = config.window_for(traces.size());
  if (traces.size() < window) {
    throw std::invalid_argument("record has " + std::to_string(traces.size()) + " ticks, window needs " +
                                std::to_string(window));
  }
  Classification c;
  c.window_ticks = window;
  double sum = 0.0;
  for (const auto& t : traces.subspan(traces.size() - window)) {
    sum += t.circliness;
    c.window_collisions += t.collisions;
  }
  c.mean_circliness = sum / static_cast<double>(window);
  c.final_diffusion = traces.back().diffusion;
  c.final_components = traces.back().n_components;

  if (c.mean_circliness < config.mill_threshold) {
    c.label = PhaseLabel::Mill;
  } else if (c.mean_circliness < config.ellipse_threshold) {
    c.label = PhaseLabel::Ellipsoidal;
  } else if (c.window_collisions > 0 || c.final_components == 1) {
    c.label = PhaseLabel::CollidingClusters;
  } else {
    c.label = PhaseLabel::SeparatedGroups;
  }
  return c;
}

Classification classify_run(const RunRecord& record, const ClassifierConfig& config) {
  std::vector<MetricTrace> traces;
  traces.reserve(record.ticks.size());
  for (const auto& t : record.ticks) traces.push_back(t.metrics);
  return classify_traces(traces, config);
}

}  // namespace swarmsim
