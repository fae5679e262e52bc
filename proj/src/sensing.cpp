#include "swarmsim/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swarmsim {

namespace {

struct Observer {
  Vec2 position;
  Vec2 direction;
  double range = 0.0;
  double cos_half = 1.0;
  bool omnidirectional = false;
  double reject2 = 0.0;  // squared distances above this are surely out of range
};

// Swarms usually share one half-angle, so remember the last cosine.
struct HalfAngleCache {
  double angle = 0.0;
  double cosine = 1.0;

  double cos_of(double a) {
    if (a != angle) {
      angle = a;
      cosine = std::cos(a);
    }
    return cosine;
  }
};

Observer make_observer(const AgentState& s, Vec2 direction, HalfAngleCache& cache) {
  return {s.position(),
          direction,
          s.vision_distance,
          cache.cos_of(s.vision_halfangle),
          s.vision_halfangle >= std::numbers::pi,
          s.vision_distance * s.vision_distance * (1.0 + 1e-9)};
}

Vec2 heading_vector(const AgentState& s) { return {std::cos(s.heading), std::sin(s.heading)}; }

// |bearing| <= half  <=>  cos(bearing) >= cos(half), for half in (0, pi].
[[gnu::always_inline]] inline bool sees(const Observer& o, Vec2 offset) {
  const double d2 = offset.norm2();
  if (d2 > o.reject2) return false;
  const double d = std::sqrt(d2);
  if (d > o.range) return false;
  if (o.omnidirectional || d == 0.0) return true;
  return o.direction.dot(offset) >= d * o.cos_half;
}

// Packed positions so candidate tests stay in cache.
struct Scene {
  std::span<const AgentState> agents;
  const Vec2* positions;
  const SensingOptions& opt;
  bool wrap;

  Vec2 offset(std::size_t from, std::size_t to) const {
    return wrap ? opt.arena.displacement(positions[from], positions[to]) : positions[to] - positions[from];
  }
};

// Does any agent closer than the target sit within body_radius of the sight line?
template <class Candidates>
bool occluded(const Scene& scene, std::size_t i, std::size_t j, Vec2 to_target, const Candidates& candidates) {
  const double target2 = to_target.norm2();
  const double r2 = scene.opt.body_radius * scene.opt.body_radius;
  bool blocked = false;
  candidates([&](std::size_t k) {
    if (blocked || k == i || k == j) return;
    const Vec2 to_k = scene.offset(i, k);
    if (to_k.norm2() >= target2) return;
    const double t = std::clamp(to_k.dot(to_target) / target2, 0.0, 1.0);
    const Vec2 closest = to_target * t;
    if ((to_k - closest).norm2() < r2) blocked = true;
  });
  return blocked;
}

template <class Candidates>
bool reading(const Scene& scene, std::size_t i, Vec2 direction, const Candidates& candidates,
             HalfAngleCache& cache) {
  const Observer o = make_observer(scene.agents[i], direction, cache);
  bool found = false;
  candidates([&](std::size_t j) {
    if (found || j == i) return;
    const Vec2 offset = scene.offset(i, j);
    if (!sees(o, offset)) return;
    if (scene.opt.occlusion && offset.norm2() > 0.0 && occluded(scene, i, j, offset, candidates)) return;
    found = true;
  });
  return found;
}

template <class CandidatesFor>
std::vector<std::uint8_t> sense_all(std::span<const AgentState> agents, const SensingOptions& options,
                                    std::span<const Vec2> directions, const CandidatesFor& candidates_for) {
  thread_local std::vector<Vec2> positions;
  positions.resize(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) positions[i] = agents[i].position();
  const Scene scene{agents, positions.data(), options, options.arena.kind == ArenaSpec::Kind::Torus};
  const bool have_directions = directions.size() == agents.size();
  std::vector<std::uint8_t> out(agents.size(), 0);
  HalfAngleCache cache;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Vec2 dir = have_directions ? directions[i] : heading_vector(agents[i]);
    out[i] = reading(scene, i, dir, candidates_for(i), cache) ? 1 : 0;
  }
  return out;
}

}  // namespace

bool in_field_of_view(const AgentState& observer, Vec2 offset) {
  HalfAngleCache cache;
  return sees(make_observer(observer, heading_vector(observer), cache), offset);
}

bool sense_brute_force(std::span<const AgentState> agents, std::size_t index, const SensingOptions& options) {
  std::vector<Vec2> positions(agents.size());
  for (std::size_t j = 0; j < agents.size(); ++j) positions[j] = agents[j].position();
  const Scene scene{agents, positions.data(), options, options.arena.kind == ArenaSpec::Kind::Torus};
  const auto all = [&](auto&& fn) {
    for (std::size_t j = 0; j < agents.size(); ++j) fn(j);
  };
  HalfAngleCache cache;
  return reading(scene, index, heading_vector(agents[index]), all, cache);
}

std::vector<std::uint8_t> sense_all_brute_force(std::span<const AgentState> agents, const SensingOptions& options,
                                                std::span<const Vec2> directions) {
  const std::size_t n = agents.size();
  const auto all = [n](auto&& fn) {
    for (std::size_t j = 0; j < n; ++j) fn(j);
  };
  return sense_all(agents, options, directions, [&](std::size_t) { return all; });
}

void SpatialGrid::build(std::span<const AgentState> agents, const ArenaSpec& arena) {
  agent_count_ = agents.size();
  fallback_ = false;
  wrap_ = arena.kind == ArenaSpec::Kind::Torus;

  double reach = 0.0;
  for (const auto& a : agents) reach = std::max(reach, a.vision_distance);
  // Margin so a pair exactly `reach` apart never lands two cells apart.
  reach *= 1.0 + 1e-9;
  if (!(reach > 0.0) || !std::isfinite(reach) || agents.size() < 2) {
    fallback_ = true;
    return;
  }

  if (wrap_) {
    nx_ = static_cast<long>(std::floor(arena.width / reach));
    ny_ = static_cast<long>(std::floor(arena.height / reach));
    // Fewer than three cells per axis would visit the same cell twice.
    if (nx_ < 3 || ny_ < 3) {
      fallback_ = true;
      return;
    }
    cell_w_ = arena.width / static_cast<double>(nx_);
    cell_h_ = arena.height / static_cast<double>(ny_);
    origin_x_ = -0.5 * arena.width;
    origin_y_ = -0.5 * arena.height;
  } else {
    double min_x = agents[0].x, max_x = agents[0].x, min_y = agents[0].y, max_y = agents[0].y;
    for (const auto& a : agents) {
      min_x = std::min(min_x, a.x);
      max_x = std::max(max_x, a.x);
      min_y = std::min(min_y, a.y);
      max_y = std::max(max_y, a.y);
    }
    // Coarsen the grid for sparse swarms so memory stays O(N); larger cells
    // only add candidates, never drop them.
    double cell = reach;
    const double budget = 4.0 * static_cast<double>(agents.size()) + 16.0;
    while (((max_x - min_x) / cell + 1.0) * ((max_y - min_y) / cell + 1.0) > budget) cell *= 2.0;
    cell_w_ = cell_h_ = cell;
    origin_x_ = min_x;
    origin_y_ = min_y;
    nx_ = static_cast<long>(std::floor((max_x - min_x) / cell)) + 1;
    ny_ = static_cast<long>(std::floor((max_y - min_y) / cell)) + 1;
  }

  const auto n_cells = static_cast<std::size_t>(nx_ * ny_);
  cell_x_.resize(agents.size());
  cell_y_.resize(agents.size());
  cell_index_.resize(agents.size());
  cell_start_.assign(n_cells + 1, 0);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const long cx = std::clamp(static_cast<long>(std::floor((agents[i].x - origin_x_) / cell_w_)), 0L, nx_ - 1);
    const long cy = std::clamp(static_cast<long>(std::floor((agents[i].y - origin_y_) / cell_h_)), 0L, ny_ - 1);
    cell_x_[i] = cx;
    cell_y_[i] = cy;
    cell_index_[i] = static_cast<std::size_t>(cy * nx_ + cx);
    ++cell_start_[cell_index_[i] + 1];
  }
  for (std::size_t c = 0; c < n_cells; ++c) cell_start_[c + 1] += cell_start_[c];
  members_.resize(agents.size());
  fill_.assign(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < agents.size(); ++i) members_[fill_[cell_index_[i]]++] = i;
}

std::vector<std::uint8_t> sense_all_grid(std::span<const AgentState> agents, const SensingOptions& options,
                                         std::span<const Vec2> directions) {
  // Reused per thread so stepping does not reallocate the buckets.
  thread_local SpatialGrid grid;
  grid.build(agents, options.arena);
  return sense_all(agents, options, directions, [&](std::size_t i) {
    return [i](auto&& fn) { grid.for_each_candidate(i, fn); };
  });
}

}  // namespace swarmsim
