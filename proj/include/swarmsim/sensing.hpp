#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swarmsim/agent.hpp"
#include "swarmsim/arena.hpp"

namespace swarmsim {

/// True iff a point at `offset` from the observer lies inside its cone:
/// range <= vision_distance and |bearing| <= vision_halfangle.
bool in_field_of_view(const AgentState& observer, Vec2 offset);

struct SensingOptions {
  ArenaSpec arena{};
  bool occlusion = false;
  double body_radius = 0.0975;  // occluder radius when occlusion is on
};

/// Noise-free reading for agents[index] against every other agent, O(N).
bool sense_brute_force(std::span<const AgentState> agents, std::size_t index,
                       const SensingOptions& options = {});

/// Noise-free readings for all agents by all-pairs testing, O(N^2).
/// `directions`, when given, holds each agent's (cos, sin) heading so callers
/// that also integrate motion compute it once.
std::vector<std::uint8_t> sense_all_brute_force(std::span<const AgentState> agents,
                                                const SensingOptions& options = {},
                                                std::span<const Vec2> directions = {});

/// Uniform grid (cell size = largest vision distance) bucketing positions so
/// each observer only tests the 3x3 cell neighbourhood. Rebuilt per snapshot.
class SpatialGrid {
 public:
  void build(std::span<const AgentState> agents, const ArenaSpec& arena);

  /// Calls fn(j) for every candidate index j that could lie within the cell
  /// size of agents[i]; always includes every such agent, may include more.
  template <class Fn>
  void for_each_candidate(std::size_t i, Fn&& fn) const;

  bool is_fallback() const { return fallback_; }

 private:
  bool fallback_ = false;
  bool wrap_ = false;
  std::size_t agent_count_ = 0;
  double cell_w_ = 1.0;
  double cell_h_ = 1.0;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  long nx_ = 1;
  long ny_ = 1;
  std::vector<long> cell_x_;
  std::vector<long> cell_y_;
  std::vector<std::size_t> cell_index_;
  std::vector<std::size_t> cell_start_;  // CSR offsets, size nx*ny + 1
  std::vector<std::size_t> members_;
  std::vector<std::size_t> fill_;
};

/// Noise-free readings for all agents using the spatial grid. Must agree
/// exactly with sense_all_brute_force.
std::vector<std::uint8_t> sense_all_grid(std::span<const AgentState> agents,
                                         const SensingOptions& options = {},
                                         std::span<const Vec2> directions = {});

template <class Fn>
void SpatialGrid::for_each_candidate(std::size_t i, Fn&& fn) const {
  if (fallback_) {
    for (std::size_t j = 0; j < agent_count_; ++j) fn(j);
    return;
  }
  const long cx = cell_x_[i];
  const long cy = cell_y_[i];
  if (!wrap_) {
    // Cells of one row are adjacent in the CSR layout, so each row of the
    // 3x3 neighbourhood is a single member range.
    const long x0 = cx > 0 ? cx - 1 : 0;
    const long x1 = cx + 1 < nx_ ? cx + 1 : nx_ - 1;
    const long y0 = cy > 0 ? cy - 1 : 0;
    const long y1 = cy + 1 < ny_ ? cy + 1 : ny_ - 1;
    for (long y = y0; y <= y1; ++y) {
      const auto first = cell_start_[static_cast<std::size_t>(y * nx_ + x0)];
      const auto last = cell_start_[static_cast<std::size_t>(y * nx_ + x1 + 1)];
      for (std::size_t k = first; k < last; ++k) fn(members_[k]);
    }
    return;
  }
  for (long dy = -1; dy <= 1; ++dy) {
    const long y = (cy + dy + ny_) % ny_;
    for (long dx = -1; dx <= 1; ++dx) {
      const long x = (cx + dx + nx_) % nx_;
      const auto cell = static_cast<std::size_t>(y * nx_ + x);
      for (std::size_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) fn(members_[k]);
    }
  }
}

}  // namespace swarmsim
