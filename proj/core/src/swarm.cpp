#include "semswarm/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "semswarm/errors.hpp"
#include "semswarm/spatial_grid.hpp"

namespace semswarm {

SwarmParams SwarmParams::from_array(std::span<const double> v) {
  if (v.size() != kDimension) {
    throw InvalidParameter("parameter vector must have 6 entries, got " +
                           std::to_string(v.size()));
  }
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

bool ValidatedParams::any_clamped() const {
  return std::any_of(clamped.begin(), clamped.end(), [](bool b) { return b; });
}

ValidatedParams validate_params(std::span<const double> raw) {
  if (raw.size() != SwarmParams::kDimension) {
    throw InvalidParameter("parameter vector must have 6 entries, got " +
                           std::to_string(raw.size()));
  }
  ValidatedParams out;
  std::array<double, SwarmParams::kDimension> v{};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& b = kParamBounds[i];
    if (!std::isfinite(raw[i])) {
      throw InvalidParameter(std::string(b.name) + " is not finite");
    }
    v[i] = std::clamp(raw[i], b.min_valid(), b.hi);
    out.clamped[i] = v[i] != raw[i];
  }
  out.params = SwarmParams::from_array(v);
  return out;
}

std::array<double, SwarmParams::kDimension> normalize(std::span<const double> raw) {
  std::array<double, SwarmParams::kDimension> out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (raw[i] - kParamBounds[i].lo) / kParamBounds[i].range();
  }
  return out;
}

std::array<double, SwarmParams::kDimension> normalize(const SwarmParams& p) {
  const auto a = p.to_array();
  return normalize(std::span<const double>(a));
}

std::array<double, SwarmParams::kDimension> denormalize(std::span<const double> unit) {
  std::array<double, SwarmParams::kDimension> out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = kParamBounds[i].lo + unit[i] * kParamBounds[i].range();
  }
  return out;
}

Vec2 random_velocity(Rng& rng, double max_speed) {
  const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double speed = max_speed * rng.uniform_open_closed();
  return {speed * std::cos(angle), speed * std::sin(angle)};
}

SwarmWorld init_world(const SwarmParams& params, std::size_t n_agents, std::uint64_t seed) {
  if (n_agents == 0) throw EmptyWorld("a world needs at least one agent");
  SwarmWorld world{.agents = {}, .rng = Rng(seed), .step_count = 0};
  world.agents.reserve(n_agents);
  for (std::size_t i = 0; i < n_agents; ++i) {
    AgentState a;
    a.position.x = world.rng.uniform();
    a.position.y = world.rng.uniform();
    a.velocity = random_velocity(world.rng, params.max_speed);
    world.agents.push_back(a);
  }
  return world;
}

namespace {

std::vector<Vec2> positions_of(std::span<const AgentState> agents) {
  std::vector<Vec2> out(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) out[i] = agents[i].position;
  return out;
}

}  // namespace

std::vector<std::uint32_t> neighbors_within(const SwarmWorld& world, std::size_t agent_index,
                                            double radius) {
  if (agent_index >= world.agents.size()) {
    throw IndexError("agent index " + std::to_string(agent_index) + " out of range");
  }
  if (!(radius > 0.0)) return {};
  const auto positions = positions_of(world.agents);
  const SpatialGrid grid(positions, radius);
  return grid.query(positions, static_cast<std::uint32_t>(agent_index), radius);
}

namespace detail {

Vec2 clamp_speed(Vec2 v, double max_speed) {
  const double s2 = v.norm2();
  if (s2 > max_speed * max_speed) {
    const double scale = max_speed / std::sqrt(s2);
    v *= scale;
  }
  return v;
}

Vec2 steer(Vec2 velocity, const SteeringSums& sums, const SwarmParams& params, Vec2 noise) {
  Vec2 v = velocity;
  if (sums.count > 0) {
    const double inv = 1.0 / static_cast<double>(sums.count);
    const Vec2 mean_velocity = inv * sums.velocity_sum;
    const Vec2 to_centroid = inv * sums.offset_sum;
    v += params.alignment_w * (mean_velocity - velocity);
    v += params.cohesion_w * to_centroid;
  }
  v += params.separation_w * sums.separation;
  v += params.noise_sigma * noise;
  return clamp_speed(v, params.max_speed);
}

}  // namespace detail

void step_world(SwarmWorld& world, const SwarmParams& params) {
  const std::size_t n = world.agents.size();
  const auto positions = positions_of(world.agents);
  const double radius = params.neighbor_radius;
  const double r2 = radius * radius;
  const double sep_r = kSeparationRadiusFraction * radius;
  const double sep2 = sep_r * sep_r;
  const SpatialGrid grid(positions, radius);

  std::vector<AgentState> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = positions[i];
    detail::SteeringSums sums;
    grid.for_each_candidate(p, [&](std::uint32_t j) {
      if (j == i) return;
      const Vec2 off = torus::delta(positions[j], p);
      const double d2 = off.norm2();
      if (d2 >= r2) return;
      sums.add_flock(off, world.agents[j].velocity);
      if (d2 < sep2) sums.add_separation(off, d2, 1.0);
    });
    const double nx = world.rng.normal();
    const double ny = world.rng.normal();
    const Vec2 v = detail::steer(world.agents[i].velocity, sums, params, {nx, ny});
    next[i].velocity = v;
    next[i].position = torus::wrap(p + v);
  }
  world.agents = std::move(next);
  ++world.step_count;
}

Trajectory run_simulation(const SwarmParams& params, std::size_t n_agents, std::size_t steps,
                          std::uint64_t seed) {
  SwarmWorld world = init_world(params, n_agents, seed);
  Trajectory traj;
  traj.params = params;
  traj.frames.reserve(steps + 1);
  traj.frames.push_back(world.agents);
  for (std::size_t s = 0; s < steps; ++s) {
    step_world(world, params);
    traj.frames.push_back(world.agents);
  }
  return traj;
}

double mean_nearest_neighbor_distance(std::span<const AgentState> agents) {
  const std::size_t n = agents.size();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, torus::distance2(agents[i].position, agents[j].position));
    }
    total += std::sqrt(best);
  }
  return total / static_cast<double>(n);
}

}  // namespace semswarm
