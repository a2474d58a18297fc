#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "semswarm/geometry.hpp"
#include "semswarm/rng.hpp"

namespace semswarm {

/// The six behavioral coefficients searched by the optimizer.
struct SwarmParams {
  static constexpr std::size_t kDimension = 6;

  double neighbor_radius = 0.1;  // world units, (0, 0.5]
  double max_speed = 0.01;       // world units/step, (0.001, 0.1]
  double alignment_w = 1.0;      // [0, 2]
  double cohesion_w = 1.0;       // [0, 2]
  double separation_w = 1.0;     // [0, 2]
  double noise_sigma = 0.0;      // world units/step, [0, 0.05]

  std::array<double, kDimension> to_array() const {
    return {neighbor_radius, max_speed, alignment_w, cohesion_w, separation_w, noise_sigma};
  }
  static SwarmParams from_array(std::span<const double> v);

  friend bool operator==(const SwarmParams&, const SwarmParams&) = default;
};

struct ParamBound {
  std::string_view name;
  double lo;
  double hi;
  bool lo_open;

  double range() const { return hi - lo; }
  /// Smallest admissible value; open lower bounds sit 1e-6 of the range inside.
  double min_valid() const { return lo_open ? lo + 1e-6 * range() : lo; }
};

inline constexpr std::array<ParamBound, SwarmParams::kDimension> kParamBounds{{
    {"neighbor_radius", 0.0, 0.5, true},
    {"max_speed", 0.001, 0.1, true},
    {"alignment_w", 0.0, 2.0, false},
    {"cohesion_w", 0.0, 2.0, false},
    {"separation_w", 0.0, 2.0, false},
    {"noise_sigma", 0.0, 0.05, false},
}};

struct ValidatedParams {
  SwarmParams params;
  std::array<bool, SwarmParams::kDimension> clamped{};

  bool any_clamped() const;
};

/// Clamps each entry into its bound interval. Throws InvalidParameter on a
/// non-finite entry or a vector that is not 6-dimensional.
ValidatedParams validate_params(std::span<const double> raw);

/// Maps each dimension to [0, 1] by its bounds.
std::array<double, SwarmParams::kDimension> normalize(const SwarmParams& p);
std::array<double, SwarmParams::kDimension> normalize(std::span<const double> raw);
/// Inverse of normalize (no clamping).
std::array<double, SwarmParams::kDimension> denormalize(std::span<const double> unit);

struct AgentState {
  Vec2 position;
  Vec2 velocity;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

using Frame = std::vector<AgentState>;

struct SwarmWorld {
  std::vector<AgentState> agents;
  Rng rng;
  std::uint64_t step_count = 0;

  friend bool operator==(const SwarmWorld&, const SwarmWorld&) = default;
};

struct Trajectory {
  std::vector<Frame> frames;
  SwarmParams params;
};

/// Separation acts inside this fraction of the neighbor radius.
inline constexpr double kSeparationRadiusFraction = 0.4;
inline constexpr double kSeparationEpsilon = 1e-6;

SwarmWorld init_world(const SwarmParams& params, std::size_t n_agents, std::uint64_t seed);

/// Random velocity with uniform heading and magnitude in (0, max_speed].
Vec2 random_velocity(Rng& rng, double max_speed);

std::vector<std::uint32_t> neighbors_within(const SwarmWorld& world, std::size_t agent_index,
                                            double radius);

void step_world(SwarmWorld& world, const SwarmParams& params);

Trajectory run_simulation(const SwarmParams& params, std::size_t n_agents, std::size_t steps,
                          std::uint64_t seed);

/// Mean toroidal nearest-neighbor distance. Zero for fewer than two agents.
double mean_nearest_neighbor_distance(std::span<const AgentState> agents);

namespace detail {

/// Accumulated neighbor sums for one agent; shared with the ecosystem stepper so
/// a single-species ecosystem reproduces swarm-core arithmetic exactly.
struct SteeringSums {
  Vec2 velocity_sum;
  Vec2 offset_sum;
  Vec2 separation;
  std::uint32_t count = 0;

  void add_flock(Vec2 offset_to_neighbor, Vec2 neighbor_velocity) {
    velocity_sum += neighbor_velocity;
    offset_sum += offset_to_neighbor;
    ++count;
  }
  void add_separation(Vec2 offset_to_neighbor, double d2, double weight) {
    const double inv = 1.0 / (d2 > kSeparationEpsilon ? d2 : kSeparationEpsilon);
    separation -= (weight * inv) * offset_to_neighbor;
  }
};

/// Applies the steering law, noise and speed clamp, returning the new velocity.
/// `noise` is a pair of standard normal draws.
Vec2 steer(Vec2 velocity, const SteeringSums& sums, const SwarmParams& params, Vec2 noise);

Vec2 clamp_speed(Vec2 v, double max_speed);

}  // namespace detail
}  // namespace semswarm
