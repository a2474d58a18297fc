#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "semswarm/population_analysis.hpp"
#include "semswarm/render.hpp"
#include "semswarm/rng.hpp"
#include "semswarm/semantic.hpp"
#include "semswarm/swarm.hpp"

namespace semswarm {

inline constexpr std::size_t kDefaultEcosystemCapacity = 50'000;
inline constexpr std::uint64_t kEpochLength = 600;
inline constexpr double kMergeAffinity = 0.8;
inline constexpr double kRepelAffinity = 0.2;
inline constexpr double kRepelSeparationBoost = 3.0;
inline constexpr double kHybridProbability = 0.25;
inline constexpr double kHybridCentroidDistance = 0.1;
inline constexpr double kSpawnRadius = 0.1;
inline constexpr double kMetaRuleRate = 0.1;
inline constexpr double kMetaRuleMinRatio = 0.2;
inline constexpr double kMaxEpochChange = 0.1;  // fraction of each bound range

inline constexpr std::array<Rgb, 12> kSpeciesPalette{{
    {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
    {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
    {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {220, 190, 255},
}};

struct Lifeform {
  std::string id;
  SwarmParams params;
  Embedding prompt_embedding = Embedding::basis(0);
  std::string owner;
  std::size_t agent_begin = 0;
  std::size_t agent_end = 0;
  std::size_t color_index = 0;
  std::vector<std::string> parents;  // set for hybrids
  std::uint64_t admitted_step = 0;

  std::size_t agent_count() const { return agent_end - agent_begin; }
};

struct MetaRule {
  std::array<double, SwarmParams::kDimension> component{};
  double explained_variance_ratio = 0.0;
  double strength = 0.0;
  std::uint64_t created_epoch = 0;
};

/// How agents of one species treat neighbors of another.
enum class Interaction : std::uint8_t {
  kSame,    // own species
  kMerge,   // flock with them
  kIgnore,  // no cross-species terms
  kRepel,   // boosted separation only
};

Interaction interaction_for(double affinity);

struct EcosystemConfig {
  std::size_t capacity = kDefaultEcosystemCapacity;
  std::uint64_t seed = 0;
  /// At each epoch boundary, re-extract meta-rules from the registry and apply
  /// them.
  bool auto_meta_rules = true;
  std::size_t max_meta_rules = 2;
  /// Threads for per-agent force computation; results do not depend on it.
  std::size_t workers = 1;
};

/// Shared multi-species world. Agents are stored contiguously per lifeform in
/// admission order, so each lifeform owns one index range.
struct EcosystemWorld {
  explicit EcosystemWorld(EcosystemConfig cfg = {});

  EcosystemConfig config;
  std::vector<AgentState> agents;
  std::vector<std::uint32_t> species;  // index into lifeforms
  std::vector<Lifeform> lifeforms;
  std::vector<Interaction> interactions;  // lifeforms.size()^2, row = acting species
  std::vector<MetaRule> meta_rules;
  std::set<std::pair<std::size_t, std::size_t>> hybridized;
  std::uint64_t step_count = 0;
  std::uint64_t next_serial = 1;
  Rng placement_rng;
  Rng noise_rng;
  Rng event_rng;

  std::uint64_t epoch() const { return step_count / kEpochLength; }
  Interaction interaction(std::size_t a, std::size_t b) const {
    return interactions[a * lifeforms.size() + b];
  }
  const Lifeform* find(std::string_view id) const;
};

/// Spawns n_agents in a random disc of radius 0.1 and registers the
/// lifeform. Throws CapacityExceeded, InvalidParameter for invalid params or
/// zero agents.
const Lifeform& admit_lifeform(EcosystemWorld& world, const SwarmParams& params,
                               const Embedding& prompt_embedding, std::string_view owner,
                               std::size_t n_agents);

/// One step of every agent under its species' params with affinity-weighted
/// cross-species terms. At each epoch boundary runs the hybridization check
/// and, when enabled, meta-rule synthesis.
void ecosystem_step(EcosystemWorld& world);

/// Checks every merging pair once; returns the ids of spawned hybrids.
std::vector<std::string> hybridize(EcosystemWorld& world);

struct LifeformTrait {
  SwarmParams params;
  Embedding prompt_embedding = Embedding::basis(0);
};

/// Empty for fewer than 3 entries. Otherwise clusters the normalized params
/// into min(4, N/3) themes and keeps the principal components with ratio at
/// least 0.2, up to max_rules.
std::vector<MetaRule> extract_meta_rules(std::span<const LifeformTrait> history,
                                         std::size_t max_rules, std::uint64_t epoch = 0,
                                         std::vector<std::size_t>* themes = nullptr);

std::vector<LifeformTrait> lifeform_traits(const EcosystemWorld& world);

/// Moves each lifeform's normalized params toward the population mean along
/// every rule by strength * 0.1 of its projected deviation. The per-dimension
/// change is capped at 10% of the range, and results are clamped to bounds.
void apply_meta_rules(EcosystemWorld& world, std::span<const MetaRule> rules);

nlohmann::json ecosystem_state_json(const EcosystemWorld& world);

ImageRGB render_snapshot(const EcosystemWorld& world, int size = kDefaultImageSize);

}  // namespace semswarm
