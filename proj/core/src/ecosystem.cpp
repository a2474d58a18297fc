#include "semswarm/ecosystem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "semswarm/errors.hpp"
#include "semswarm/spatial_grid.hpp"

namespace semswarm {

Interaction interaction_for(double affinity) {
  if (affinity >= kMergeAffinity) return Interaction::kMerge;
  if (affinity <= kRepelAffinity) return Interaction::kRepel;
  return Interaction::kIgnore;
}

EcosystemWorld::EcosystemWorld(EcosystemConfig cfg)
    : config(cfg),
      placement_rng(derive_seed(cfg.seed, {0x706c6163})),
      noise_rng(derive_seed(cfg.seed, {0x6e6f6973})),
      event_rng(derive_seed(cfg.seed, {0x65766e74})) {}

const Lifeform* EcosystemWorld::find(std::string_view id) const {
  for (const auto& l : lifeforms) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

namespace {

void refresh_interactions(EcosystemWorld& world) {
  const std::size_t n = world.lifeforms.size();
  world.interactions.assign(n * n, Interaction::kSame);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const double aff = cosine_similarity(world.lifeforms[a].prompt_embedding,
                                           world.lifeforms[b].prompt_embedding);
      world.interactions[a * n + b] = interaction_for(aff);
    }
  }
}

const Lifeform& spawn(EcosystemWorld& world, const SwarmParams& params,
                      const Embedding& embedding, std::string_view owner, std::size_t n_agents,
                      Vec2 center, Rng& rng, std::vector<std::string> parents) {
  const std::size_t species_id = world.lifeforms.size();
  Lifeform lf;
  lf.id = "lf-" + std::to_string(world.next_serial);
  lf.color_index = static_cast<std::size_t>((world.next_serial - 1) % kSpeciesPalette.size());
  ++world.next_serial;
  lf.params = params;
  lf.prompt_embedding = embedding;
  lf.owner = std::string(owner);
  lf.agent_begin = world.agents.size();
  lf.agent_end = lf.agent_begin + n_agents;
  lf.parents = std::move(parents);
  lf.admitted_step = world.step_count;

  world.agents.reserve(lf.agent_end);
  world.species.reserve(lf.agent_end);
  for (std::size_t i = 0; i < n_agents; ++i) {
    const double r = kSpawnRadius * std::sqrt(rng.uniform());
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    AgentState a;
    a.position = torus::wrap(center + Vec2{r * std::cos(angle), r * std::sin(angle)});
    a.velocity = random_velocity(rng, params.max_speed);
    world.agents.push_back(a);
    world.species.push_back(static_cast<std::uint32_t>(species_id));
  }
  world.lifeforms.push_back(std::move(lf));
  refresh_interactions(world);
  return world.lifeforms.back();
}

std::span<const AgentState> agents_of(const EcosystemWorld& world, const Lifeform& lf) {
  return std::span<const AgentState>(world.agents).subspan(lf.agent_begin, lf.agent_count());
}

// Per-species grid plus that species' agents copied into grid order, so each
// cell is a contiguous run.
struct SpeciesIndex {
  Vec2 center;
  double extent = 0.0;  // max torus distance from center to a member
  SpatialGrid grid;
  std::vector<Vec2> positions;
  std::vector<Vec2> velocities;
  std::vector<std::uint32_t> agents;
};

// All grids share the smallest live neighbor radius as cell size.
std::vector<SpeciesIndex> species_indices(const EcosystemWorld& world,
                                          std::span<const Vec2> positions) {
  double cell = 1.0;
  for (const auto& lf : world.lifeforms) {
    if (lf.agent_count() > 0) cell = std::min(cell, lf.params.neighbor_radius);
  }
  std::vector<SpeciesIndex> out(world.lifeforms.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const Lifeform& lf = world.lifeforms[t];
    SpeciesIndex& idx = out[t];
    const auto members = positions.subspan(lf.agent_begin, lf.agent_count());
    if (members.empty()) continue;
    idx.center = oracle::toroidal_centroid(agents_of(world, lf));
    double far2 = 0.0;
    for (const Vec2& q : members) far2 = std::max(far2, torus::distance2(q, idx.center));
    idx.extent = std::sqrt(far2);
    idx.grid.rebuild(members, cell);
    idx.positions.reserve(members.size());
    idx.velocities.reserve(members.size());
    idx.agents.reserve(members.size());
    for (std::uint32_t local : idx.grid.order()) {
      const std::size_t j = lf.agent_begin + local;
      idx.positions.push_back(positions[j]);
      idx.velocities.push_back(world.agents[j].velocity);
      idx.agents.push_back(static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

// add_flock when `in` holds, written without a branch: most candidates fail
// the radius test in no predictable pattern.
inline void add_flock_masked(detail::SteeringSums& sums, Vec2 off, Vec2 velocity, bool in) {
  const double m = static_cast<double>(in);
  sums.velocity_sum.x += m * velocity.x;
  sums.velocity_sum.y += m * velocity.y;
  sums.offset_sum.x += m * off.x;
  sums.offset_sum.y += m * off.y;
  sums.count += static_cast<std::uint32_t>(in);
}

// Calls fn(k, offset from p) for packed positions [b, e).
template <typename Fn>
void visit_run(const Vec2* data, std::uint32_t b, std::uint32_t e, Vec2 p,
               std::optional<Vec2> shift, Fn&& fn) {
  if (shift) {
    const Vec2 sh = *shift;
    for (std::uint32_t k = b; k < e; ++k) {
      fn(k, Vec2{(data[k].x - p.x) + sh.x, (data[k].y - p.y) + sh.y});
    }
  } else {
    for (std::uint32_t k = b; k < e; ++k) fn(k, torus::delta(data[k], p));
  }
}

void step_range(const EcosystemWorld& world, std::span<const SpeciesIndex> indices,
                std::span<const Vec2> positions, std::span<const Vec2> noise,
                std::vector<AgentState>& next, std::size_t begin, std::size_t end) {
  const std::size_t n_species = world.lifeforms.size();
  for (std::size_t i = begin; i < end; ++i) {
    const std::uint32_t s = world.species[i];
    const SwarmParams& params = world.lifeforms[s].params;
    const double radius = params.neighbor_radius;
    const double r2 = radius * radius;
    const double sep_r = kSeparationRadiusFraction * radius;
    const double sep2 = sep_r * sep_r;
    const Interaction* row = &world.interactions[s * n_species];
    const Vec2 p = positions[i];

    detail::SteeringSums sums;
    for (std::size_t t = 0; t < n_species; ++t) {
      const Interaction kind = row[t];
      if (kind == Interaction::kIgnore) continue;
      const SpeciesIndex& other = indices[t];
      if (other.positions.empty()) continue;
      const double reach = (kind == Interaction::kRepel ? sep_r : radius) + other.extent + 1e-9;
      if (torus::distance2(p, other.center) >= reach * reach) continue;
      const Vec2* data = other.positions.data();
      if (kind == Interaction::kRepel) {
        auto repel = [&](std::uint32_t, Vec2 off) {
          const double d2 = off.norm2();
          if (d2 < sep2) sums.add_separation(off, d2, kRepelSeparationBoost);
        };
        other.grid.for_each_range_within(p, sep_r, [&](std::uint32_t b, std::uint32_t e,
                                                       std::optional<Vec2> shift) {
          visit_run(data, b, e, p, shift, repel);
        });
        continue;
      }
      const Vec2* vel = other.velocities.data();
      if (t != s) {
        auto flock = [&](std::uint32_t k, Vec2 off) {
          const double d2 = off.norm2();
          add_flock_masked(sums, off, vel[k], d2 < r2);
          if (d2 < sep2) sums.add_separation(off, d2, 1.0);
        };
        other.grid.for_each_range_within(p, radius, [&](std::uint32_t b, std::uint32_t e,
                                                        std::optional<Vec2> shift) {
          visit_run(data, b, e, p, shift, flock);
        });
        continue;
      }
      const std::uint32_t* ids = other.agents.data();
      auto flock_own = [&](std::uint32_t k, Vec2 off) {
        const double d2 = off.norm2();
        const bool other_agent = ids[k] != i;
        add_flock_masked(sums, off, vel[k], d2 < r2 && other_agent);
        if (d2 < sep2 && other_agent) sums.add_separation(off, d2, 1.0);
      };
      other.grid.for_each_range_within(p, radius, [&](std::uint32_t b, std::uint32_t e,
                                                      std::optional<Vec2> shift) {
        visit_run(data, b, e, p, shift, flock_own);
      });
    }
    const Vec2 v = detail::steer(world.agents[i].velocity, sums, params, noise[i]);
    next[i].velocity = v;
    next[i].position = torus::wrap(p + v);
  }
}

}  // namespace

const Lifeform& admit_lifeform(EcosystemWorld& world, const SwarmParams& params,
                               const Embedding& prompt_embedding, std::string_view owner,
                               std::size_t n_agents) {
  if (n_agents == 0) throw InvalidParameter("a lifeform needs at least one agent");
  if (world.agents.size() + n_agents > world.config.capacity) {
    throw CapacityExceeded("admitting " + std::to_string(n_agents) + " agents to a world of " +
                           std::to_string(world.agents.size()) + " exceeds capacity " +
                           std::to_string(world.config.capacity));
  }
  const auto raw = params.to_array();
  const SwarmParams valid = validate_params(raw).params;
  const Vec2 center{world.placement_rng.uniform(), world.placement_rng.uniform()};
  return spawn(world, valid, prompt_embedding, owner, n_agents, center, world.placement_rng, {});
}

void ecosystem_step(EcosystemWorld& world) {
  const std::size_t n = world.agents.size();
  if (n > 0) {
    std::vector<Vec2> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = world.agents[i].position;
    const std::vector<SpeciesIndex> indices = species_indices(world, positions);

    std::vector<Vec2> noise(n);
    for (auto& z : noise) {
      z.x = world.noise_rng.normal();
      z.y = world.noise_rng.normal();
    }

    std::vector<AgentState> next(n);
    const std::size_t workers = std::clamp<std::size_t>(world.config.workers, 1, n);
    if (workers == 1) {
      step_range(world, indices, positions, noise, next, 0, n);
    } else {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&, b, e] { step_range(world, indices, positions, noise, next, b, e); });
      }
    }
    world.agents = std::move(next);
  }
  ++world.step_count;

  if (world.step_count % kEpochLength == 0) {
    hybridize(world);
    if (world.config.auto_meta_rules) {
      const auto traits = lifeform_traits(world);
      world.meta_rules = extract_meta_rules(traits, world.config.max_meta_rules, world.epoch());
      apply_meta_rules(world, world.meta_rules);
    }
  }
}

std::vector<std::string> hybridize(EcosystemWorld& world) {
  std::vector<std::string> spawned;
  const std::size_t count = world.lifeforms.size();
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a + 1; b < count; ++b) {
      if (world.interaction(a, b) != Interaction::kMerge) continue;
      if (world.hybridized.contains({a, b})) continue;
      const Lifeform& la = world.lifeforms[a];
      const Lifeform& lb = world.lifeforms[b];
      if (la.agent_count() == 0 || lb.agent_count() == 0) continue;
      const Vec2 ca = oracle::toroidal_centroid(agents_of(world, la));
      const Vec2 cb = oracle::toroidal_centroid(agents_of(world, lb));
      if (torus::distance(ca, cb) >= kHybridCentroidDistance) continue;
      if (world.event_rng.uniform() >= kHybridProbability) continue;

      std::size_t n = std::min(la.agent_count(), lb.agent_count()) / 2;
      n = std::min(n, world.config.capacity - world.agents.size());
      if (n == 0) continue;

      const auto pa = la.params.to_array();
      const auto pb = lb.params.to_array();
      std::array<double, SwarmParams::kDimension> blend{};
      for (std::size_t i = 0; i < blend.size(); ++i) {
        const double w = world.event_rng.uniform();
        blend[i] = w * pa[i] + (1.0 - w) * pb[i];
      }
      std::vector<double> mean(Embedding::kDimension);
      for (std::size_t i = 0; i < mean.size(); ++i) {
        mean[i] = 0.5 * (la.prompt_embedding[i] + lb.prompt_embedding[i]);
      }
      const Vec2 center = torus::wrap(ca + 0.5 * torus::delta(cb, ca));
      std::vector<std::string> parents{la.id, lb.id};
      const SwarmParams params = validate_params(blend).params;
      const Embedding embedding = Embedding::from_raw(mean);
      world.hybridized.insert({a, b});
      const Lifeform& hybrid = spawn(world, params, embedding, "ecosystem", n, center,
                                     world.event_rng, std::move(parents));
      spawned.push_back(hybrid.id);
    }
  }
  return spawned;
}

std::vector<LifeformTrait> lifeform_traits(const EcosystemWorld& world) {
  std::vector<LifeformTrait> out;
  out.reserve(world.lifeforms.size());
  for (const auto& lf : world.lifeforms) out.push_back({lf.params, lf.prompt_embedding});
  return out;
}

std::vector<MetaRule> extract_meta_rules(std::span<const LifeformTrait> history,
                                         std::size_t max_rules, std::uint64_t epoch,
                                         std::vector<std::size_t>* themes) {
  if (history.size() < 3) return {};
  std::vector<Row> rows;
  rows.reserve(history.size());
  for (const auto& t : history) {
    const auto u = normalize(t.params);
    rows.emplace_back(u.begin(), u.end());
  }
  const std::size_t k = std::min<std::size_t>(4, history.size() / 3);
  const KMeansResult clusters = kmeans(rows, k, derive_seed(epoch, {history.size()}));
  if (themes != nullptr) *themes = clusters.assignments;

  const PcaResult p = pca(rows, SwarmParams::kDimension);
  std::vector<MetaRule> rules;
  for (std::size_t c = 0; c < p.components.size() && rules.size() < max_rules; ++c) {
    const double ratio = p.explained_variance_ratios[c];
    if (ratio < kMetaRuleMinRatio) continue;
    MetaRule rule;
    std::copy(p.components[c].begin(), p.components[c].end(), rule.component.begin());
    rule.explained_variance_ratio = ratio;
    rule.strength = ratio;
    rule.created_epoch = epoch;
    rules.push_back(rule);
  }
  return rules;
}

void apply_meta_rules(EcosystemWorld& world, std::span<const MetaRule> rules) {
  const std::size_t n = world.lifeforms.size();
  if (rules.empty() || n == 0) return;
  constexpr std::size_t d = SwarmParams::kDimension;
  std::vector<std::array<double, d>> unit(n);
  std::array<double, d> mean{};
  for (std::size_t l = 0; l < n; ++l) {
    unit[l] = normalize(world.lifeforms[l].params);
    for (std::size_t i = 0; i < d; ++i) mean[i] += unit[l][i];
  }
  for (auto& m : mean) m /= static_cast<double>(n);

  for (std::size_t l = 0; l < n; ++l) {
    std::array<double, d> delta{};
    for (const auto& rule : rules) {
      double proj = 0.0;
      for (std::size_t i = 0; i < d; ++i) proj += (unit[l][i] - mean[i]) * rule.component[i];
      const double step = rule.strength * kMetaRuleRate * proj;
      for (std::size_t i = 0; i < d; ++i) delta[i] -= step * rule.component[i];
    }
    double largest = 0.0;
    for (double x : delta) largest = std::max(largest, std::abs(x));
    if (largest == 0.0) continue;
    const double scale = largest > kMaxEpochChange ? kMaxEpochChange / largest : 1.0;
    std::array<double, d> moved{};
    for (std::size_t i = 0; i < d; ++i) moved[i] = unit[l][i] + scale * delta[i];
    const auto raw = denormalize(moved);
    world.lifeforms[l].params = validate_params(raw).params;
  }
}

nlohmann::json ecosystem_state_json(const EcosystemWorld& world) {
  using nlohmann::json;
  json lifeforms = json::array();
  for (const auto& lf : world.lifeforms) {
    json params = json::object();
    const auto values = lf.params.to_array();
    for (std::size_t i = 0; i < values.size(); ++i) {
      params[std::string(kParamBounds[i].name)] = values[i];
    }
    const Rgb color = kSpeciesPalette[lf.color_index];
    lifeforms.push_back({
        {"id", lf.id},
        {"owner", lf.owner},
        {"params", params},
        {"agent_begin", lf.agent_begin},
        {"agent_end", lf.agent_end},
        {"color_index", lf.color_index},
        {"color", {color[0], color[1], color[2]}},
        {"parents", lf.parents},
        {"admitted_step", lf.admitted_step},
    });
  }
  json rules = json::array();
  for (const auto& r : world.meta_rules) {
    rules.push_back({{"component", r.component},
                     {"explained_variance_ratio", r.explained_variance_ratio},
                     {"strength", r.strength},
                     {"created_epoch", r.created_epoch}});
  }
  return {
      {"step", world.step_count},
      {"epoch", world.epoch()},
      {"capacity", world.config.capacity},
      {"agent_count", world.agents.size()},
      {"lifeforms", lifeforms},
      {"meta_rules", rules},
  };
}

ImageRGB render_snapshot(const EcosystemWorld& world, int size) {
  if (size < kMinImageSize) {
    throw ImageTooSmall("snapshot size " + std::to_string(size) + " is below " +
                        std::to_string(kMinImageSize));
  }
  ImageRGB image(size, size);
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    splat(image, world.agents[i].position,
          kSpeciesPalette[world.lifeforms[world.species[i]].color_index]);
  }
  return image;
}

}  // namespace semswarm
