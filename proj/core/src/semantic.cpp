#include "semswarm/semantic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "semswarm/errors.hpp"

namespace semswarm {

Embedding Embedding::from_raw(std::span<const double> raw) {
  if (raw.size() != kDimension) {
    throw DimensionError("embedding must have 512 dimensions, got " +
                         std::to_string(raw.size()));
  }
  double n2 = 0.0;
  for (double v : raw) {
    if (!std::isfinite(v)) throw InvalidParameter("embedding has a non-finite entry");
    n2 += v * v;
  }
  if (!(n2 > 0.0)) throw InvalidParameter("embedding has zero norm");
  const double inv = 1.0 / std::sqrt(n2);
  Embedding e;
  e.values_.resize(kDimension);
  for (std::size_t i = 0; i < kDimension; ++i) e.values_[i] = raw[i] * inv;
  return e;
}

Embedding Embedding::basis(std::size_t i) {
  if (i >= kDimension) throw IndexError("basis index out of range");
  Embedding e;
  e.values_.assign(kDimension, 0.0);
  e.values_[i] = 1.0;
  return e;
}

Embedding Embedding::operator-() const {
  Embedding e;
  e.values_.resize(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) e.values_[i] = -values_[i];
  return e;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw DimensionError("cannot compare embeddings of dimension " + std::to_string(a.size()) +
                         " and " + std::to_string(b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return std::clamp(dot, -1.0, 1.0);
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
  return cosine_similarity(a.values(), b.values());
}

SemanticScore semantic_loss(std::span<const Embedding> frame_embeddings,
                            const Embedding& prompt_embedding) {
  if (frame_embeddings.empty()) throw EmptyInput("no frame embeddings to score");
  std::vector<double> sum(Embedding::kDimension, 0.0);
  for (const auto& e : frame_embeddings) {
    const auto v = e.values();
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  double n2 = 0.0;
  for (double v : sum) n2 += v * v;
  SemanticScore score;
  if (n2 > 0.0) {
    const double inv = 1.0 / std::sqrt(n2);
    for (double& v : sum) v *= inv;
    score.similarity = cosine_similarity(sum, prompt_embedding.values());
  }
  score.loss = 1.0 - score.similarity;
  return score;
}

Embedding embed_text(EmbeddingProvider& provider, std::string_view prompt) {
  if (prompt.empty()) throw EmptyPrompt("prompt is empty");
  const auto raw = provider.text(prompt);
  return Embedding::from_raw(raw);
}

Embedding embed_frame(EmbeddingProvider& provider, const FrameView& frame) {
  const auto raw = provider.image(frame);
  return Embedding::from_raw(raw);
}

namespace oracle {

double AffineSquash::operator()(double s) const {
  return std::clamp(scale * s + offset, -1.0, 1.0);
}

Vec2 toroidal_centroid(std::span<const AgentState> agents) {
  constexpr double kTau = 2.0 * std::numbers::pi;
  double cx = 0.0, sx = 0.0, cy = 0.0, sy = 0.0;
  for (const auto& a : agents) {
    cx += std::cos(kTau * a.position.x);
    sx += std::sin(kTau * a.position.x);
    cy += std::cos(kTau * a.position.y);
    sy += std::sin(kTau * a.position.y);
  }
  return torus::wrap(Vec2{std::atan2(sx, cx) / kTau, std::atan2(sy, cy) / kTau});
}

std::array<double, kStatisticCount> frame_statistics(std::span<const AgentState> agents,
                                                     double max_speed) {
  const std::size_t n = agents.size();
  if (n < 2) throw InsufficientAgents("oracle statistics need at least 2 agents");
  const double inv_n = 1.0 / static_cast<double>(n);
  std::array<double, kStatisticCount> s{};

  s[kNearestNeighbor] = mean_nearest_neighbor_distance(agents);

  Vec2 heading_sum;
  double speed_sum = 0.0;
  for (const auto& a : agents) {
    const double speed = a.velocity.norm();
    speed_sum += speed;
    if (speed > 0.0) heading_sum += (1.0 / speed) * a.velocity;
  }
  s[kPolarization] = (inv_n * heading_sum).norm();
  s[kSpeed] = max_speed > 0.0 ? speed_sum * inv_n / max_speed : 0.0;

  const Vec2 c = toroidal_centroid(agents);
  double angular = 0.0;
  double radius2_sum = 0.0;
  std::array<std::size_t, kOccupancyGrid * kOccupancyGrid> counts{};
  for (const auto& a : agents) {
    const Vec2 r = torus::delta(a.position, c);
    const double rn = r.norm();
    const double vn = a.velocity.norm();
    if (rn > 0.0 && vn > 0.0) angular += (r.x * a.velocity.y - r.y * a.velocity.x) / (rn * vn);
    radius2_sum += r.norm2();
    // Grid anchored at the centroid keeps occupancy translation-invariant.
    const Vec2 local = torus::wrap(Vec2{r.x + 0.5, r.y + 0.5});
    const int gx = std::min(kOccupancyGrid - 1, static_cast<int>(local.x * kOccupancyGrid));
    const int gy = std::min(kOccupancyGrid - 1, static_cast<int>(local.y * kOccupancyGrid));
    ++counts[static_cast<std::size_t>(gy * kOccupancyGrid + gx)];
  }
  s[kAngularMomentum] = std::abs(angular * inv_n);
  s[kRadialSpread] = std::sqrt(radius2_sum * inv_n);

  double entropy = 0.0;
  for (std::size_t count : counts) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) * inv_n;
    entropy -= p * std::log(p);
  }
  s[kOccupancyEntropy] = entropy / std::log(static_cast<double>(counts.size()));
  return s;
}

Embedding embed_image(std::span<const AgentState> agents, double max_speed) {
  const auto stats = frame_statistics(agents, max_speed);
  std::vector<double> raw(Embedding::kDimension, 0.0);
  for (std::size_t i = 0; i < kStatisticCount; ++i) raw[i] = kSquash[i](stats[i]);
  raw[kBias] = 1.0;
  return Embedding::from_raw(raw);
}

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words_of(const std::string& lower) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : lower) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

std::vector<std::string_view> matched_keywords(std::string_view prompt) {
  const auto words = words_of(lowercase(prompt));
  std::vector<std::string_view> out;
  for (const auto& row : kKeywordTable) {
    // Prefix match so inflections ("clusters", "spinning") count.
    const bool hit = std::any_of(words.begin(), words.end(), [&](const std::string& w) {
      return w.starts_with(row.keyword);
    });
    if (hit) out.push_back(row.keyword);
  }
  return out;
}

Embedding embed_text(std::string_view prompt) {
  if (prompt.empty()) throw EmptyPrompt("prompt is empty");
  std::vector<double> raw(Embedding::kDimension, 0.0);
  const auto matches = matched_keywords(prompt);
  if (!matches.empty()) {
    for (const auto& row : kKeywordTable) {
      if (std::find(matches.begin(), matches.end(), row.keyword) == matches.end()) continue;
      for (std::size_t i = 0; i < kBasisDimension; ++i) raw[i] += row.target[i];
    }
    const double inv = 1.0 / static_cast<double>(matches.size());
    for (std::size_t i = 0; i < kBasisDimension; ++i) raw[i] *= inv;
  } else {
    const std::uint64_t h = fnv1a64(lowercase(prompt));
    for (std::size_t i = kHashBegin; i < kHashEnd; ++i) {
      const double u = static_cast<double>(mix64(h + i) >> 11) * 0x1.0p-53;
      raw[i] = 2.0 * u - 1.0;
    }
  }
  return Embedding::from_raw(raw);
}

}  // namespace oracle

std::vector<double> OracleEmbedder::text(std::string_view prompt) {
  const auto e = oracle::embed_text(prompt);
  return {e.values().begin(), e.values().end()};
}

std::vector<double> OracleEmbedder::image(const FrameView& frame) {
  const auto e = oracle::embed_image(frame.agents, frame.max_speed);
  return {e.values().begin(), e.values().end()};
}

}  // namespace semswarm
