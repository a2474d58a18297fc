#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semswarm/render.hpp"
#include "semswarm/swarm.hpp"

namespace semswarm {

/// Unit-norm 512-d semantic vector shared by images and text.
class Embedding {
 public:
  static constexpr std::size_t kDimension = 512;

  /// Validates the dimension and L2-normalizes. Throws DimensionError on a
  /// wrong length and InvalidParameter on a zero or non-finite vector.
  static Embedding from_raw(std::span<const double> raw);

  /// Unit vector along axis i.
  static Embedding basis(std::size_t i);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  Embedding operator-() const;

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  Embedding() = default;
  std::vector<double> values_;
};

struct SemanticScore {
  double loss = 1.0;        // 1 - similarity, in [0, 2]
  double similarity = 0.0;  // [-1, 1]
};

/// Dot product of two unit vectors, clipped to [-1, 1].
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double cosine_similarity(const Embedding& a, const Embedding& b);

/// Similarity of the normalized mean frame embedding to the prompt. A zero mean
/// (frames cancelling exactly) scores similarity 0.
SemanticScore semantic_loss(std::span<const Embedding> frame_embeddings,
                            const Embedding& prompt_embedding);

/// A frame as seen by an embedding provider. The oracle reads agent state; a
/// model-backed provider reads the rendered image.
struct FrameView {
  std::span<const AgentState> agents;
  double max_speed = 0.0;
  const ImageRGB* image = nullptr;
};

/// Source of text and image embeddings. Implementations return raw vectors;
/// callers go through embed_text/embed_frame to get validated embeddings.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::vector<double> text(std::string_view prompt) = 0;
  virtual std::vector<double> image(const FrameView& frame) = 0;
  virtual bool needs_rendered_images() const = 0;
  virtual std::string model_id() const = 0;
};

Embedding embed_text(EmbeddingProvider& provider, std::string_view prompt);
Embedding embed_frame(EmbeddingProvider& provider, const FrameView& frame);

/// Deterministic, model-free embedding used in tests and headless runs.
///
/// Images map to six behavior statistics in dimensions 0-5, a bias of 1 in
/// dimension 6, zeros elsewhere. Text maps keywords to target statistic rows in
/// the same basis, so text and image embeddings are cosine-comparable.
namespace oracle {

inline constexpr std::string_view kVersion = "oracle/v1";

enum Statistic : std::size_t {
  kNearestNeighbor = 0,
  kPolarization = 1,
  kAngularMomentum = 2,
  kOccupancyEntropy = 3,
  kSpeed = 4,
  kRadialSpread = 5,
  kBias = 6,
};

inline constexpr std::size_t kStatisticCount = 6;
inline constexpr std::size_t kBasisDimension = 7;

/// Each raw statistic s is mapped to clamp(scale * s + offset, -1, 1).
struct AffineSquash {
  double scale;
  double offset;
  double operator()(double s) const;
};

inline constexpr std::array<AffineSquash, kStatisticCount> kSquash{{
    {2.0 / 0.05, -1.0},  // mean nearest-neighbor distance over [0, 0.05]
    {2.0, -1.0},         // polarization over [0, 1]
    {2.0, -1.0},         // |normalized angular momentum| over [0, 1]
    {2.0, -1.0},         // occupancy entropy / ln(64) over [0, 1]
    {2.0, -1.0},         // mean speed / max_speed over [0, 1]
    {2.0 / 0.5, -1.0},   // RMS radius about centroid over [0, 0.5]
}};

inline constexpr int kOccupancyGrid = 8;

struct KeywordRow {
  std::string_view keyword;
  std::array<double, kBasisDimension> target;
};

inline constexpr std::array<KeywordRow, 6> kKeywordTable{{
    {"cluster", {-1.0, 0.0, 0.0, -0.5, 0.0, -1.0, 1.0}},
    {"scatter", {1.0, -0.5, 0.0, 1.0, 0.0, 1.0, 1.0}},
    {"flow", {0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 1.0}},
    {"spin", {0.0, -0.5, 1.0, 0.0, 0.5, 0.0, 1.0}},
    {"still", {0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0}},
    {"fast", {0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0}},
}};

/// Unmatched prompts hash into dimensions [kHashBegin, kHashEnd).
inline constexpr std::size_t kHashBegin = 7;
inline constexpr std::size_t kHashEnd = 71;

/// Raw (unsquashed) statistics of a frame, in Statistic order.
std::array<double, kStatisticCount> frame_statistics(std::span<const AgentState> agents,
                                                     double max_speed);

/// Circular-mean centroid on the unit torus.
Vec2 toroidal_centroid(std::span<const AgentState> agents);

Embedding embed_image(std::span<const AgentState> agents, double max_speed);
Embedding embed_text(std::string_view prompt);

/// Keywords from kKeywordTable matched by the prompt, in table order.
std::vector<std::string_view> matched_keywords(std::string_view prompt);

}  // namespace oracle

class OracleEmbedder final : public EmbeddingProvider {
 public:
  std::vector<double> text(std::string_view prompt) override;
  std::vector<double> image(const FrameView& frame) override;
  bool needs_rendered_images() const override { return false; }
  std::string model_id() const override { return std::string(oracle::kVersion); }
};

}  // namespace semswarm
