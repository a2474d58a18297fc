#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "semswarm/swarm.hpp"

namespace semswarm {

/// Row-major 8-bit RGB raster.
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3

  ImageRGB() = default;
  ImageRGB(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return &pixels[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const {
    return &pixels[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  friend bool operator==(const ImageRGB&, const ImageRGB&) = default;
};

inline constexpr int kDefaultImageSize = 224;
inline constexpr int kMinImageSize = 32;
inline constexpr double kDefaultTrailDecay = 0.85;
inline constexpr std::size_t kDefaultTrailFrames = 8;

using Rgb = std::array<std::uint8_t, 3>;

/// k frame indices evenly spaced over the last half of a trajectory with
/// frame_count frames, ending at the final frame.
std::vector<std::size_t> select_frames(std::size_t frame_count, std::size_t k);
std::vector<std::size_t> select_frames(const Trajectory& trajectory, std::size_t k);

/// Splats each agent as a 3x3 gaussian-weighted dot on a black background.
/// With a trail, each channel is max(decay * trail, fresh).
ImageRGB rasterize_frame(std::span<const AgentState> frame, int size,
                         const ImageRGB* trail = nullptr, double decay = kDefaultTrailDecay,
                         Rgb color = {255, 255, 255});

/// Renders frame `index` with a trail accumulated over the preceding
/// `trail_frames` frames of the trajectory.
ImageRGB render_with_trail(const Trajectory& trajectory, std::size_t index,
                           int size = kDefaultImageSize, double decay = kDefaultTrailDecay,
                           std::size_t trail_frames = kDefaultTrailFrames);

/// Adds one splat into an existing image (saturating), used for multi-species
/// snapshots.
void splat(ImageRGB& image, Vec2 position, Rgb color);

std::vector<std::uint8_t> encode_png(const ImageRGB& image);

/// FNV-1a over dimensions and pixel bytes.
std::uint64_t image_digest(const ImageRGB& image);

}  // namespace semswarm
