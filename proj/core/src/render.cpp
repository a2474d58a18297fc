#include "semswarm/render.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "semswarm/errors.hpp"

namespace semswarm {

std::vector<std::size_t> select_frames(std::size_t frame_count, std::size_t k) {
  if (frame_count == 0) throw EmptyTrajectory("trajectory has no frames");
  if (k == 0) throw InvalidParameter("frame count k must be positive");
  const std::size_t last = frame_count - 1;
  const std::size_t start = last / 2;
  const std::size_t window = last - start + 1;
  std::vector<std::size_t> out;
  if (k >= window) {
    for (std::size_t i = start; i <= last; ++i) out.push_back(i);
    return out;
  }
  if (k == 1) return {last};
  const double span = static_cast<double>(last - start);
  for (std::size_t j = 0; j < k; ++j) {
    const double offset = std::round(span * static_cast<double>(j) / static_cast<double>(k - 1));
    out.push_back(start + static_cast<std::size_t>(offset));
  }
  return out;
}

std::vector<std::size_t> select_frames(const Trajectory& trajectory, std::size_t k) {
  return select_frames(trajectory.frames.size(), k);
}

namespace {

// exp(-(dx^2 + dy^2) / 2) for a unit-sigma kernel on the 3x3 stencil.
constexpr std::array<double, 3> kRingWeight{1.0, 0.6065306597126334, 0.36787944117144233};

std::uint8_t saturating_add(std::uint8_t a, int b) {
  const int s = a + b;
  return static_cast<std::uint8_t>(s > 255 ? 255 : s);
}

}  // namespace

void splat(ImageRGB& image, Vec2 position, Rgb color) {
  const int w = image.width;
  const int h = image.height;
  int cx = static_cast<int>(position.x * w);
  int cy = static_cast<int>(position.y * h);
  cx = std::clamp(cx, 0, w - 1);
  cy = std::clamp(cy, 0, h - 1);
  for (int dy = -1; dy <= 1; ++dy) {
    const int y = (cy + dy + h) % h;
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = (cx + dx + w) % w;
      const double weight = kRingWeight[static_cast<std::size_t>(std::abs(dx) + std::abs(dy))];
      std::uint8_t* px = image.at(x, y);
      for (int c = 0; c < 3; ++c) {
        px[c] = saturating_add(px[c], static_cast<int>(std::lround(weight * color[c])));
      }
    }
  }
}

ImageRGB rasterize_frame(std::span<const AgentState> frame, int size, const ImageRGB* trail,
                         double decay, Rgb color) {
  if (size < kMinImageSize) {
    throw ImageTooSmall("image size " + std::to_string(size) + " is below " +
                        std::to_string(kMinImageSize));
  }
  ImageRGB img(size, size);
  for (const auto& a : frame) splat(img, a.position, color);
  if (trail != nullptr && decay > 0.0) {
    if (trail->width != size || trail->height != size) {
      throw InvalidParameter("trail image size does not match");
    }
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      const auto faded = static_cast<std::uint8_t>(
          std::min(255.0, std::floor(decay * trail->pixels[i] + 0.5)));
      img.pixels[i] = std::max(img.pixels[i], faded);
    }
  }
  return img;
}

ImageRGB render_with_trail(const Trajectory& trajectory, std::size_t index, int size,
                           double decay, std::size_t trail_frames) {
  if (trajectory.frames.empty()) throw EmptyTrajectory("trajectory has no frames");
  if (index >= trajectory.frames.size()) throw IndexError("frame index out of range");
  const std::size_t first = index >= trail_frames ? index - trail_frames : 0;
  ImageRGB img = rasterize_frame(trajectory.frames[first], size);
  for (std::size_t f = first + 1; f <= index; ++f) {
    img = rasterize_frame(trajectory.frames[f], size, &img, decay);
  }
  return img;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_chunk(std::vector<std::uint8_t>& out, std::string_view type,
               std::span<const std::uint8_t> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type.begin(), type.end());
  out.insert(out.end(), data.begin(), data.end());
  const uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(out.size() - type_pos));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const ImageRGB& image) {
  static constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A,
                                                          0x1A, 0x0A};
  std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());

  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // truecolor
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  put_chunk(out, "IHDR", ihdr);

  // Filter type 0 on every scanline.
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * image.height);
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);
    const auto* row = image.pixels.data() + y * stride;
    raw.insert(raw.end(), row, row + stride);
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK) {
    throw Error("zlib compression failed");
  }
  packed.resize(packed_size);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

std::uint64_t image_digest(const ImageRGB& image) {
  std::uint64_t h = fnv1a64(std::to_string(image.width) + "x" + std::to_string(image.height));
  return fnv1a64(std::string_view(reinterpret_cast<const char*>(image.pixels.data()),
                                  image.pixels.size()),
                 h);
}

}  // namespace semswarm
