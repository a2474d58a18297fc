#include <gtest/gtest.h>

#include <png.h>

#include <algorithm>
#include <numeric>
#include <string>

#include "semswarm/base64.hpp"
#include "semswarm/errors.hpp"
#include "semswarm/render.hpp"

using namespace semswarm;

namespace {

ImageRGB decode_with_libpng(const std::vector<std::uint8_t>& png) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, png.data(), png.size())) {
    ADD_FAILURE() << "libpng rejected the stream: " << img.message;
    return {};
  }
  img.format = PNG_FORMAT_RGB;
  ImageRGB out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    ADD_FAILURE() << "libpng decode failed: " << img.message;
  }
  png_image_free(&img);
  return out;
}

std::uint64_t total_brightness(const ImageRGB& img) {
  return std::accumulate(img.pixels.begin(), img.pixels.end(), std::uint64_t{0});
}

Vec2 intensity_centroid(const ImageRGB& img) {
  double sx = 0, sy = 0, w = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = img.at(x, y)[0];
      sx += v * x;
      sy += v * y;
      w += v;
    }
  }
  return {sx / w, sy / w};
}

}  // namespace

TEST(SelectFrames, Examples) {
  EXPECT_EQ(select_frames(241, 1), (std::vector<std::size_t>{240}));
  EXPECT_EQ(select_frames(241, 3), (std::vector<std::size_t>{120, 180, 240}));
  EXPECT_EQ(select_frames(1, 5), (std::vector<std::size_t>{0}));
  EXPECT_THROW(select_frames(0, 1), EmptyTrajectory);
  EXPECT_THROW(select_frames(Trajectory{}, 1), EmptyTrajectory);
}

TEST(SelectFrames, AscendingInsideLastHalf) {
  for (std::size_t n : {2u, 5u, 10u, 61u, 241u}) {
    for (std::size_t k = 1; k <= 12; ++k) {
      const auto idx = select_frames(n, k);
      ASSERT_FALSE(idx.empty());
      EXPECT_EQ(idx.back(), n - 1);
      EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
      EXPECT_GE(idx.front(), (n - 1) / 2);
    }
  }
}

TEST(Rasterize, NoAgentsIsBlack) {
  const auto img = rasterize_frame({}, 64);
  EXPECT_EQ(img.width, 64);
  EXPECT_EQ(total_brightness(img), 0u);
}

TEST(Rasterize, CentredAgentBrightestAtCentre) {
  const std::vector<AgentState> f{{{0.5, 0.5}, {}}};
  const auto img = rasterize_frame(f, 224);
  int bx = -1, by = -1, best = -1;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.at(x, y)[0] > best) {
        best = img.at(x, y)[0];
        bx = x;
        by = y;
      }
    }
  }
  EXPECT_EQ(bx, 112);
  EXPECT_EQ(by, 112);
  EXPECT_EQ(best, 255);
}

TEST(Rasterize, ZeroDecayIgnoresTrail) {
  const std::vector<AgentState> a{{{0.2, 0.3}, {}}};
  const std::vector<AgentState> b{{{0.7, 0.6}, {}}};
  const auto trail = rasterize_frame(a, 64);
  EXPECT_EQ(rasterize_frame(b, 64, &trail, 0.0), rasterize_frame(b, 64));
  const auto with = rasterize_frame(b, 64, &trail, 0.5);
  EXPECT_GT(total_brightness(with), total_brightness(rasterize_frame(b, 64)));
}

TEST(Rasterize, TooSmallThrows) {
  EXPECT_THROW(rasterize_frame({}, 31), ImageTooSmall);
  EXPECT_NO_THROW(rasterize_frame({}, 32));
}

TEST(Rasterize, TranslationMovesCentroid) {
  const auto w = init_world(SwarmParams{}, 40, 17);
  std::vector<AgentState> f, g;
  Rng rng(2);
  for (int i = 0; i < 40; ++i) {
    // Keep the cloud clear of the seam so the pixel centroid is meaningful.
    const Vec2 p{rng.uniform(0.2, 0.45), rng.uniform(0.2, 0.45)};
    f.push_back({p, {}});
    g.push_back({p + Vec2{0.25, 0.25}, {}});
  }
  const auto c0 = intensity_centroid(rasterize_frame(f, 224));
  const auto c1 = intensity_centroid(rasterize_frame(g, 224));
  EXPECT_NEAR(c1.x - c0.x, 56.0, 1.0);
  EXPECT_NEAR(c1.y - c0.y, 56.0, 1.0);
}

TEST(Rasterize, MoreAgentsNeverDarker) {
  const auto w = init_world(SwarmParams{}, 200, 3);
  std::uint64_t prev = 0;
  for (std::size_t n = 0; n <= w.agents.size(); n += 20) {
    const auto b = total_brightness(rasterize_frame(std::span(w.agents).first(n), 64));
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(RenderWithTrail, ZeroTrailFramesEqualsPlainRaster) {
  const auto t = run_simulation(SwarmParams{}, 30, 10, 4);
  EXPECT_EQ(render_with_trail(t, 10, 64, 0.85, 0), rasterize_frame(t.frames[10], 64));
  EXPECT_THROW(render_with_trail(t, 11, 64), IndexError);
}

TEST(Png, SignatureAndChunks) {
  const auto png = encode_png(ImageRGB(32, 32));
  const std::vector<std::uint8_t> sig{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  ASSERT_GE(png.size(), 8u);
  EXPECT_TRUE(std::equal(sig.begin(), sig.end(), png.begin()));
  EXPECT_EQ(std::string(png.begin() + 12, png.begin() + 16), "IHDR");
  EXPECT_EQ(std::string(png.end() - 8, png.end() - 4), "IEND");
}

TEST(Png, RoundTripThroughLibpng) {
  ImageRGB img(16, 16);
  Rng rng(99);
  for (auto& b : img.pixels) b = static_cast<std::uint8_t>(rng.below(256));
  EXPECT_EQ(decode_with_libpng(encode_png(img)), img);
}

TEST(Png, SingleRedPixel) {
  ImageRGB img(1, 1);
  img.at(0, 0)[0] = 255;
  const auto back = decode_with_libpng(encode_png(img));
  ASSERT_EQ(back.width, 1);
  EXPECT_EQ(back.at(0, 0)[0], 255);
  EXPECT_EQ(back.at(0, 0)[1], 0);
  EXPECT_EQ(back.at(0, 0)[2], 0);
}

TEST(ImageDigest, SensitiveToPixelsAndShape) {
  ImageRGB a(32, 32), b(32, 32);
  EXPECT_EQ(image_digest(a), image_digest(b));
  b.at(3, 4)[1] = 1;
  EXPECT_NE(image_digest(a), image_digest(b));
  EXPECT_NE(image_digest(ImageRGB(16, 64)), image_digest(ImageRGB(64, 16)));
}

TEST(Base64, KnownVectors) {
  auto enc = [](std::string_view s) {
    return base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foo"), "Zm9v");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");
  const auto dec = base64_decode("Zm9vYmFy");
  ASSERT_TRUE(dec);
  EXPECT_EQ(std::string(dec->begin(), dec->end()), "foobar");
}

TEST(Base64, RoundTripRandomBytes) {
  Rng rng(1);
  for (std::size_t n = 0; n < 70; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
    EXPECT_EQ(base64_decode(base64_encode(bytes)), bytes);
  }
}

TEST(Base64, MalformedIsRejected) {
  EXPECT_FALSE(base64_decode("Zm9"));
  EXPECT_FALSE(base64_decode("Zm9v!mFy"));
  EXPECT_FALSE(base64_decode("Z==="));
  EXPECT_FALSE(base64_decode("Zg=a"));
}
