#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "../support.hpp"
#include "lowlight/color.hpp"
#include "lowlight/image.hpp"
#include "lowlight/image_io.hpp"
#include "lowlight/patches.hpp"

using namespace lowlight;
using testing_support::random_image;
using testing_support::rgb_image;
using testing_support::TempDir;

TEST(Image, ShapeAndStorage) {
  Image img(5, 4, 3, 0.25f);
  EXPECT_EQ(img.size(), 60u);
  EXPECT_EQ(img.plane_size(), 20u);
  img.at(2, 3, 4) = 0.75f;
  EXPECT_EQ(img.plane(2)[3 * 5 + 4], 0.75f);
  EXPECT_THROW(Image(-1, 2, 3), InvalidInput);
}

TEST(Image, CropAndChannels) {
  auto img = random_image(9, 7, 3, 1);
  auto c = crop(img, 2, 1, 4, 3);
  EXPECT_EQ(c.width(), 4);
  EXPECT_EQ(c.at(1, 2, 3), img.at(1, 3, 5));
  EXPECT_THROW(crop(img, 6, 0, 4, 3), InvalidInput);
  auto g = extract_channel(img, 1);
  EXPECT_EQ(g.channels(), 1);
  Image z(9, 7, 3);
  insert_channel(z, 1, g);
  EXPECT_EQ(z.at(1, 4, 4), img.at(1, 4, 4));
}

TEST(Image, Rotate90FourTimesIsIdentity) {
  auto img = random_image(6, 4, 3, 2);
  auto r = rotate90(img);
  EXPECT_EQ(r.width(), 4);
  EXPECT_EQ(r.height(), 6);
  EXPECT_EQ(rotate90(rotate90(rotate90(r))), img);
}

TEST(Color, YcrcbReferencePoints) {
  auto w = rgb_to_ycrcb_px(1, 1, 1);
  EXPECT_NEAR(w[0], 1.0, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
  EXPECT_NEAR(w[2], 0.5, 1e-12);
  auto k = rgb_to_ycrcb_px(0, 0, 0);
  EXPECT_NEAR(k[0], 0.0, 1e-12);
  EXPECT_NEAR(k[1], 0.5, 1e-12);
  EXPECT_NEAR(k[2], 0.5, 1e-12);
  // hand computation: Y = 0.299 R + 0.587 G + 0.114 B
  EXPECT_NEAR(rgb_to_ycrcb_px(1, 0, 0)[0], 0.299, 1e-12);
  EXPECT_NEAR(rgb_to_ycrcb_px(0.2, 0.4, 0.6)[0], 0.299 * 0.2 + 0.587 * 0.4 + 0.114 * 0.6, 1e-12);
}

TEST(Color, LabReferencePoints) {
  auto g = rgb_to_lab_px(0.5, 0.5, 0.5);
  EXPECT_NEAR(g[1], 0.5, 1e-9);
  EXPECT_NEAR(g[2], 0.5, 1e-9);
  EXPECT_NEAR(rgb_to_lab_px(1, 1, 1)[0], 1.0, 1e-9);
  EXPECT_NEAR(rgb_to_lab_px(0, 0, 0)[0], 0.0, 1e-9);
  // sRGB red: L* 53.24, a* 80.09, b* 67.20 (standard published values)
  auto r = rgb_to_lab_px(1, 0, 0);
  EXPECT_NEAR(r[0] * 100, 53.24, 0.05);
  EXPECT_NEAR((r[1] - 0.5) * 255, 80.09, 0.1);
  EXPECT_NEAR((r[2] - 0.5) * 255, 67.20, 0.1);
}

TEST(Color, HsvReferencePoints) {
  auto r = rgb_to_hsv_px(1, 0, 0);
  EXPECT_NEAR(r[0], 0.0, 1e-12);
  EXPECT_NEAR(r[1], 1.0, 1e-12);
  EXPECT_NEAR(r[2], 1.0, 1e-12);
  auto g = rgb_to_hsv_px(0.3, 0.3, 0.3);
  EXPECT_NEAR(g[1], 0.0, 1e-12);
  EXPECT_NEAR(g[2], 0.3, 1e-12);
  EXPECT_NEAR(rgb_to_hsv_px(0, 1, 0)[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv_px(0, 0, 1)[0], 2.0 / 3.0, 1e-12);
}

TEST(Color, RoundTripsOnRandomPixels) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  double e_y = 0, e_lab = 0, e_hsv = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r = u(rng), g = u(rng), b = u(rng);
    auto y = rgb_to_ycrcb_px(r, g, b);
    auto yb = ycrcb_to_rgb_px(y[0], y[1], y[2]);
    auto l = rgb_to_lab_px(r, g, b);
    auto lb = lab_to_rgb_px(l[0], l[1], l[2]);
    auto h = rgb_to_hsv_px(r, g, b);
    auto hb = hsv_to_rgb_px(h[0], h[1], h[2]);
    for (int c = 0; c < 3; ++c) {
      const double orig = c == 0 ? r : c == 1 ? g : b;
      e_y = std::max(e_y, std::abs(yb[c] - orig));
      e_lab = std::max(e_lab, std::abs(lb[c] - orig));
      if (h[1] > 0) e_hsv = std::max(e_hsv, std::abs(hb[c] - orig));
    }
  }
  EXPECT_LE(e_y, 1e-3);
  EXPECT_LE(e_lab, 1e-3);
  EXPECT_LE(e_hsv, 1e-6);
}

TEST(Color, ImageLevelWrappers) {
  auto img = random_image(8, 8, 3, 3);
  auto back = from_ycrcb(to_ycrcb(img));
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.storage()[i], img.storage()[i], 1e-5);
  EXPECT_THROW(to_lab(Image(4, 4, 1)), InvalidInput);
  EXPECT_THROW(to_hsv(Image(4, 4, 2)), InvalidInput);
}

// ---- patches ----

TEST(Patches, SinglePatch) {
  auto g = plan_patches(256, 256, 256, 64);
  ASSERT_EQ(g.origins.size(), 1u);
  EXPECT_EQ(g.origins[0], (PatchOrigin{0, 0}));
}

TEST(Patches, ClampedLastOrigin) {
  EXPECT_EQ(axis_origins(448, 256, 64), (std::vector<int>{0, 192}));
  EXPECT_EQ(axis_origins(512, 256, 64), (std::vector<int>{0, 192, 256}));
  auto g = plan_patches(448, 256, 256, 64);
  EXPECT_EQ(g.origins.size(), 2u);
}

TEST(Patches, DegenerateSmallImage) {
  auto g = plan_patches(100, 60, 256, 64);
  EXPECT_EQ(g.patch_size, 60);
  EXPECT_LT(g.overlap, g.patch_size);
  for (const auto& o : g.origins) {
    EXPECT_LE(o.x + g.patch_size, 100);
    EXPECT_EQ(o.y, 0);
  }
  EXPECT_THROW(plan_patches(10, 10, 8, 8), InvalidInput);
  EXPECT_THROW(plan_patches(0, 10, 8, 2), InvalidInput);
}

TEST(Patches, BruteForceCoverageOnRandomGrids) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int patch = std::uniform_int_distribution<int>(2, 64)(rng);
    const int overlap = std::uniform_int_distribution<int>(0, patch - 1)(rng);
    const int w = std::uniform_int_distribution<int>(patch, 300)(rng);
    const int h = std::uniform_int_distribution<int>(patch, 300)(rng);
    auto g = plan_patches(w, h, patch, overlap);
    std::vector<int> hits(static_cast<std::size_t>(w) * h, 0);
    for (const auto& o : g.origins) {
      ASSERT_GE(o.x, 0);
      ASSERT_GE(o.y, 0);
      ASSERT_LE(o.x + patch, w);
      ASSERT_LE(o.y + patch, h);
      for (int y = o.y; y < o.y + patch; ++y)
        for (int x = o.x; x < o.x + patch; ++x) ++hits[static_cast<std::size_t>(y) * w + x];
    }
    for (int v : hits) ASSERT_GT(v, 0) << "w=" << w << " h=" << h << " patch=" << patch << " overlap=" << overlap;
  }
}

TEST(Patches, HannWindowShape) {
  auto w = hann_window(5);
  EXPECT_NEAR(w[0], 0.0, 1e-12);
  EXPECT_NEAR(w[2], 1.0, 1e-12);
  EXPECT_NEAR(w[1], w[3], 1e-12);
  auto w2 = hann_weights_2d(8);
  for (double v : w2) EXPECT_GE(v, kHannFloor);
}

TEST(Patches, BlendConstantIsExact) {
  for (auto [w, h] : {std::pair{512, 512}, std::pair{448, 300}, std::pair{700, 257}}) {
    auto g = plan_patches(w, h, 256, 64);
    std::vector<std::pair<PatchOrigin, Image>> patches;
    for (const auto& o : g.origins) patches.emplace_back(o, Image(g.patch_size, g.patch_size, 3, 1.0f));
    auto out = blend_patches(patches, w, h);
    for (float v : out.storage()) ASSERT_NEAR(v, 1.0f, 1e-6);
  }
}

TEST(Patches, BlendSinglePatchIsIdentity) {
  auto img = random_image(32, 32, 3, 4);
  auto out = blend_patches<float>({{PatchOrigin{0, 0}, img}}, 32, 32);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.storage()[i], img.storage()[i], 1e-6);
}

TEST(Patches, TwoPatchRampIsMonotone) {
  // 0-valued patch at x=0, 1-valued patch at x=192 on a 448-wide strip
  std::vector<std::pair<PatchOrigin, Image>> patches{{{0, 0}, Image(256, 256, 1, 0.0f)},
                                                     {{192, 0}, Image(256, 256, 1, 1.0f)}};
  auto out = blend_patches(patches, 448, 256);
  const int y = 128;
  EXPECT_NEAR(out.at(0, y, 100), 0.0f, 1e-6);
  EXPECT_NEAR(out.at(0, y, 300), 1.0f, 1e-6);
  for (int x = 192; x < 256; ++x) EXPECT_LE(out.at(0, y, x), out.at(0, y, x + 1) + 1e-7f);
  EXPECT_GT(out.at(0, y, 240), 0.0f);
  EXPECT_LT(out.at(0, y, 200), 1.0f);
}

TEST(Patches, UncoveredPixelIsAnError) {
  BlendAccumulator acc(10, 10, 1, 4);
  acc.add({0, 0}, Image(4, 4, 1, 0.5f));
  EXPECT_THROW(acc.finish<float>(), std::logic_error);
}

// ---- I/O ----

TEST(ImageIo, PngRoundTripWithinQuantization) {
  TempDir dir;
  auto img = random_image(37, 23, 3, 7);
  save_image(dir / "a.png", img);
  auto back = load_image(dir / "a.png");
  ASSERT_TRUE(back.same_shape(img));
  double worst = 0;
  for (std::size_t i = 0; i < img.size(); ++i)
    worst = std::max(worst, static_cast<double>(std::abs(back.storage()[i] - img.storage()[i])));
  EXPECT_LE(worst, 1.0 / 510 + 1e-7);
}

TEST(ImageIo, JpegLoadsAsThreeChannels) {
  TempDir dir;
  save_image(dir / "a.jpg", rgb_image(16, 16, 0.2, 0.5, 0.8));
  auto back = load_image(dir / "a.jpg");
  EXPECT_EQ(back.channels(), 3);
  EXPECT_EQ(back.width(), 16);
  EXPECT_NEAR(back.at(1, 8, 8), 0.5, 0.03);
}

TEST(ImageIo, TruncatedFilesAreErrors) {
  TempDir dir;
  auto img = random_image(64, 64, 3, 8);
  save_image(dir / "a.png", img);
  save_image(dir / "a.jpg", img);
  for (const char* name : {"a.png", "a.jpg"}) {
    std::ifstream in(dir / name, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream out(dir / (std::string("cut_") + name), std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    out.close();
    EXPECT_THROW(load_image(dir / (std::string("cut_") + name)), IoError) << name;
  }
}

TEST(ImageIo, ErrorsCarryThePath) {
  TempDir dir;
  std::ofstream(dir / "x.png") << "not an image";
  try {
    load_image(dir / "x.png");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("x.png"), std::string::npos);
  }
  EXPECT_THROW(load_image(dir / "missing.png"), IoError);
  EXPECT_THROW(save_image(dir / "a.bmp", Image(2, 2, 3)), IoError);
}

TEST(ImageIo, ListImagesIsSortedAndFiltered) {
  TempDir dir;
  save_image(dir / "b.png", Image(2, 2, 3));
  save_image(dir / "a.jpg", Image(2, 2, 3));
  std::ofstream(dir / "notes.txt") << "x";
  auto files = list_images(dir.path());
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.jpg");
  EXPECT_EQ(files[1].filename(), "b.png");
}
