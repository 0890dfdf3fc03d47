#include <gtest/gtest.h>

#include "../oracles/finite_diff.hpp"
#include "../support.hpp"
#include "lowlight/losses.hpp"

using namespace lowlight;
using testing_support::random_image;
using testing_support::rgb_image;

namespace {

using DImage = BasicImage<double>;

DImage from_vec(const std::vector<double>& v, int w, int h, int c) {
  DImage img(w, h, c);
  std::copy(v.begin(), v.end(), img.storage().begin());
  return img;
}

LintParams all_terms() {
  LintParams p;
  p.patch = 8;
  return p;
}

}  // namespace

TEST(Luminance, ChannelMeanExamples) {
  EXPECT_NEAR(luminance(rgb_image<double>(1, 1, 1, 1, 1)).at(0, 0, 0), 1.0, 1e-15);
  EXPECT_NEAR(luminance(rgb_image<double>(1, 1, 1, 0, 0)).at(0, 0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(luminance(rgb_image<double>(1, 1, 0.2, 0.4, 0.6)).at(0, 0, 0), 0.4, 1e-15);
  EXPECT_NEAR(luminance(rgb_image<double>(1, 1, 1, 0, 0), LuminanceMode::Bt601).at(0, 0, 0), 0.299, 1e-15);
}

TEST(Lint, UniformInsideBandIsZero) {
  LintParams p;
  p.e_global = 0.55;
  auto v = l_int(rgb_image<double>(40, 40, 0.55, 0.55, 0.55), p);
  EXPECT_EQ(v.value, 0.0);
  for (double g : v.grad.storage()) EXPECT_EQ(g, 0.0);
}

TEST(Lint, SinglePatchUnderAndOver) {
  LintParams p;
  p.patch = 16;
  p.gamma_global = 0;
  auto dark = l_int(rgb_image<double>(16, 16, 0.3, 0.3, 0.3), p);
  EXPECT_NEAR(dark.value, 0.04, 1e-15);
  EXPECT_NEAR(dark.dark, 0.04, 1e-15);
  EXPECT_EQ(dark.bright, 0.0);
  auto bright = l_int(rgb_image<double>(16, 16, 0.8, 0.8, 0.8), p);
  EXPECT_NEAR(bright.value, 0.04, 1e-15);
}

TEST(Lint, EdgePatchesCountWithTrueMeans) {
  // 20x16 with patch 16: one full patch at 0.5 plus a 4x16 strip at 0.1
  DImage img(20, 16, 3, 0.5);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 16; ++y)
      for (int x = 16; x < 20; ++x) img.at(c, y, x) = 0.1;
  LintParams p;
  p.gamma_global = 0;
  EXPECT_NEAR(l_int(img, p).dark, (0.0 + 0.4 * 0.4) / 2, 1e-15);
}

TEST(Lint, GradientMatchesFiniteDifferences) {
  auto x0 = random_image<double>(32, 32, 3, 1);
  auto f = [&](const std::vector<double>& v) { return l_int(from_vec(v, 32, 32, 3), all_terms()).value; };
  auto g = l_int(x0, all_terms()).grad;
  auto r = oracle::compare_gradients(g.storage(), oracle::central_diff(f, x0.storage()));
  EXPECT_LE(r.max_rel, 1e-4);
}

TEST(Lint, GradientZeroInsideBand) {
  LintParams p;
  p.patch = 4;
  p.e_global = 0.55;
  DImage img(16, 16, 3, 0.55);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) img.at(0, y, x) = 0.5;  // patch mean 0.533, still inside
  p.gamma_global = 0;
  for (double g : l_int(img, p).grad.storage()) EXPECT_EQ(g, 0.0);
}

TEST(Lspa, FixedPointsAndShiftInvariance) {
  auto img = random_image<double>(32, 24, 3, 2, 0.0, 0.8);
  EXPECT_EQ(l_spa(img, img).value, 0.0);
  DImage shifted = img;
  for (auto& v : shifted.storage()) v += 0.1;
  EXPECT_NEAR(l_spa(shifted, img).value, 0.0, 1e-20);
}

TEST(Lspa, GradientMatchesFiniteDifferences) {
  auto ref = random_image<double>(32, 32, 3, 3);
  auto x0 = random_image<double>(32, 32, 3, 4);
  auto f = [&](const std::vector<double>& v) { return l_spa(from_vec(v, 32, 32, 3), ref).value; };
  auto r = oracle::compare_gradients(l_spa(x0, ref).grad.storage(), oracle::central_diff(f, x0.storage()));
  EXPECT_LE(r.max_rel, 1e-4);
}

TEST(Lspa, ShapeMismatchIsAnError) {
  EXPECT_THROW(l_spa(DImage(8, 8, 3), DImage(8, 9, 3)), InvalidInput);
}

TEST(Lcol, GrayIsZeroAndWorkedExample) {
  auto gray = random_image<double>(9, 9, 1, 5);
  DImage rgb(9, 9, 3);
  for (int c = 0; c < 3; ++c) insert_channel(rgb, c, gray);
  EXPECT_EQ(l_col(rgb).value, 0.0);
  EXPECT_NEAR(l_col(rgb_image<double>(4, 4, 0.5, 0.5, 0.6)).value, 0.02, 1e-15);
}

TEST(Lcol, GradientMatchesFiniteDifferences) {
  auto x0 = random_image<double>(32, 32, 3, 6);
  auto f = [&](const std::vector<double>& v) { return l_col(from_vec(v, 32, 32, 3)).value; };
  auto r = oracle::compare_gradients(l_col(x0).grad.storage(), oracle::central_diff(f, x0.storage()));
  EXPECT_LE(r.max_rel, 1e-4);
}

TEST(Ltv, ConstantIsZeroAndWorkedExample) {
  EXPECT_EQ(l_tv(BasicEnhanceMap<double>{DImage(7, 5, 3, 0.3)}).value, 0.0);
  DImage a(2, 1, 1);
  a.at(0, 0, 1) = 1.0;
  EXPECT_DOUBLE_EQ(l_tv(BasicEnhanceMap<double>{a}).value, 1.0);
}

TEST(Ltv, GradientMatchesFiniteDifferences) {
  auto a0 = random_image<double>(32, 32, 3, 7, -1, 1);
  auto f = [&](const std::vector<double>& v) { return l_tv(BasicEnhanceMap<double>{from_vec(v, 32, 32, 3)}).value; };
  auto r = oracle::compare_gradients(l_tv(BasicEnhanceMap<double>{a0}).grad.storage(),
                                     oracle::central_diff(f, a0.storage()));
  EXPECT_LE(r.max_rel, 1e-4);
}

TEST(Losses, AllNonNegative) {
  for (unsigned s = 0; s < 20; ++s) {
    auto a = random_image<double>(16, 16, 3, s);
    auto b = random_image<double>(16, 16, 3, s + 100);
    EXPECT_GE(l_int(a, LintParams{}).value, 0.0);
    EXPECT_GE(l_spa(a, b).value, 0.0);
    EXPECT_GE(l_col(a).value, 0.0);
    EXPECT_GE(l_tv(BasicEnhanceMap<double>{b}).value, 0.0);
  }
}

TEST(TotalLoss, AllWeightsZero) {
  LossConfig cfg{};
  cfg.lambda_int = cfg.lambda_spa = cfg.lambda_col = cfg.lambda_tv = 0;
  CurveNet<double> net;
  net.init_gaussian(1, 0.3);
  auto in = random_image<double>(16, 16, 3, 8);
  auto out = total_loss(in, in, net, cfg, 8);
  EXPECT_EQ(out.breakdown.total, 0.0);
  for (double g : out.grad) EXPECT_EQ(g, 0.0);
}

TEST(TotalLoss, ZeroNetSpatialOnlyAugmented) {
  LossConfig cfg{};
  cfg.lambda_int = cfg.lambda_col = cfg.lambda_tv = 0;
  cfg.lambda_spa = 1;
  cfg.curve_source = CurveSource::Augmented;
  CurveNet<double> net;
  auto in = random_image<double>(16, 16, 3, 9, 0, 0.2);
  auto aug = random_image<double>(16, 16, 3, 10, 0.2, 0.8);
  auto out = total_loss(in, aug, net, cfg, 8);
  EXPECT_EQ(out.enhanced, aug);
  EXPECT_DOUBLE_EQ(out.breakdown.total, l_spa(aug, in).value);
  // default source brightens the original frame instead
  cfg.curve_source = CurveSource::Input;
  EXPECT_EQ(total_loss(in, aug, net, cfg, 8).enhanced, in);
}

TEST(TotalLoss, BreakdownRecombines) {
  LossConfig cfg{};
  CurveNet<double> net;
  net.init_gaussian(11, 0.3);
  auto in = random_image<double>(24, 24, 3, 11, 0, 0.3);
  auto aug = random_image<double>(24, 24, 3, 12);
  auto b = total_loss(in, aug, net, cfg, 8).breakdown;
  const double manual = 200 * (b.int_dark + b.int_bright + 0.4 * b.int_global) + 4 * b.spa + 20 * b.col + 100 * b.tv;
  EXPECT_NEAR(b.total, manual, 1e-6);
}

class TotalLossGradient : public ::testing::TestWithParam<CurveSource> {};

TEST_P(TotalLossGradient, MatchesFiniteDifferencesOverAllParameters) {
  LossConfig cfg{};
  cfg.lint.patch = 4;
  cfg.curve_source = GetParam();
  CurveNet<double> net;
  net.init_gaussian(12, 0.3);
  auto in = random_image<double>(8, 8, 3, 13, 0.05, 0.6);
  auto aug = random_image<double>(8, 8, 3, 14, 0.1, 0.9);
  auto f = [&](const std::vector<double>& p) {
    CurveNet<double> n2 = net;
    std::copy(p.begin(), p.end(), n2.params().begin());
    return total_loss(in, aug, n2, cfg, 8).breakdown.total;
  };
  auto analytic = total_loss(in, aug, net, cfg, 8).grad;
  std::vector<double> p(net.params().begin(), net.params().end());
  auto r = oracle::compare_gradients(analytic, oracle::central_diff(f, p));
  EXPECT_LE(r.max_rel, 1e-3) << "worst index " << r.worst;
}

INSTANTIATE_TEST_SUITE_P(Sources, TotalLossGradient, ::testing::Values(CurveSource::Input, CurveSource::Augmented));

TEST(LossConfig, Validation) {
  LossConfig cfg{};
  cfg.lambda_col = -1;
  EXPECT_THROW(cfg.validate(), InvalidInput);
  LintParams p;
  p.e_dark = 0.7;
  EXPECT_THROW(p.validate(), InvalidInput);
}
