#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "camoforge/adam.hpp"
#include "camoforge/dac.hpp"
#include "camoforge/losses.hpp"
#include "testing.hpp"

namespace camoforge {
namespace {

using testing::central_difference;
using testing::random_image;
using testing::relative_error;

RenderOutput filled(int h, int w, const std::vector<std::pair<int, int>>& pixels, double value) {
  RenderOutput out;
  out.color = Image(h, w, 3);
  out.silhouette = Image(h, w, 1);
  out.face_id.assign(static_cast<std::size_t>(h) * w, 0);
  for (auto [y, x] : pixels) {
    out.face_id[y * w + x] = 1;
    out.silhouette.at(y, x, 0) = 1.0;
    for (int c = 0; c < 3; ++c) out.color.at(y, x, c) = value;
  }
  return out;
}

TEST(LossFirst, PerfectMatchIsZero) {
  const Mesh mesh = make_boxperson();
  const TextureMap tex = uniform_texture(80, 0.3, 0.5, 0.2);
  const RenderOutput out = render(mesh, tex, CameraParams{3, 10, 20, 32, 32});
  Image scene(32, 32, 3);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      scene.at(y, x, 0) = 0.3;
      scene.at(y, x, 1) = 0.5;
      scene.at(y, x, 2) = 0.2;
    }
  const FirstLoss l = loss_first({out}, {&scene});
  EXPECT_EQ(l.value, 0.0);
  for (double g : l.grads[0].data) EXPECT_EQ(g, 0.0);
}

TEST(LossFirst, WhiteOnBlackIsOne) {
  const Image black(8, 8, 3);
  for (int k : {1, 5, 20}) {
    std::vector<std::pair<int, int>> px;
    for (int i = 0; i < k; ++i) px.push_back({i / 8, i % 8});
    const FirstLoss l = loss_first({filled(8, 8, px, 1.0)}, {&black});
    EXPECT_DOUBLE_EQ(l.value, 1.0) << k;
  }
}

TEST(LossFirst, EmptySilhouetteContributesZero) {
  const Image black(8, 8, 3);
  const FirstLoss l = loss_first({filled(8, 8, {{0, 0}}, 1.0), filled(8, 8, {}, 0.0)}, {&black});
  EXPECT_DOUBLE_EQ(l.value, 0.5);  // (1 + 0) / 2 pairs
}

TEST(LossFirst, AveragesOverPairs) {
  Image black(4, 4, 3), gray(4, 4, 3);
  std::fill(gray.data.begin(), gray.data.end(), 0.5);
  const FirstLoss l = loss_first({filled(4, 4, {{1, 1}, {2, 2}}, 1.0)}, {&black, &gray});
  EXPECT_DOUBLE_EQ(l.value, (1.0 + 0.25) / 2.0);
}

TEST(LossFirst, DimensionMismatch) {
  const Image small(4, 4, 3);
  EXPECT_THROW(loss_first({filled(8, 8, {{0, 0}}, 1.0)}, {&small}), std::invalid_argument);
  EXPECT_THROW(loss_first({}, {&small}), std::invalid_argument);
}

TEST(LossFirst, TextureGradientMatchesFiniteDifferences) {
  const Mesh mesh = make_boxperson();
  const int n = mesh.face_count();
  std::vector<CameraParams> cams{{2.5, 10, 30, 48, 48}, {3.0, 40, 200, 48, 48}, {2.2, 5, 95, 48, 48}};
  Rng rng(12);
  const Image s1 = random_image(48, 48, 3, rng), s2 = random_image(48, 48, 3, rng);
  const std::vector<const Image*> scenes{&s1, &s2};
  TextureMap tex = noise_texture(n, 21);
  std::vector<Coverage> cov;
  for (const auto& c : cams) cov.push_back(rasterize(mesh, c));
  auto value = [&] {
    std::vector<RenderOutput> outs;
    for (const auto& c : cov) outs.push_back(shade(c, tex));
    return loss_first(outs, scenes).value;
  };
  std::vector<RenderOutput> outs;
  for (const auto& c : cov) outs.push_back(shade(c, tex));
  const FirstLoss l = loss_first(outs, scenes);
  TextureMap grad(n);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    const TextureMap g = backprop_to_texture(outs[i], l.grads[i], n);
    for (std::size_t k = 0; k < grad.colors.size(); ++k) grad.colors[k] += g.colors[k];
  }
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t i = rng.below(tex.colors.size());
    const double fd = central_difference(value, tex.colors[i], 1e-6);
    if (grad.colors[i] == 0.0) {
      EXPECT_NEAR(fd, 0.0, 1e-10);
      continue;
    }
    ++checked;
    EXPECT_LE(relative_error(grad.colors[i], fd), 1e-5) << "entry " << i;
  }
  EXPECT_GT(checked, 20);
}

TEST(ComposeTexture, MaskSelectsLocal) {
  const TextureMap g = noise_texture(4, 1), l = noise_texture(4, 2);
  EXPECT_EQ(compose_texture(g, l, full_mask(4)), l);
  const FaceMask m = make_face_mask({1, 3}, 4);
  const TextureMap t = compose_texture(g, l, m);
  for (int f = 0; f < 4; ++f)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(t.at(f, c), (f == 0 || f == 2) ? l.at(f, c) : g.at(f, c));
  FaceMask none = m;
  std::fill(none.bits.begin(), none.bits.end(), 0);
  none.count = 0;
  EXPECT_EQ(compose_texture(g, l, none), g);
  EXPECT_THROW(compose_texture(g, noise_texture(3, 2), m), std::invalid_argument);
}

TEST(FaceMaskTest, Construction) {
  const FaceMask m = make_face_mask({2, 5}, 6);
  EXPECT_EQ(m.bits, (std::vector<std::uint8_t>{0, 1, 0, 0, 1, 0}));
  EXPECT_EQ(m.count, 2);
  EXPECT_EQ(m.indices(), (std::vector<int>{2, 5}));
  std::vector<int> all{1, 2, 3, 4, 5, 6};
  EXPECT_EQ(make_face_mask(all, 6), full_mask(6));
  EXPECT_THROW(make_face_mask({}, 6), std::invalid_argument);
  EXPECT_THROW(make_face_mask({0}, 6), std::invalid_argument);
  EXPECT_THROW(make_face_mask({7}, 6), std::invalid_argument);
  EXPECT_THROW(make_face_mask({2, 2}, 6), std::invalid_argument);
}

TEST(LossColor, ClosedForms) {
  const TextureMap g = noise_texture(5, 3);
  EXPECT_EQ(loss_color(g, g, full_mask(5)).value, 0.0);
  TextureMap a(1), b(1);
  a.at(0, 0) = 0.7;
  b.at(0, 0) = 0.2;
  EXPECT_DOUBLE_EQ(loss_color(a, b, full_mask(1)).value, 0.25);
  // Unmasked faces neither count nor receive gradient.
  const TextureMap l = noise_texture(5, 4);
  const ColorLoss c = loss_color(g, l, make_face_mask({2}, 5));
  double expect = 0.0;
  for (int ch = 0; ch < 3; ++ch) expect += std::pow(g.at(1, ch) - l.at(1, ch), 2);
  EXPECT_DOUBLE_EQ(c.value, expect);
  for (int f = 0; f < 5; ++f)
    for (int ch = 0; ch < 3; ++ch)
      if (f != 1) EXPECT_EQ(c.grad.at(f, ch), 0.0);
}

TEST(LossColor, MatchesFiniteDifferences) {
  const TextureMap g = noise_texture(12, 5);
  TextureMap l = noise_texture(12, 6);
  const FaceMask m = make_face_mask({1, 4, 5, 9, 12}, 12);
  const ColorLoss c = loss_color(g, l, m);
  for (std::size_t i = 0; i < l.colors.size(); ++i) {
    const double fd = central_difference([&] { return loss_color(g, l, m).value; }, l.colors[i], 1e-4);
    if (c.grad.colors[i] == 0.0) EXPECT_EQ(fd, 0.0);
    else EXPECT_LE(relative_error(c.grad.colors[i], fd), 1e-8);
  }
}

TEST(LossSmooth, ClosedForms) {
  Image constant(5, 7, 3);
  std::fill(constant.data.begin(), constant.data.end(), 0.4);
  EXPECT_EQ(loss_smooth(constant).value, 0.0);
  Image tiny(2, 2, 1);
  tiny.at(0, 1, 0) = 1.0;
  tiny.at(1, 1, 0) = 1.0;
  EXPECT_DOUBLE_EQ(loss_smooth(tiny).value, 2.0);
  EXPECT_THROW(loss_smooth(Image(1, 5, 3)), std::invalid_argument);
}

TEST(LossSmooth, MatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    Image img = random_image(8, 8, 3, rng);
    const SmoothLoss s = loss_smooth(img);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
      const double fd = central_difference([&] { return loss_smooth(img).value; }, img.data[i], 1e-4);
      EXPECT_LE(relative_error(s.grad.data[i], fd), 1e-8);
    }
  }
}

TEST(LossTotal, Weighting) {
  DacConfig cfg;
  EXPECT_NEAR(loss_total(0.5, 100.0, 1000.0, cfg), 0.5501, 1e-15);
  EXPECT_EQ(loss_total(0.0, 0.0, 0.0, cfg), 0.0);
  cfg.lambda1 = cfg.lambda2 = 0.0;
  EXPECT_EQ(loss_total(0.3, 17.0, 99.0, cfg), 0.3);
}

TEST(Adam, ZeroGradientKeepsParams) {
  std::vector<double> p{0.1, -0.2, 0.3};
  const std::vector<double> g(3, 0.0);
  AdamState st;
  adam_step(p, g, st, 0.01);
  EXPECT_EQ(p, (std::vector<double>{0.1, -0.2, 0.3}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesAgainstGradientByLr) {
  std::vector<double> p{0.0, 0.0, 0.0, 0.0};
  const std::vector<double> g{2.0, -0.5, 1e-3, -40.0};
  AdamState st;
  adam_step(p, g, st, 0.01);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(std::signbit(p[i]), !std::signbit(g[i]));
    EXPECT_NEAR(std::abs(p[i]), 0.01, 1e-6);
  }
}

TEST(Adam, DescendsQuadratic) {
  std::vector<double> x{1.0};
  AdamState st;
  double prev = 1.0;
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> g{2.0 * x[0]};
    adam_step(x, g, st, 0.01);
    EXPECT_LT(x[0], prev);
    prev = x[0];
  }
  EXPECT_LT(std::abs(x[0]), 0.5);
}

TEST(Adam, Errors) {
  std::vector<double> p{1.0, 2.0};
  AdamState st;
  EXPECT_THROW(adam_step(p, std::vector<double>{1.0}, st, 0.01), std::invalid_argument);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(adam_step(p, bad, st, 0.01), NumericalError);
}

}  // namespace
}  // namespace camoforge
