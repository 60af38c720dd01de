#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "camoforge/common.hpp"
#include "camoforge/mesh.hpp"
#include "camoforge/scene.hpp"

namespace camoforge {
namespace {

TEST(LoadObj, BuiltinAssetHasEightyFaces) {
  const Mesh mesh = load_obj(std::filesystem::path(CAMOFORGE_ASSET_DIR) / "boxperson.obj");
  EXPECT_EQ(mesh.face_count(), 80);
  const Mesh generated = make_boxperson();
  EXPECT_EQ(mesh.vertices(), generated.vertices());
  EXPECT_EQ(mesh.faces(), generated.faces());
}

TEST(LoadObj, SingleTriangle) {
  const Mesh mesh = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
  EXPECT_EQ(mesh.face_count(), 1);
  EXPECT_EQ(mesh.vertices()[1], (Vec3{1, 0, 0}));
}

TEST(LoadObj, SlashFormsAndComments) {
  const Mesh mesh = parse_obj("# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1\n");
  EXPECT_EQ(mesh.face_count(), 1);
}

TEST(LoadObj, RejectsQuadWithLineNumber) {
  try {
    parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 3 4\n");
    FAIL() << "quad accepted";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("non-triangle face"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  }
}

TEST(LoadObj, RejectsOutOfRangeAndGarbage) {
  EXPECT_THROW(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"), std::runtime_error);
  EXPECT_THROW(parse_obj("v 0 0\nf 1 2 3\n"), std::runtime_error);
  EXPECT_THROW(parse_obj("v 0 0 0\nf a b c\n"), std::runtime_error);
  EXPECT_THROW(parse_obj("v 0 0 0\n"), std::runtime_error);
}

TEST(Mesh, RoundTripsThroughObjText) {
  const Mesh a = make_boxperson();
  const Mesh b = parse_obj(a.to_obj());
  EXPECT_EQ(a.faces(), b.faces());
  EXPECT_EQ(b.face_count(), 80);
}

TEST(Mesh, SubdivisionMultipliesFaces) {
  const Mesh base = make_boxperson();
  EXPECT_EQ(subdivide(base, 2).face_count(), 320);
  EXPECT_EQ(subdivide(base, 4).face_count(), 1280);
  const Mesh fine = subdivide(base, 3);
  // Every original corner survives (up to rounding).
  for (const Vec3& v : base.vertices()) {
    double best = 1e300;
    for (const Vec3& w : fine.vertices())
      best = std::min(best, std::abs(v[0] - w[0]) + std::abs(v[1] - w[1]) + std::abs(v[2] - w[2]));
    EXPECT_LT(best, 1e-12);
  }
  EXPECT_EQ(resolve_mesh("builtin:boxperson@2").face_count(), 320);
  EXPECT_THROW(resolve_mesh("builtin:cube"), ConfigError);
}

TEST(SampleCamera, DefaultRangesOverThousandSeeds) {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const CameraParams c = sample_camera(seed);
    EXPECT_GE(c.distance, 2.0);
    EXPECT_LE(c.distance, 7.0);
    EXPECT_GE(c.elevation_deg, 0.0);
    EXPECT_LE(c.elevation_deg, 45.0);
    EXPECT_GE(c.azimuth_deg, 0.0);
    EXPECT_LT(c.azimuth_deg, 360.0);
  }
}

TEST(SampleCamera, CollapsedRangeAndDeterminism) {
  CameraRanges r;
  r.distance = {3, 3};
  r.elevation = {3, 3};
  r.azimuth = {3, 3};
  const CameraParams c = sample_camera(42, r);
  EXPECT_EQ(c.distance, 3.0);
  EXPECT_EQ(c.elevation_deg, 3.0);
  EXPECT_EQ(c.azimuth_deg, 3.0);
  EXPECT_EQ(sample_camera(7), sample_camera(7));
  EXPECT_NE(sample_camera(7), sample_camera(8));
}

TEST(SampleCamera, InvertedRangeRejected) {
  CameraRanges r;
  r.distance = {5, 2};
  EXPECT_THROW(sample_camera(0, r), ConfigError);
}

double channel_mean(const Image& img, int c) {
  double acc = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) acc += img.at(y, x, c);
  return acc / static_cast<double>(img.pixels());
}

TEST(GenerateScene, ForestIsGreen) {
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const Image img = generate_scene(SceneKind::forest, seed, 64, 64).pixels;
    EXPECT_GT(channel_mean(img, 1), channel_mean(img, 0));
    EXPECT_GT(channel_mean(img, 1), channel_mean(img, 2));
  }
}

TEST(GenerateScene, WinterIsNearGray) {
  const Image img = generate_scene(SceneKind::winter, 1, 64, 64).pixels;
  double spread = 0.0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double a = img.at(y, x, 0), b = img.at(y, x, 1), c = img.at(y, x, 2);
      spread += std::max({a, b, c}) - std::min({a, b, c});
    }
  }
  EXPECT_LT(spread / (64.0 * 64.0), 0.15);
}

TEST(GenerateScene, DesertIsTan) {
  const Image img = generate_scene(SceneKind::desert, 1, 64, 64).pixels;
  EXPECT_GT(channel_mean(img, 0), channel_mean(img, 1));
  EXPECT_GT(channel_mean(img, 1), channel_mean(img, 2));
}

TEST(GenerateScene, DeterministicAndInRange) {
  const auto a = generate_scene(SceneKind::desert, 9, 32, 48);
  const auto b = generate_scene(SceneKind::desert, 9, 32, 48);
  EXPECT_EQ(a.pixels, b.pixels);
  EXPECT_NE(a.pixels, generate_scene(SceneKind::desert, 10, 32, 48).pixels);
  for (double v : a.pixels.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(generate_scene(SceneKind::forest, 1, 15, 64), std::invalid_argument);
}

TEST(BuildDataset, ProductRule) {
  std::vector<SceneImage> scenes;
  for (int i = 0; i < 10; ++i) scenes.push_back(generate_scene(SceneKind::winter, i, 16, 16, i + 1));
  EXPECT_EQ(build_dataset(scenes, 500, 1).size(), 5000u);
  EXPECT_EQ(build_dataset({scenes[0]}, 1, 1).size(), 1u);
  const std::vector<SceneImage> four(scenes.begin(), scenes.begin() + 4);
  const Dataset ds = build_dataset(four, 50, 3);
  EXPECT_EQ(ds.size(), 200u);
  // Every scene is paired with every render slot.
  for (int id = 1; id <= 4; ++id) {
    EXPECT_EQ(std::count_if(ds.samples.begin(), ds.samples.end(),
                            [&](const Sample& s) { return s.scene_id == id; }),
              50);
  }
  EXPECT_THROW(build_dataset({}, 5, 1), std::invalid_argument);
  EXPECT_THROW(build_dataset(four, 0, 1), std::invalid_argument);
}

TEST(BuildDataset, Reproducible) {
  const std::vector<SceneImage> scenes{generate_scene(SceneKind::forest, 1, 16, 16, 1)};
  const Dataset a = build_dataset(scenes, 20, 5);
  const Dataset b = build_dataset(scenes, 20, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.samples[i].camera, b.samples[i].camera);
}

}  // namespace
}  // namespace camoforge
