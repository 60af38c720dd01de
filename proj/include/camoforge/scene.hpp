#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camoforge/image.hpp"

namespace camoforge {

struct CameraParams {
  double distance = 4.0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
  int height = 128;
  int width = 128;

  bool operator==(const CameraParams&) const = default;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

// Distance / elevation / azimuth sampling ranges. Azimuth is half-open.
struct CameraRanges {
  Range distance{2.0, 7.0};
  Range elevation{0.0, 45.0};
  Range azimuth{0.0, 360.0};
  int height = 128;
  int width = 128;

  void validate() const;
};

CameraParams sample_camera(std::uint64_t seed, const CameraRanges& ranges = {});

enum class SceneKind { winter, forest, desert };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

struct SceneImage {
  Image pixels;
  int scene_id = 0;
  SceneKind kind = SceneKind::forest;
  std::uint64_t seed = 0;
};

// Palette-mapped value noise; deterministic per (kind, seed, size).
SceneImage generate_scene(SceneKind kind, std::uint64_t seed, int height, int width,
                          int scene_id = 0);

enum class Split { train, test };

struct Sample {
  int scene_id = 0;
  CameraParams camera;
};

struct Dataset {
  std::vector<Sample> samples;
  Split split = Split::train;

  std::size_t size() const { return samples.size(); }
};

// One freshly sampled camera per (render, scene) pair: n_renders * |scenes|
// samples, render-major.
Dataset build_dataset(const std::vector<SceneImage>& scenes, int n_renders, std::uint64_t seed,
                      const CameraRanges& ranges = {}, Split split = Split::train);

// Looks up a scene by id; throws if absent.
const SceneImage& find_scene(const std::vector<SceneImage>& scenes, int scene_id);

}  // namespace camoforge
