#include "camoforge/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "camoforge/common.hpp"

namespace camoforge {

void CameraRanges::validate() const {
  auto check = [](const Range& r, const char* name) {
    if (!(r.min <= r.max)) throw ConfigError(std::string("inverted camera range: ") + name);
  };
  check(distance, "distance");
  check(elevation, "elevation");
  check(azimuth, "azimuth");
  if (distance.min <= 0.0) throw ConfigError("camera distance must be positive");
  if (elevation.min < 0.0 || elevation.max > 90.0) throw ConfigError("elevation outside [0, 90]");
  if (azimuth.min < 0.0 || azimuth.max > 360.0) throw ConfigError("azimuth outside [0, 360]");
  if (height < 1 || width < 1) throw ConfigError("image size must be positive");
}

CameraParams sample_camera(std::uint64_t seed, const CameraRanges& ranges) {
  ranges.validate();
  Rng rng(seed);
  CameraParams cam;
  cam.distance = rng.uniform(ranges.distance.min, ranges.distance.max);
  cam.elevation_deg = rng.uniform(ranges.elevation.min, ranges.elevation.max);
  cam.azimuth_deg = rng.uniform(ranges.azimuth.min, ranges.azimuth.max);
  if (cam.azimuth_deg >= 360.0) cam.azimuth_deg = 0.0;
  cam.height = ranges.height;
  cam.width = ranges.width;
  return cam;
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::winter: return "winter";
    case SceneKind::forest: return "forest";
    case SceneKind::desert: return "desert";
  }
  return "unknown";
}

SceneKind scene_kind_from_string(const std::string& name) {
  if (name == "winter") return SceneKind::winter;
  if (name == "forest") return SceneKind::forest;
  if (name == "desert") return SceneKind::desert;
  throw ConfigError("unknown scene kind: " + name);
}

namespace {

using Color = std::array<double, 3>;

std::vector<Color> palette(SceneKind kind) {
  switch (kind) {
    case SceneKind::winter:
      return {{0.55, 0.58, 0.62}, {0.74, 0.77, 0.81}, {0.88, 0.90, 0.93}, {0.96, 0.97, 0.98}};
    case SceneKind::forest:
      return {{0.10, 0.24, 0.08}, {0.20, 0.40, 0.14}, {0.33, 0.52, 0.20}, {0.36, 0.33, 0.18}};
    case SceneKind::desert:
      return {{0.62, 0.47, 0.30}, {0.74, 0.59, 0.39}, {0.84, 0.71, 0.50}, {0.91, 0.81, 0.62}};
  }
  return {};
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Single octave of lattice value noise with `cells` cells across the image.
class ValueNoise {
 public:
  ValueNoise(Rng& rng, int cells) : cells_(cells), lattice_((cells + 1) * (cells + 1)) {
    for (double& v : lattice_) v = rng.uniform();
  }

  double sample(double u, double v) const {
    const double fx = u * cells_, fy = v * cells_;
    const int x0 = std::min(static_cast<int>(fx), cells_ - 1);
    const int y0 = std::min(static_cast<int>(fy), cells_ - 1);
    const double tx = smoothstep(fx - x0), ty = smoothstep(fy - y0);
    auto at = [&](int x, int y) { return lattice_[y * (cells_ + 1) + x]; };
    const double top = at(x0, y0) * (1 - tx) + at(x0 + 1, y0) * tx;
    const double bot = at(x0, y0 + 1) * (1 - tx) + at(x0 + 1, y0 + 1) * tx;
    return top * (1 - ty) + bot * ty;
  }

 private:
  int cells_;
  std::vector<double> lattice_;
};

}  // namespace

SceneImage generate_scene(SceneKind kind, std::uint64_t seed, int height, int width,
                          int scene_id) {
  if (height < 16 || width < 16) throw std::invalid_argument("scene must be at least 16x16");
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(kind) + 101));
  const int octaves = 2 + static_cast<int>(rng.below(3));
  std::vector<ValueNoise> layers;
  for (int o = 0; o < octaves; ++o) layers.emplace_back(rng, 2 << o);
  ValueNoise tint(rng, 3);
  const auto pal = palette(kind);
  const int n = static_cast<int>(pal.size());

  SceneImage scene{Image(height, width, 3), scene_id, kind, seed};
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double u = (x + 0.5) / width, v = (y + 0.5) / height;
      double value = 0.0, norm = 0.0, amp = 1.0;
      for (const auto& layer : layers) {
        value += amp * layer.sample(u, v);
        norm += amp;
        amp *= 0.5;
      }
      value /= norm;
      // Stretch around the mean so the full palette is used.
      const double t = std::clamp(0.5 + 1.8 * (value - 0.5), 0.0, 1.0) * (n - 1);
      const int lo = std::min(static_cast<int>(t), n - 2);
      const double f = t - lo;
      const double shade = 0.94 + 0.12 * tint.sample(u, v);
      for (int c = 0; c < 3; ++c) {
        const double col = pal[lo][c] * (1 - f) + pal[lo + 1][c] * f;
        scene.pixels.at(y, x, c) = std::clamp(col * shade, 0.0, 1.0);
      }
    }
  }
  return scene;
}

Dataset build_dataset(const std::vector<SceneImage>& scenes, int n_renders, std::uint64_t seed,
                      const CameraRanges& ranges, Split split) {
  if (scenes.empty()) throw std::invalid_argument("build_dataset: empty scene list");
  if (n_renders < 1) throw std::invalid_argument("build_dataset: n_renders must be >= 1");
  ranges.validate();
  Dataset ds;
  ds.split = split;
  ds.samples.reserve(static_cast<std::size_t>(n_renders) * scenes.size());
  std::uint64_t k = 0;
  for (int r = 0; r < n_renders; ++r) {
    for (const auto& scene : scenes) {
      ds.samples.push_back({scene.scene_id, sample_camera(derive_seed(seed, k++), ranges)});
    }
  }
  return ds;
}

const SceneImage& find_scene(const std::vector<SceneImage>& scenes, int scene_id) {
  for (const auto& s : scenes) {
    if (s.scene_id == scene_id) return s;
  }
  throw std::out_of_range("no scene with id " + std::to_string(scene_id));
}

}  // namespace camoforge
