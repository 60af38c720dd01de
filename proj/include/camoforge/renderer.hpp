#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camoforge/image.hpp"
#include "camoforge/mesh.hpp"
#include "camoforge/scene.hpp"

namespace camoforge {

// Per-face flat RGB colors, face-major (face f occupies [3f, 3f+3)).
struct TextureMap {
  std::vector<double> colors;

  TextureMap() = default;
  explicit TextureMap(int faces, double fill = 0.0) : colors(static_cast<std::size_t>(faces) * 3, fill) {}

  int face_count() const { return static_cast<int>(colors.size() / 3); }
  double& at(int face, int c) { return colors[static_cast<std::size_t>(face) * 3 + c]; }
  double at(int face, int c) const { return colors[static_cast<std::size_t>(face) * 3 + c]; }

  void clamp01();

  bool operator==(const TextureMap&) const = default;
};

TextureMap uniform_texture(int faces, double r, double g, double b);
TextureMap noise_texture(int faces, std::uint64_t seed);

struct RenderOutput {
  Image color;                  // H x W x 3, black where nothing is drawn
  Image silhouette;             // H x W x 1, exactly 0 or 1
  std::vector<std::int32_t> face_id;  // 0 = background, else 1-based face index

  int height() const { return color.height; }
  int width() const { return color.width; }
  std::size_t covered_pixels() const;
};

// Face visibility raster for one viewpoint; independent of the texture.
struct Coverage {
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> face_id;  // 0 = background, else 1-based face index
};

constexpr double kVerticalFovDeg = 45.0;

// Perspective z-buffer pass looking at the mesh centroid from the spherical
// pose in `camera`. Equal depths resolve to the lower face index.
Coverage rasterize(const Mesh& mesh, const CameraParams& camera);

// Flat shading of a coverage raster.
RenderOutput shade(const Coverage& coverage, const TextureMap& texture);

// shade(rasterize(mesh, camera), texture) with the texture length checked.
RenderOutput render(const Mesh& mesh, const TextureMap& texture, const CameraParams& camera);

// m * O + (1 - m) * I
Image compose(const RenderOutput& out, const Image& scene);

// Sum of pixel gradients per covered face; the adjoint of the texture->color map.
TextureMap backprop_to_texture(const RenderOutput& out, const Image& pixel_grad, int face_count);

// Debug dumps: color PPM, silhouette PGM and face ids as little-endian u32.
void dump_render(const std::filesystem::path& stem, const RenderOutput& out);

}  // namespace camoforge
