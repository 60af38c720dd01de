#include "camoforge/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

void TextureMap::clamp01() {
  for (double& v : colors) v = std::clamp(v, 0.0, 1.0);
}

TextureMap uniform_texture(int faces, double r, double g, double b) {
  TextureMap t(faces);
  for (int f = 0; f < faces; ++f) {
    t.at(f, 0) = r;
    t.at(f, 1) = g;
    t.at(f, 2) = b;
  }
  return t;
}

TextureMap noise_texture(int faces, std::uint64_t seed) {
  Rng rng(seed);
  TextureMap t(faces);
  for (double& v : t.colors) v = rng.uniform();
  return t;
}

std::size_t RenderOutput::covered_pixels() const {
  return static_cast<std::size_t>(std::count_if(face_id.begin(), face_id.end(),
                                                [](std::int32_t id) { return id != 0; }));
}

namespace {

struct ScreenVertex {
  double x, y, inv_z;
};

double edge(const ScreenVertex& a, const ScreenVertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

}  // namespace

Coverage rasterize(const Mesh& mesh, const CameraParams& camera) {
  if (camera.height < 1 || camera.width < 1) throw std::invalid_argument("bad image size");
  if (!(camera.distance > mesh.bounding_radius())) {
    throw std::invalid_argument("degenerate viewpoint: camera inside mesh bounding sphere");
  }
  const int H = camera.height, W = camera.width;
  const double deg = std::numbers::pi / 180.0;
  const double az = std::fmod(camera.azimuth_deg, 360.0) * deg;
  const double el = camera.elevation_deg * deg;
  const Vec3 target = mesh.centroid();
  const Vec3 dir{std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az)};
  const Vec3 eye{target[0] + camera.distance * dir[0], target[1] + camera.distance * dir[1],
                 target[2] + camera.distance * dir[2]};
  const Vec3 fwd{-dir[0], -dir[1], -dir[2]};
  // Right stays horizontal for every elevation, including straight down.
  const Vec3 right{std::cos(az), 0.0, -std::sin(az)};
  const Vec3 up{right[1] * fwd[2] - right[2] * fwd[1], right[2] * fwd[0] - right[0] * fwd[2],
                right[0] * fwd[1] - right[1] * fwd[0]};
  const double focal = 0.5 * H / std::tan(0.5 * kVerticalFovDeg * deg);

  std::vector<ScreenVertex> projected;
  projected.reserve(mesh.vertices().size());
  for (const auto& v : mesh.vertices()) {
    const Vec3 d{v[0] - eye[0], v[1] - eye[1], v[2] - eye[2]};
    const double xc = d[0] * right[0] + d[1] * right[1] + d[2] * right[2];
    const double yc = d[0] * up[0] + d[1] * up[1] + d[2] * up[2];
    const double zc = d[0] * fwd[0] + d[1] * fwd[1] + d[2] * fwd[2];
    projected.push_back({0.5 * W + focal * xc / zc, 0.5 * H - focal * yc / zc, 1.0 / zc});
  }

  Coverage out{H, W, std::vector<std::int32_t>(static_cast<std::size_t>(H) * W, 0)};
  std::vector<double> depth(static_cast<std::size_t>(H) * W, 0.0);  // stores 1/z; larger is nearer

  const auto& faces = mesh.faces();
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const ScreenVertex& a = projected[faces[f][0]];
    const ScreenVertex& b = projected[faces[f][1]];
    const ScreenVertex& c = projected[faces[f][2]];
    const double area = edge(a, b, c.x, c.y);
    if (area == 0.0) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(W - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(H - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
    const double sign = area > 0 ? 1.0 : -1.0;
    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = sign * edge(b, c, px, py);
        const double w1 = sign * edge(c, a, px, py);
        const double w2 = sign * edge(a, b, px, py);
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double inv_z = (w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z) / (sign * area);
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        if (inv_z > depth[p]) {
          depth[p] = inv_z;
          out.face_id[p] = static_cast<std::int32_t>(f + 1);
        }
      }
    }
  }
  return out;
}

RenderOutput render(const Mesh& mesh, const TextureMap& texture, const CameraParams& camera) {
  if (texture.face_count() != mesh.face_count()) {
    throw std::invalid_argument("texture length does not match mesh face count");
  }
  return shade(rasterize(mesh, camera), texture);
}

RenderOutput shade(const Coverage& coverage, const TextureMap& texture) {
  RenderOutput out;
  out.face_id = coverage.face_id;
  const int H = coverage.height, W = coverage.width;
  out.color = Image(H, W, 3);
  out.silhouette = Image(H, W, 1);
  const int n = texture.face_count();
  for (std::size_t p = 0; p < out.face_id.size(); ++p) {
    const int id = out.face_id[p];
    if (id == 0) continue;
    if (id > n) throw std::invalid_argument("texture too short for coverage raster");
    out.silhouette.data[p] = 1.0;
    for (int c = 0; c < 3; ++c) out.color.data[p * 3 + c] = texture.at(id - 1, c);
  }
  return out;
}

Image compose(const RenderOutput& out, const Image& scene) {
  if (!out.color.same_shape(scene)) throw std::invalid_argument("compose: size mismatch");
  Image adv = scene;
  for (std::size_t p = 0; p < out.face_id.size(); ++p) {
    const double m = out.silhouette.data[p];
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      adv.data[i] = m * out.color.data[i] + (1.0 - m) * scene.data[i];
    }
  }
  return adv;
}

TextureMap backprop_to_texture(const RenderOutput& out, const Image& pixel_grad, int face_count) {
  if (!out.color.same_shape(pixel_grad)) {
    throw std::invalid_argument("backprop_to_texture: gradient size mismatch");
  }
  TextureMap grad(face_count);
  for (std::size_t p = 0; p < out.face_id.size(); ++p) {
    const int id = out.face_id[p];
    if (id == 0) continue;
    for (int c = 0; c < 3; ++c) grad.at(id - 1, c) += pixel_grad.data[p * 3 + c];
  }
  return grad;
}

void dump_render(const std::filesystem::path& stem, const RenderOutput& out) {
  auto with_ext = [&](const char* ext) {
    auto p = stem;
    p += ext;
    return p;
  };
  write_ppm(with_ext(".ppm"), out.color);
  write_pgm(with_ext(".pgm"), out.silhouette);
  std::string raw;
  raw.reserve(out.face_id.size() * 4);
  for (std::int32_t id : out.face_id) {
    const auto u = static_cast<std::uint32_t>(id);
    for (int b = 0; b < 4; ++b) raw.push_back(static_cast<char>((u >> (8 * b)) & 0xff));
  }
  write_file_atomic(with_ext(".faceid"), raw);
}

}  // namespace camoforge
