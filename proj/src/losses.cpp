#include "camoforge/losses.hpp"

#include <stdexcept>

#include "camoforge/dac.hpp"

namespace camoforge {

FirstLoss loss_first(const std::vector<RenderOutput>& rendered,
                     const std::vector<const Image*>& scenes) {
  if (rendered.empty() || scenes.empty()) throw std::invalid_argument("loss_first: empty input");
  FirstLoss out;
  const double pairs = static_cast<double>(rendered.size() * scenes.size());
  out.grads.reserve(rendered.size());
  for (const auto& r : rendered) {
    Image grad(r.color.height, r.color.width, 3);
    const std::size_t covered = r.covered_pixels();
    for (const Image* scene : scenes) {
      if (!scene || !r.color.same_shape(*scene)) {
        throw std::invalid_argument("loss_first: dimension mismatch");
      }
      if (covered == 0) continue;
      const double denom = 3.0 * static_cast<double>(covered);
      double sq = 0.0;
      for (std::size_t p = 0; p < r.face_id.size(); ++p) {
        if (r.face_id[p] == 0) continue;
        for (int c = 0; c < 3; ++c) {
          const std::size_t i = p * 3 + c;
          const double d = r.color.data[i] - scene->data[i];
          sq += d * d;
          grad.data[i] += 2.0 * d / (denom * pairs);
        }
      }
      out.value += sq / denom;
    }
    out.grads.push_back(std::move(grad));
  }
  out.value /= pairs;
  return out;
}

ColorLoss loss_color(const TextureMap& global_tex, const TextureMap& local_tex,
                     const FaceMask& mask) {
  const int n = mask.size();
  if (global_tex.face_count() != n || local_tex.face_count() != n) {
    throw std::invalid_argument("loss_color: length mismatch");
  }
  ColorLoss out{0.0, TextureMap(n)};
  for (int f = 0; f < n; ++f) {
    if (!mask.selected(f)) continue;
    for (int c = 0; c < 3; ++c) {
      const double d = global_tex.at(f, c) - local_tex.at(f, c);
      out.value += d * d;
      out.grad.at(f, c) = -2.0 * d;
    }
  }
  return out;
}

SmoothLoss loss_smooth(const Image& image) {
  if (image.height < 2 || image.width < 2) throw std::invalid_argument("loss_smooth: image < 2x2");
  SmoothLoss out{0.0, Image(image.height, image.width, image.channels)};
  const int H = image.height, W = image.width, C = image.channels;
  const std::size_t row = static_cast<std::size_t>(W) * C;
  const double* a = image.data.data();
  double* g = out.grad.data.data();
  double value = 0.0;
  auto accumulate = [&](std::size_t i, std::size_t j) {
    for (int c = 0; c < C; ++c) {
      const double d = a[i + c] - a[j + c];
      value += d * d;
      g[i + c] += 2.0 * d;
      g[j + c] -= 2.0 * d;
    }
  };
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t i = y * row + static_cast<std::size_t>(x) * C;
      if (y + 1 < H) accumulate(i, i + row);
      if (x + 1 < W) accumulate(i, i + C);
    }
  }
  out.value = value;
  return out;
}

double loss_total(double adv, double color, double smooth, const DacConfig& cfg) {
  return adv + cfg.lambda1 * color + cfg.lambda2 * smooth;
}

}  // namespace camoforge
