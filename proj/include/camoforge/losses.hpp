#pragma once

#include <vector>

#include "camoforge/image.hpp"
#include "camoforge/renderer.hpp"

namespace camoforge {

struct DacConfig;
struct FaceMask;

// Scene-matching loss over every (render, scene) pair: per pair, the MSE
// between object and scene restricted to the render's silhouette pixels
// (pairs with an empty silhouette contribute 0), averaged over pairs.
struct FirstLoss {
  double value = 0.0;
  std::vector<Image> grads;  // d value / d render color, one per render
};
FirstLoss loss_first(const std::vector<RenderOutput>& rendered,
                     const std::vector<const Image*>& scenes);

// Sum over masked faces and channels of (T_g - T_l)^2; gradient w.r.t. T_l.
struct ColorLoss {
  double value = 0.0;
  TextureMap grad;
};
ColorLoss loss_color(const TextureMap& global_tex, const TextureMap& local_tex,
                     const FaceMask& mask);

// Sum of squared differences between vertical and horizontal neighbours,
// over all channels.
struct SmoothLoss {
  double value = 0.0;
  Image grad;
};
SmoothLoss loss_smooth(const Image& image);

double loss_total(double adv, double color, double smooth, const DacConfig& cfg);

}  // namespace camoforge
