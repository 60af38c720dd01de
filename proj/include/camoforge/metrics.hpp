#pragma once

#include <string>
#include <vector>

#include "camoforge/dac.hpp"
#include "camoforge/detector.hpp"
#include "camoforge/image.hpp"
#include "camoforge/renderer.hpp"

namespace camoforge {

// P@0.5 here is the box-free surrogate: an image counts as detected when its
// objectness reaches the threshold. Reports label it "p_at_05_surrogate".
struct EvalReport {
  double p_at_05 = 0.0;
  double asr = 0.0;
  double mse_naturalness = 0.0;  // 8-bit scale (unit MSE * 255^2)
  double mse_unit = 0.0;
  double clean_p_at_05 = 0.0;
  int n_images = 0;
  double threshold = 0.5;
};

// Counting forms over precomputed detection flags.
double detection_rate(const std::vector<bool>& detected);
double attack_success_rate(const std::vector<bool>& clean_detected,
                           const std::vector<bool>& adv_detected);

// `images` may be at detector resolution or an integer multiple of it.
double p_at_05(const DetectorNet& net, const std::vector<Image>& images, double threshold = 0.5);
double asr(const DetectorNet& net, const std::vector<Image>& clean_images,
           const std::vector<Image>& adv_images, double threshold = 0.5);

// Unit-scale silhouette-masked MSE averaged over samples with a non-empty
// silhouette; multiply by 255^2 for the reported 8-bit figure.
double mse_unit(const std::vector<RenderOutput>& renders, const std::vector<const Image*>& scenes);
double mse_naturalness(const std::vector<RenderOutput>& renders,
                       const std::vector<const Image*>& scenes);

// Evaluates a camouflage on every sample of `data`: the clean object wears
// `clean_tex`, the adversarial one compose_texture(global(scene), local, mask).
EvalReport evaluate_camouflage(const SampleSet& data, const DetectorNet& net,
                               const TextureMap& clean_tex, const GlobalTextures& global,
                               const TextureMap& local_tex, const FaceMask& mask,
                               double threshold = 0.5);

// Same, with the adversarial texture fixed to the global texture alone.
EvalReport evaluate_global_only(const SampleSet& data, const DetectorNet& net,
                                const TextureMap& clean_tex, const GlobalTextures& global,
                                double threshold = 0.5);

}  // namespace camoforge
