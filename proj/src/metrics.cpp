#include "camoforge/metrics.hpp"

#include <stdexcept>

namespace camoforge {

double detection_rate(const std::vector<bool>& detected) {
  if (detected.empty()) throw std::invalid_argument("p_at_05: empty image list");
  std::size_t hits = 0;
  for (bool d : detected) hits += d ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(detected.size());
}

double attack_success_rate(const std::vector<bool>& clean_detected,
                           const std::vector<bool>& adv_detected) {
  if (clean_detected.size() != adv_detected.size()) {
    throw std::invalid_argument("asr: clean and adversarial lists differ in length");
  }
  std::size_t base = 0, evaded = 0;
  for (std::size_t i = 0; i < clean_detected.size(); ++i) {
    if (!clean_detected[i]) continue;
    ++base;
    if (!adv_detected[i]) ++evaded;
  }
  if (base == 0) throw std::domain_error("undefined ASR: no clean image was detected");
  return static_cast<double>(evaded) / static_cast<double>(base);
}

namespace {

std::vector<bool> detect_all(const DetectorNet& net, const std::vector<Image>& images,
                             double threshold) {
  std::vector<bool> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(detect(net, detector_input(net, img), threshold));
  return out;
}

}  // namespace

double p_at_05(const DetectorNet& net, const std::vector<Image>& images, double threshold) {
  return detection_rate(detect_all(net, images, threshold));
}

double asr(const DetectorNet& net, const std::vector<Image>& clean_images,
           const std::vector<Image>& adv_images, double threshold) {
  return attack_success_rate(detect_all(net, clean_images, threshold),
                             detect_all(net, adv_images, threshold));
}

double mse_unit(const std::vector<RenderOutput>& renders, const std::vector<const Image*>& scenes) {
  if (renders.size() != scenes.size()) throw std::invalid_argument("mse: lists not aligned");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t s = 0; s < renders.size(); ++s) {
    const auto& r = renders[s];
    if (!scenes[s] || !r.color.same_shape(*scenes[s])) {
      throw std::invalid_argument("mse: dimension mismatch");
    }
    double sq = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < r.face_id.size(); ++p) {
      if (r.face_id[p] == 0) continue;
      for (int c = 0; c < 3; ++c) {
        const double d = r.color.data[p * 3 + c] - scenes[s]->data[p * 3 + c];
        sq += d * d;
      }
      n += 3;
    }
    if (n == 0) continue;
    total += sq / static_cast<double>(n);
    ++counted;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

double mse_naturalness(const std::vector<RenderOutput>& renders,
                       const std::vector<const Image*>& scenes) {
  return 255.0 * 255.0 * mse_unit(renders, scenes);
}

namespace {

template <typename TextureFor>
EvalReport evaluate_impl(const SampleSet& data, const DetectorNet& net, const TextureMap& clean_tex,
                         TextureFor texture_for, double threshold) {
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty sample set");
  std::vector<bool> clean, adv;
  double mse_total = 0.0;
  std::size_t mse_count = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Image& scene = data.scene(i);
    const RenderOutput clean_out = shade(data.coverage(i), clean_tex);
    clean.push_back(detect(net, detector_input(net, compose(clean_out, scene)), threshold));
    const RenderOutput adv_out = shade(data.coverage(i), texture_for(i));
    adv.push_back(detect(net, detector_input(net, compose(adv_out, scene)), threshold));
    if (adv_out.covered_pixels() > 0) {
      mse_total += mse_unit({adv_out}, {&scene});
      ++mse_count;
    }
  }
  EvalReport rep;
  rep.n_images = static_cast<int>(data.size());
  rep.threshold = threshold;
  rep.p_at_05 = detection_rate(adv);
  rep.clean_p_at_05 = detection_rate(clean);
  rep.asr = attack_success_rate(clean, adv);
  rep.mse_unit = mse_count ? mse_total / static_cast<double>(mse_count) : 0.0;
  rep.mse_naturalness = 255.0 * 255.0 * rep.mse_unit;
  return rep;
}

}  // namespace

EvalReport evaluate_camouflage(const SampleSet& data, const DetectorNet& net,
                               const TextureMap& clean_tex, const GlobalTextures& global,
                               const TextureMap& local_tex, const FaceMask& mask,
                               double threshold) {
  return evaluate_impl(
      data, net, clean_tex,
      [&](std::size_t i) { return compose_texture(global.for_scene(data.scene_id(i)), local_tex, mask); },
      threshold);
}

EvalReport evaluate_global_only(const SampleSet& data, const DetectorNet& net,
                                const TextureMap& clean_tex, const GlobalTextures& global,
                                double threshold) {
  return evaluate_impl(
      data, net, clean_tex, [&](std::size_t i) { return global.for_scene(data.scene_id(i)); },
      threshold);
}

}  // namespace camoforge
