#include "camoforge/dac.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <stdexcept>

#include "camoforge/common.hpp"

namespace camoforge {

std::vector<int> FaceMask::indices() const {
  std::vector<int> out;
  out.reserve(count);
  for (int f = 0; f < size(); ++f) {
    if (bits[f]) out.push_back(f + 1);
  }
  return out;
}

FaceMask make_face_mask(const std::vector<int>& indices, int n_m) {
  if (n_m < 1) throw std::invalid_argument("make_face_mask: n_m must be >= 1");
  if (indices.empty()) throw std::invalid_argument("make_face_mask: at least one face required");
  FaceMask mask{std::vector<std::uint8_t>(n_m, 0), 0};
  for (int idx : indices) {
    if (idx < 1 || idx > n_m) {
      throw std::invalid_argument("make_face_mask: face index " + std::to_string(idx) +
                                  " outside [1, " + std::to_string(n_m) + "]");
    }
    if (mask.bits[idx - 1]) {
      throw std::invalid_argument("make_face_mask: duplicate face index " + std::to_string(idx));
    }
    mask.bits[idx - 1] = 1;
    ++mask.count;
  }
  return mask;
}

FaceMask full_mask(int n_m) {
  std::vector<int> all(n_m);
  std::iota(all.begin(), all.end(), 1);
  return make_face_mask(all, n_m);
}

TextureMap compose_texture(const TextureMap& global_tex, const TextureMap& local_tex,
                           const FaceMask& mask) {
  const int n = mask.size();
  if (global_tex.face_count() != n || local_tex.face_count() != n) {
    throw std::invalid_argument("compose_texture: length mismatch");
  }
  TextureMap out(n);
  for (int f = 0; f < n; ++f) {
    const TextureMap& src = mask.selected(f) ? local_tex : global_tex;
    for (int c = 0; c < 3; ++c) out.at(f, c) = src.at(f, c);
  }
  return out;
}

void DacConfig::validate() const {
  if (!(lambda1 >= 0) || !(lambda2 >= 0)) throw ConfigError("lambda1/lambda2 must be >= 0");
  if (!(lr > 0)) throw ConfigError("lr must be > 0");
  if (epochs_stage1 < 0 || epochs_stage2 < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

SampleSet::SampleSet(std::shared_ptr<const Mesh> mesh,
                     std::shared_ptr<const std::vector<SceneImage>> scenes, const Dataset& dataset)
    : mesh_(std::move(mesh)), scenes_(std::move(scenes)) {
  entries_.reserve(dataset.size());
  for (const auto& s : dataset.samples) {
    std::size_t index = scenes_->size();
    for (std::size_t j = 0; j < scenes_->size(); ++j) {
      if ((*scenes_)[j].scene_id == s.scene_id) index = j;
    }
    if (index == scenes_->size()) {
      throw std::invalid_argument("sample references unknown scene " + std::to_string(s.scene_id));
    }
    const Image& img = (*scenes_)[index].pixels;
    if (img.height != s.camera.height || img.width != s.camera.width) {
      throw std::invalid_argument("scene and camera image sizes differ");
    }
    entries_.push_back(
        {s.scene_id, index, s.camera, std::make_shared<const Coverage>(rasterize(*mesh_, s.camera))});
  }
}

SampleSet SampleSet::subset(const std::vector<std::size_t>& which) const {
  SampleSet out;
  out.mesh_ = mesh_;
  out.scenes_ = scenes_;
  for (std::size_t i : which) out.entries_.push_back(entries_.at(i));
  return out;
}

SampleSet SampleSet::for_scene(int scene_id) const {
  std::vector<std::size_t> which;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].scene_id == scene_id) which.push_back(i);
  }
  return subset(which);
}

std::vector<int> SampleSet::scene_ids() const {
  std::set<int> ids;
  for (const auto& e : entries_) ids.insert(e.scene_id);
  return {ids.begin(), ids.end()};
}

const TextureMap& GlobalTextures::for_scene(int scene_id) const {
  if (universal_) return *universal_;
  auto it = per_scene_.find(scene_id);
  if (it == per_scene_.end()) {
    throw std::out_of_range("no global texture trained for scene " + std::to_string(scene_id));
  }
  return it->second;
}

std::vector<double> TrainReport::epoch_mean(const std::vector<double>& trace) const {
  std::vector<double> out;
  if (steps_per_epoch <= 0) return out;
  for (std::size_t start = 0; start < trace.size(); start += steps_per_epoch) {
    const std::size_t end = std::min(trace.size(), start + steps_per_epoch);
    double acc = 0.0;
    for (std::size_t i = start; i < end; ++i) acc += trace[i];
    out.push_back(acc / static_cast<double>(end - start));
  }
  return out;
}

namespace {

// Stream ids for derive_seed; fixed so results are reproducible per seed.
constexpr std::uint64_t kStage1Init = 1, kStage2Init = 2, kStage2Order = 3, kStage1Order = 4;

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Stage1Result train_stage1(const SampleSet& data, const DacConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train_stage1: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();
  const int n_m = data.mesh().face_count();
  Stage1Result result{noise_texture(n_m, derive_seed(cfg.seed, kStage1Init)), {}};
  TrainReport& report = result.report;
  report.stage = "stage1";
  report.epochs = cfg.epochs_stage1;
  report.seed = cfg.seed;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  report.steps_per_epoch = static_cast<int>((data.size() + batch - 1) / batch);

  AdamState adam(result.global_tex.colors.size());
  Rng order_rng(derive_seed(cfg.seed, kStage1Order));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs_stage1; ++epoch) {
    shuffle(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::vector<RenderOutput> renders;
      std::vector<const Image*> scenes;
      for (std::size_t k = start; k < end; ++k) {
        renders.push_back(shade(data.coverage(order[k]), result.global_tex));
        scenes.push_back(&data.scene(order[k]));
      }
      const FirstLoss loss = loss_first(renders, scenes);
      TextureMap grad(n_m);
      for (std::size_t r = 0; r < renders.size(); ++r) {
        const TextureMap g = backprop_to_texture(renders[r], loss.grads[r], n_m);
        for (std::size_t i = 0; i < grad.colors.size(); ++i) grad.colors[i] += g.colors[i];
      }
      adam_step(result.global_tex.colors, grad.colors, adam, cfg.lr);
      result.global_tex.clamp01();
      report.first.push_back(loss.value);
    }
  }
  report.wall_seconds = seconds_since(t0);
  return result;
}

Image adversarial_image(const SampleSet& data, std::size_t sample, const TextureMap& texture) {
  return compose(shade(data.coverage(sample), texture), data.scene(sample));
}

Stage2Terms stage2_terms(const SampleSet& data, std::size_t sample, const TextureMap& global_tex,
                         const TextureMap& local_tex, const FaceMask& mask,
                         const DetectorNet& net, const DacConfig& cfg, bool want_grad) {
  const int n_m = data.mesh().face_count();
  const TextureMap adv_tex = compose_texture(global_tex, local_tex, mask);
  const RenderOutput out = shade(data.coverage(sample), adv_tex);
  const Image adv_img = compose(out, data.scene(sample));
  const int factor = pooling_factor(net, adv_img);

  DetectorTrace trace;
  const double s = sigmoid(detector_logit(net, downsample(adv_img, factor), &trace));
  const ColorLoss color = loss_color(global_tex, local_tex, mask);
  const SmoothLoss smooth = loss_smooth(out.color);

  Stage2Terms terms;
  terms.adv = s;
  terms.color = color.value;
  terms.smooth = smooth.value;
  terms.total = loss_total(terms.adv, terms.color, terms.smooth, cfg);
  if (!want_grad) return terms;

  Image input_grad;
  detector_backward(net, trace, s * (1.0 - s), {}, &input_grad);
  Image pixel_grad = downsample_backward(input_grad, factor);
  for (std::size_t p = 0; p < out.face_id.size(); ++p) {
    const double m = out.silhouette.data[p];
    for (int c = 0; c < 3; ++c) {
      const std::size_t i = p * 3 + c;
      pixel_grad.data[i] = m * pixel_grad.data[i] + cfg.lambda2 * smooth.grad.data[i];
    }
  }
  terms.grad = backprop_to_texture(out, pixel_grad, n_m);
  for (int f = 0; f < n_m; ++f) {
    for (int c = 0; c < 3; ++c) {
      terms.grad.at(f, c) =
          mask.selected(f) ? terms.grad.at(f, c) + cfg.lambda1 * color.grad.at(f, c) : 0.0;
    }
  }
  return terms;
}

Stage2Result train_stage2(const SampleSet& data, const GlobalTextures& global,
                          const FaceMask& mask, const DetectorNet& net, const DacConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw std::invalid_argument("train_stage2: empty dataset");
  const int n_m = data.mesh().face_count();
  if (mask.size() != n_m) throw std::invalid_argument("train_stage2: mask length mismatch");
  for (int id : data.scene_ids()) global.for_scene(id);

  const auto t0 = std::chrono::steady_clock::now();
  Stage2Result result{noise_texture(n_m, derive_seed(cfg.seed, kStage2Init)), {}};
  TrainReport& report = result.report;
  report.stage = "stage2";
  report.epochs = cfg.epochs_stage2;
  report.seed = cfg.seed;
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  report.steps_per_epoch = static_cast<int>((data.size() + batch - 1) / batch);

  AdamState adam(result.local_tex.colors.size());
  Rng order_rng(derive_seed(cfg.seed, kStage2Order));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  TextureMap grad(n_m);

  for (int epoch = 0; epoch < cfg.epochs_stage2; ++epoch) {
    shuffle(order, order_rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      std::fill(grad.colors.begin(), grad.colors.end(), 0.0);
      double adv = 0, color = 0, smooth = 0, total = 0;
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Stage2Terms t = stage2_terms(data, i, global.for_scene(data.scene_id(i)),
                                           result.local_tex, mask, net, cfg);
        for (std::size_t j = 0; j < grad.colors.size(); ++j) grad.colors[j] += inv * t.grad.colors[j];
        adv += inv * t.adv;
        color += inv * t.color;
        smooth += inv * t.smooth;
        total += inv * t.total;
      }
      adam_step(result.local_tex.colors, grad.colors, adam, cfg.lr);
      result.local_tex.clamp01();
      report.adv.push_back(adv);
      report.color.push_back(color);
      report.smooth.push_back(smooth);
      report.total.push_back(total);
    }
  }
  report.wall_seconds = seconds_since(t0);
  return result;
}

std::map<int, TextureMap> train_stage1_per_scene(const SampleSet& data, const DacConfig& cfg,
                                                 std::vector<TrainReport>& reports) {
  const std::vector<int> ids = data.scene_ids();
  DacConfig per_scene = cfg;
  per_scene.epochs_stage1 = cfg.epochs_stage1 * static_cast<int>(ids.size());
  std::map<int, TextureMap> out;
  for (int id : ids) {
    Stage1Result s1 = train_stage1(data.for_scene(id), per_scene);
    out.emplace(id, std::move(s1.global_tex));
    reports.push_back(std::move(s1.report));
  }
  return out;
}

AdaptiveResult train_adaptive(const SampleSet& data, const FaceMask& mask, const DetectorNet& net,
                              const DacConfig& cfg) {
  AdaptiveResult result;
  result.global_tex = train_stage1_per_scene(data, cfg, result.stage1_reports);
  Stage2Result s2 = train_stage2(data, GlobalTextures(result.global_tex), mask, net, cfg);
  result.local_tex = std::move(s2.local_tex);
  result.stage2_report = std::move(s2.report);
  return result;
}

TextureMap reference_texture(const Mesh& mesh) {
  double lo = 1e300, hi = -1e300;
  for (const auto& v : mesh.vertices()) {
    lo = std::min(lo, v[1]);
    hi = std::max(hi, v[1]);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  TextureMap tex(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    double y = 0.0;
    for (int k = 0; k < 3; ++k) y += mesh.vertices()[mesh.faces()[f][k]][1];
    const double t = (y / 3.0 - lo) / span;
    std::array<double, 3> col;
    if (t > 0.82) {
      col = {0.87, 0.68, 0.55};  // skin
    } else if (t > 0.47) {
      col = {0.78, 0.16, 0.14};  // shirt
    } else {
      col = {0.13, 0.17, 0.42};  // trousers
    }
    for (int c = 0; c < 3; ++c) tex.at(f, c) = col[c];
  }
  return tex;
}

}  // namespace camoforge
