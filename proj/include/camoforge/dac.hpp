#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camoforge/adam.hpp"
#include "camoforge/detector.hpp"
#include "camoforge/losses.hpp"
#include "camoforge/mesh.hpp"
#include "camoforge/renderer.hpp"
#include "camoforge/scene.hpp"

namespace camoforge {

// Which faces carry the local texture. Construct via make_face_mask.
struct FaceMask {
  std::vector<std::uint8_t> bits;  // 0-based storage, one entry per face
  int count = 0;

  int size() const { return static_cast<int>(bits.size()); }
  bool selected(int face0) const { return bits[face0] != 0; }
  std::vector<int> indices() const;  // 1-based, increasing

  bool operator==(const FaceMask&) const = default;
};

// `indices` are 1-based face numbers; empty, duplicate or out-of-range
// entries are rejected.
FaceMask make_face_mask(const std::vector<int>& indices, int n_m);
FaceMask full_mask(int n_m);

// T_adv = T_g * (1 - M) + M * T_l
TextureMap compose_texture(const TextureMap& global_tex, const TextureMap& local_tex,
                           const FaceMask& mask);

struct DacConfig {
  double lambda1 = 5e-4;
  double lambda2 = 1e-7;
  double lr = 0.01;
  int epochs_stage1 = 1;
  int epochs_stage2 = 10;
  int batch_size = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Mesh, scenes and samples with their coverage rasters precomputed once.
// Immutable after construction and cheap to copy (shared storage).
class SampleSet {
 public:
  SampleSet(std::shared_ptr<const Mesh> mesh, std::shared_ptr<const std::vector<SceneImage>> scenes,
            const Dataset& dataset);

  std::size_t size() const { return entries_.size(); }
  const Mesh& mesh() const { return *mesh_; }
  const std::vector<SceneImage>& scenes() const { return *scenes_; }
  int scene_id(std::size_t i) const { return entries_[i].scene_id; }
  const Image& scene(std::size_t i) const { return (*scenes_)[entries_[i].scene_index].pixels; }
  const CameraParams& camera(std::size_t i) const { return entries_[i].camera; }
  const Coverage& coverage(std::size_t i) const { return *entries_[i].coverage; }

  SampleSet subset(const std::vector<std::size_t>& which) const;
  SampleSet for_scene(int scene_id) const;
  std::vector<int> scene_ids() const;  // distinct, increasing

 private:
  struct Entry {
    int scene_id;
    std::size_t scene_index;
    CameraParams camera;
    std::shared_ptr<const Coverage> coverage;
  };
  SampleSet() = default;

  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<const std::vector<SceneImage>> scenes_;
  std::vector<Entry> entries_;
};

// Global texture lookup: one universal texture, or one per scene id.
class GlobalTextures {
 public:
  GlobalTextures() = default;
  explicit GlobalTextures(TextureMap universal) : universal_(std::move(universal)) {}
  explicit GlobalTextures(std::map<int, TextureMap> per_scene) : per_scene_(std::move(per_scene)) {}

  const TextureMap& for_scene(int scene_id) const;
  bool adaptive() const { return !universal_.has_value(); }
  const std::map<int, TextureMap>& per_scene() const { return per_scene_; }
  const TextureMap& universal() const { return *universal_; }

 private:
  std::optional<TextureMap> universal_;
  std::map<int, TextureMap> per_scene_;
};

struct TrainReport {
  std::string stage;
  int epochs = 0;
  int steps_per_epoch = 0;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  // One entry per optimizer step; Stage 1 fills only `first`.
  std::vector<double> first, adv, color, smooth, total;

  std::vector<double> epoch_mean(const std::vector<double>& trace) const;
};

struct Stage1Result {
  TextureMap global_tex;
  TrainReport report;
};

// Adam over T_g (uniform noise init) on loss_first with mini-batches of
// cfg.batch_size samples, shuffled every epoch.
Stage1Result train_stage1(const SampleSet& data, const DacConfig& cfg);

// Losses and gradient of one Stage-2 sample.
struct Stage2Terms {
  double adv = 0.0, color = 0.0, smooth = 0.0, total = 0.0;
  TextureMap grad;  // d total / d T_l, zero on unmasked faces
};

Stage2Terms stage2_terms(const SampleSet& data, std::size_t sample, const TextureMap& global_tex,
                         const TextureMap& local_tex, const FaceMask& mask,
                         const DetectorNet& net, const DacConfig& cfg, bool want_grad = true);

// The composed adversarial image for one sample (detector resolution not applied).
Image adversarial_image(const SampleSet& data, std::size_t sample, const TextureMap& texture);

struct Stage2Result {
  TextureMap local_tex;
  TrainReport report;
};

Stage2Result train_stage2(const SampleSet& data, const GlobalTextures& global,
                          const FaceMask& mask, const DetectorNet& net, const DacConfig& cfg);

struct AdaptiveResult {
  std::map<int, TextureMap> global_tex;
  TextureMap local_tex;
  std::vector<TrainReport> stage1_reports;
  TrainReport stage2_report;
};

// Stage 1 once per scene, seeded identically. Epochs are scaled by the scene
// count so each T_g gets as many Adam steps as one universal run.
std::map<int, TextureMap> train_stage1_per_scene(const SampleSet& data, const DacConfig& cfg,
                                                 std::vector<TrainReport>& reports);

// Per-scene Stage 1, then one universal T_l.
AdaptiveResult train_adaptive(const SampleSet& data, const FaceMask& mask, const DetectorNet& net,
                              const DacConfig& cfg);

// Face colors used for the clean ("raw") object: skin / shirt / trousers by height.
TextureMap reference_texture(const Mesh& mesh);

}  // namespace camoforge
