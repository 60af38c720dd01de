#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "camoforge/dac.hpp"
#include "camoforge/de_search.hpp"
#include "camoforge/detector.hpp"
#include "camoforge/metrics.hpp"
#include "camoforge/scene.hpp"
#include "json.hpp"

namespace camoforge {

struct DetectorSettings {
  int input_size = 64;
  int epochs = 30;
  double lr = 0.01;
  int batch_size = 8;
  double threshold = 0.5;
};

struct FitnessBudget {
  int epochs_stage2 = 2;
  int eval_subset = 40;
};

enum class AttackMode { stage1_only, dac_full, dac_masked, de_dac, adaptive };

std::string to_string(AttackMode mode);
AttackMode attack_mode_from_string(const std::string& name);

struct RunConfig {
  std::string mesh = "builtin:boxperson";
  std::vector<std::string> scene_kinds{"forest"};
  int scenes_per_kind = 4;
  int n_renders = 50;
  int n_test_renders = 10;
  int image_size = 128;
  CameraRanges camera;
  std::uint64_t seed = 0;
  DacConfig dac;
  DEConfig de;
  FitnessBudget fitness;
  DetectorSettings detector;
  double face_budget = 0.5;  // fraction of n_m for dac-masked / de-dac / adaptive
  std::string faces_file;    // explicit face list for dac-masked
  std::string output_dir = "camoforge_out";

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);
// Hash over every field that influences results (output_dir and jobs excluded).
std::string config_hash(const RunConfig& cfg);

// Scenes, splits and precomputed coverage for one configuration.
struct World {
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<const std::vector<SceneImage>> scenes;
  Dataset train;
  Dataset test;
  SampleSet train_set;
  SampleSet test_set;
};

std::vector<SceneImage> make_scenes(const RunConfig& cfg);
World build_world(const RunConfig& cfg);
World build_world(const RunConfig& cfg, Mesh mesh, std::vector<SceneImage> scenes,
                  Dataset train, Dataset test);

// Object-vs-background task: for every training sample, a fresh background
// of the sample's scene kind, alone and with a uniformly colored object.
std::vector<LabeledImage> build_detector_task(const World& world, const DetectorNet& net,
                                              std::uint64_t seed);
DetectorTrainResult train_default_detector(const World& world, const RunConfig& cfg);

int face_budget_count(double fraction, int n_m);
// Seeded random subset of `count` faces, 1-based and increasing.
std::vector<int> random_faces(int count, int n_m, std::uint64_t seed);

FitnessContext make_fitness_context(const World& world, const GlobalTextures& global,
                                    const DetectorNet& net, const RunConfig& cfg);

struct AttackOutcome {
  AttackMode mode;
  GlobalTextures global;
  std::optional<TextureMap> local_tex;
  FaceMask mask;
  EvalReport eval;
  std::vector<TrainReport> reports;
  std::optional<SearchReport> search;

  // Final per-scene adversarial texture.
  TextureMap adversarial_texture(int scene_id) const;
};

// Runs one attack pipeline end to end and evaluates it on the test split.
// `stage1` may supply an already trained universal global texture.
AttackOutcome run_attack(const World& world, const DetectorNet& net, const RunConfig& cfg,
                         AttackMode mode, const std::optional<TextureMap>& stage1 = std::nullopt,
                         const std::optional<std::vector<int>>& faces = std::nullopt);

// Texture file: [[r,g,b], ...] with 9 significant digits. An object with a
// "colors" member is also accepted on read.
std::string encode_texture(const TextureMap& tex);
TextureMap decode_texture(const std::string& text);

nlohmann::json to_json(const EvalReport& rep);
nlohmann::json to_json(const TrainReport& rep);
nlohmann::json to_json(const SearchReport& rep);
std::string train_report_csv(const TrainReport& rep);
std::string search_trace_csv(const SearchReport& rep);

}  // namespace camoforge
