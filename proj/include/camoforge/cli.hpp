#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "camoforge/pipeline.hpp"

namespace camoforge {

// Output directory layout:
//   manifest.json, scenes/scene_NNN.ppm       gen-data
//   detector/detector.bin, detector/report.json
//   stage1/texture.json, stage1/report.json   shared universal T_g
//   runs/<run_id>/...                         attack, sweep points, eval
//   results.csv                               one row per run id
//   sweep_<axis>.csv
struct CommandOptions {
  bool force = false;
  bool quiet = false;  // suppress progress lines on stderr
};

enum class SweepAxis { faces, lambda1 };
std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& name);
std::vector<double> sweep_values(SweepAxis axis);

// Hashes over the configuration subsets each stage depends on.
std::string data_hash(const RunConfig& cfg);
std::string detector_hash(const RunConfig& cfg);

void cmd_gen_data(const RunConfig& cfg, const CommandOptions& opts = {});
// Rebuilds the world recorded in manifest.json.
World load_world(const RunConfig& cfg);

DetectorTrainResult cmd_train_detector(const RunConfig& cfg, const CommandOptions& opts = {});

EvalReport cmd_attack(const RunConfig& cfg, AttackMode mode, const CommandOptions& opts = {});

struct SweepPoint {
  double value = 0.0;
  EvalReport eval;
};
std::vector<SweepPoint> cmd_sweep(const RunConfig& cfg, SweepAxis axis,
                                  const std::optional<std::vector<double>>& values = std::nullopt,
                                  const CommandOptions& opts = {});

// Re-evaluates stored adversarial textures of `run_id`, or one texture file
// applied to every scene, on the test split.
EvalReport cmd_eval(const RunConfig& cfg, const std::string& run_id,
                    const std::optional<std::filesystem::path>& texture_file = std::nullopt,
                    const CommandOptions& opts = {});

// Face list file: one 1-based index per line.
std::vector<int> read_faces_file(const std::filesystem::path& path);
std::string encode_faces(const std::vector<int>& faces);

// Parses argv and runs one subcommand. Returns the process exit code:
// 0 ok, 1 other failure, 2 config error, 3 missing prerequisite, 4 numerical.
int run_cli(int argc, const char* const* argv);

}  // namespace camoforge
