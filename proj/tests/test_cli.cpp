#include <gtest/gtest.h>

#include <filesystem>
#include <map>

#include "camoforge/cli.hpp"
#include "camoforge/io.hpp"

namespace camoforge {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("camoforge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  int run(const std::string& out, std::vector<std::string> args, bool small = true) {
    std::vector<std::string> full{"camoforge"};
    full.push_back(args.front());
    if (small) {
      // Later flags win, so the test's own arguments come after these.
      for (const char* a : {"--renders", "6", "--test-renders", "3", "--image-size", "32", "--detector-size",
                            "16", "--scenes-per-kind", "2", "--detector-epochs", "5", "--epochs2", "2",
                            "--pop-size", "4", "--max-iters", "1", "--fitness-epochs", "1", "--fitness-subset",
                            "4"})
        full.push_back(a);
    }
    full.insert(full.end(), args.begin() + 1, args.end());
    full.push_back("--out");
    full.push_back((root_ / out).string());
    full.push_back("-q");
    args = std::move(full);
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  }

  fs::path root_;
};

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return files;
}

TEST_F(CliTest, DefaultGenDataSampleCounts) {
  ASSERT_EQ(run("d", {"gen-data"}, false), 0);
  const auto m = nlohmann::json::parse(read_file(root_ / "d" / "manifest.json"));
  EXPECT_EQ(m.at("train").size(), 200u);
  EXPECT_EQ(m.at("test").size(), 40u);
  EXPECT_EQ(m.at("scenes").size(), 4u);
  EXPECT_TRUE(fs::exists(root_ / "d" / "scenes" / "scene_001.ppm"));
  EXPECT_EQ(m.at("config_hash").get<std::string>().size(), 16u);
}

TEST_F(CliTest, SingleSceneSingleRender) {
  ASSERT_EQ(run("d", {"gen-data", "--renders", "1", "--scenes", "winter", "--scenes-per-kind", "1"}, false), 0);
  const auto m = nlohmann::json::parse(read_file(root_ / "d" / "manifest.json"));
  EXPECT_EQ(m.at("train").size(), 1u);
  EXPECT_EQ(m.at("scenes")[0].at("kind"), "winter");
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run("a", {"gen-data", "--image-size", "30"}), 2);
  EXPECT_EQ(run("a", {"train-detector"}), 3);  // no manifest
  ASSERT_EQ(run("a", {"gen-data"}), 0);
  EXPECT_EQ(run("a", {"attack", "--mode", "dac-full"}), 3);  // no detector
  EXPECT_EQ(run("a", {"attack", "--mode", "nope"}), 2);
  EXPECT_EQ(run("a", {"sweep", "--axis", "colors"}), 2);
  EXPECT_EQ(run("a", {"attack"}), 2);  // --mode is required
  EXPECT_EQ(run("a", {"gen-data", "--config", (root_ / "absent.json").string()}), 2);
  write_file_atomic(root_ / "bad.json", R"({"seed": "seven"})");
  EXPECT_EQ(run("a", {"gen-data", "--config", (root_ / "bad.json").string()}), 2);
  // A different dataset configuration needs its own gen-data.
  EXPECT_EQ(run("a", {"train-detector", "--seed", "9"}), 3);
  ASSERT_EQ(run("a", {"train-detector"}), 0);
  write_file_atomic(root_ / "faces.txt", "1\n2\n999\n");
  EXPECT_EQ(run("a", {"attack", "--mode", "dac-masked", "--faces", (root_ / "faces.txt").string()}), 2);
  write_file_atomic(root_ / "faces.txt", "1\nx\n");
  EXPECT_EQ(run("a", {"attack", "--mode", "dac-masked", "--faces", (root_ / "faces.txt").string()}), 2);
  EXPECT_EQ(run("a", {"eval", "--run", "dac-full"}), 3);
}

TEST_F(CliTest, ConfigFileWithOverrides) {
  write_file_atomic(root_ / "cfg.json", R"({"seed": 5, "n_renders": 2, "scenes_per_kind": 1})");
  ASSERT_EQ(run("c", {"gen-data", "--config", (root_ / "cfg.json").string(), "--renders", "3"}, false), 0);
  const auto m = nlohmann::json::parse(read_file(root_ / "c" / "manifest.json"));
  EXPECT_EQ(m.at("seed"), 5);
  EXPECT_EQ(m.at("train").size(), 3u);
}

TEST_F(CliTest, RerunIsNoOpUnlessForced) {
  ASSERT_EQ(run("r", {"gen-data"}), 0);
  ASSERT_EQ(run("r", {"train-detector"}), 0);
  ASSERT_EQ(run("r", {"attack", "--mode", "dac-masked"}), 0);
  const fs::path eval = root_ / "r" / "runs" / "dac-masked" / "eval.json";
  const auto stamp = fs::last_write_time(eval);
  const auto before = tree(root_ / "r");
  ASSERT_EQ(run("r", {"attack", "--mode", "dac-masked"}), 0);
  EXPECT_EQ(fs::last_write_time(eval), stamp);
  EXPECT_EQ(tree(root_ / "r"), before);
  ASSERT_EQ(run("r", {"attack", "--mode", "dac-masked", "--force"}), 0);
  EXPECT_EQ(tree(root_ / "r"), before);  // recomputed, same bytes
  // A changed weight is a different run configuration.
  ASSERT_EQ(run("r", {"attack", "--mode", "dac-masked", "--lambda1", "0.02"}), 0);
  EXPECT_NE(read_file(eval), before.at("runs/dac-masked/eval.json"));
}

TEST_F(CliTest, AllSubcommandsAreByteDeterministic) {
  for (const char* out : {"x", "y"}) {
    ASSERT_EQ(run(out, {"gen-data"}), 0);
    ASSERT_EQ(run(out, {"train-detector"}), 0);
    for (const char* mode : {"stage1-only", "dac-full", "dac-masked", "de-dac", "adaptive"})
      ASSERT_EQ(run(out, {"attack", "--mode", mode}), 0) << mode;
    ASSERT_EQ(run(out, {"sweep", "--axis", "lambda1", "--values", "0.0005", "0.02"}), 0);
    ASSERT_EQ(run(out, {"eval", "--run", "de-dac"}), 0);
  }
  const auto x = tree(root_ / "x"), y = tree(root_ / "y");
  ASSERT_EQ(x.size(), y.size());
  for (const auto& [name, bytes] : x) EXPECT_EQ(bytes, y.at(name)) << name;
  EXPECT_TRUE(x.count("runs/adaptive/texture_scene_001.json"));
  EXPECT_TRUE(x.count("runs/de-dac/search.json"));
  EXPECT_TRUE(x.count("runs/dac-full/after_00.ppm"));
}

TEST_F(CliTest, LedgerHasOneRowPerRun) {
  ASSERT_EQ(run("l", {"gen-data"}), 0);
  ASSERT_EQ(run("l", {"train-detector"}), 0);
  ASSERT_EQ(run("l", {"attack", "--mode", "stage1-only"}), 0);
  ASSERT_EQ(run("l", {"attack", "--mode", "stage1-only", "--force"}), 0);
  ASSERT_EQ(run("l", {"attack", "--mode", "dac-full"}), 0);
  const std::string csv = read_file(root_ / "l" / "results.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  EXPECT_EQ(csv.rfind("run_id,mode,config_hash,seed,", 0), 0u);
}

TEST_F(CliTest, SinglePointSweepWritesOneRow) {
  ASSERT_EQ(run("s", {"gen-data"}), 0);
  ASSERT_EQ(run("s", {"train-detector"}), 0);
  ASSERT_EQ(run("s", {"sweep", "--axis", "faces", "--values", "0.5"}), 0);
  const std::string csv = read_file(root_ / "s" / "sweep_faces.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_NE(csv.find("faces,0.5,sweep-faces-0.5,"), std::string::npos);
}

TEST_F(CliTest, ZeroEpochDetectorWarns) {
  ASSERT_EQ(run("z", {"gen-data"}), 0);
  ASSERT_EQ(run("z", {"train-detector", "--detector-epochs", "0"}), 0);
  const auto rep = nlohmann::json::parse(read_file(root_ / "z" / "detector" / "report.json"));
  EXPECT_TRUE(rep.contains("warning"));
  EXPECT_LT(rep.at("train_accuracy").get<double>(), 0.95);
}

TEST_F(CliTest, EvalOfTextureFile) {
  ASSERT_EQ(run("e", {"gen-data"}), 0);
  ASSERT_EQ(run("e", {"train-detector"}), 0);
  ASSERT_EQ(run("e", {"attack", "--mode", "dac-full"}), 0);
  const fs::path tex = root_ / "e" / "runs" / "dac-full" / "texture.json";
  ASSERT_EQ(run("e", {"eval", "--texture", tex.string(), "--run", "full-again"}), 0);
  const auto a = nlohmann::json::parse(read_file(root_ / "e" / "runs" / "dac-full" / "eval.json"));
  const auto b = nlohmann::json::parse(read_file(root_ / "e" / "runs" / "eval-full-again" / "eval.json"));
  EXPECT_EQ(a.at("asr"), b.at("asr"));
  EXPECT_NEAR(a.at("mse_unit").get<double>(), b.at("mse_unit").get<double>(), 1e-8);
  write_file_atomic(root_ / "short.json", "[[0.1, 0.2, 0.3]]");
  EXPECT_EQ(run("e", {"eval", "--texture", (root_ / "short.json").string()}), 2);
}

}  // namespace
}  // namespace camoforge
