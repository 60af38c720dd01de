#include "camoforge/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(SweepAxis axis) { return axis == SweepAxis::faces ? "faces" : "lambda1"; }

SweepAxis sweep_axis_from_string(const std::string& name) {
  if (name == "faces") return SweepAxis::faces;
  if (name == "lambda1") return SweepAxis::lambda1;
  throw ConfigError("unknown sweep axis: " + name);
}

std::vector<double> sweep_values(SweepAxis axis) {
  if (axis == SweepAxis::faces) return {0.25, 0.5, 0.75, 1.0};
  return {0.0001, 0.0005, 0.01, 0.02, 0.03};
}

namespace {

json hashed_subset(const RunConfig& cfg, std::initializer_list<const char*> keys) {
  const json all = to_json(cfg);
  json j;
  for (const char* k : keys) j[k] = all.at(k);
  return j;
}

json data_json(const RunConfig& cfg) {
  return hashed_subset(cfg, {"mesh", "scene_kinds", "scenes_per_kind", "n_renders", "n_test_renders",
                             "image_size", "camera", "seed"});
}

std::string stage1_hash(const RunConfig& cfg) {
  json j = data_json(cfg);
  j["lr"] = cfg.dac.lr;
  j["epochs_stage1"] = cfg.dac.epochs_stage1;
  j["batch_size"] = cfg.dac.batch_size;
  return hex64(fnv1a(j.dump()));
}

// Config as recorded in artifacts: no output location, no job count.
json recorded_config(const RunConfig& cfg) {
  json j = to_json(cfg);
  j.erase("output_dir");
  j["de"].erase("jobs");
  return j;
}

void log(const CommandOptions& opts, const std::string& msg) {
  if (!opts.quiet) std::fprintf(stderr, "camoforge: %s\n", msg.c_str());
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string seconds_text(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1fs", s);
  return buf;
}

std::optional<json> read_json_if(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return json::parse(read_file(path));
  } catch (const json::exception&) {
    return std::nullopt;  // a damaged record counts as absent
  }
}

json read_json(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw MissingPrerequisite("missing " + what + ": " + path.string());
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw MissingPrerequisite("unreadable " + what + " " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string texture_file_text(const TextureMap& tex, const std::string& hash, std::uint64_t seed) {
  return "{\"config_hash\": \"" + hash + "\", \"seed\": " + std::to_string(seed) +
         ",\n\"colors\": " + encode_texture(tex) + "}\n";
}

TextureMap read_texture_file(const fs::path& path) {
  if (!fs::exists(path)) throw MissingPrerequisite("missing texture file: " + path.string());
  try {
    return decode_texture(read_file(path));
  } catch (const std::out_of_range& e) {
    throw ConfigError("texture file " + path.string() + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

json eval_record(const EvalReport& rep, const std::string& run_id, const std::string& mode,
                 const RunConfig& cfg) {
  json j = to_json(rep);
  j["run_id"] = run_id;
  j["mode"] = mode;
  j["config_hash"] = config_hash(cfg);
  j["seed"] = cfg.seed;
  return j;
}

EvalReport eval_from_record(const json& j) {
  EvalReport r;
  r.p_at_05 = j.at("p_at_05_surrogate").get<double>();
  r.asr = j.at("asr").get<double>();
  r.mse_naturalness = j.at("mse_naturalness").get<double>();
  r.mse_unit = j.at("mse_unit").get<double>();
  r.clean_p_at_05 = j.at("clean_p_at_05_surrogate").get<double>();
  r.n_images = j.at("n_images").get<int>();
  r.threshold = j.at("threshold").get<double>();
  return r;
}

constexpr const char* kLedgerHeader =
    "run_id,mode,config_hash,seed,p_at_05_surrogate,asr,mse_naturalness,mse_unit,"
    "clean_p_at_05_surrogate,n_images";

// One row per run id; a rerun replaces its row in place.
void upsert_ledger(const fs::path& dir, const json& rec) {
  const fs::path path = dir / "results.csv";
  const std::string id = rec.at("run_id").get<std::string>();
  const std::string row = id + "," + rec.at("mode").get<std::string>() + "," +
                          rec.at("config_hash").get<std::string>() + "," +
                          std::to_string(rec.at("seed").get<std::uint64_t>()) + "," +
                          format_double(rec.at("p_at_05_surrogate").get<double>()) + "," +
                          format_double(rec.at("asr").get<double>()) + "," +
                          format_double(rec.at("mse_naturalness").get<double>()) + "," +
                          format_double(rec.at("mse_unit").get<double>()) + "," +
                          format_double(rec.at("clean_p_at_05_surrogate").get<double>()) + "," +
                          std::to_string(rec.at("n_images").get<int>());
  std::vector<std::string> rows;
  if (fs::exists(path)) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(line);
    }
  }
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const std::string& r) { return r.rfind(id + ",", 0) == 0; });
  if (it != rows.end()) *it = row;
  else rows.push_back(row);
  std::string text = std::string(kLedgerHeader) + "\n";
  for (const auto& r : rows) text += r + "\n";
  write_file_atomic(path, text);
}

std::string point_label(double v) { return format_double(v, 6); }

}  // namespace

std::string data_hash(const RunConfig& cfg) { return hex64(fnv1a(data_json(cfg).dump())); }

std::string detector_hash(const RunConfig& cfg) {
  json j = data_json(cfg);
  j["detector"] = to_json(cfg).at("detector");
  return hex64(fnv1a(j.dump()));
}

std::vector<int> read_faces_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("face index file not found: " + path.string());
  std::istringstream in(read_file(path));
  std::vector<int> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(line.substr(first), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    const std::string rest = line.substr(first + used);
    if (used == 0 || rest.find_first_not_of(" \t\r") != std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": not a face index");
    }
    faces.push_back(v);
  }
  std::sort(faces.begin(), faces.end());
  return faces;
}

std::string encode_faces(const std::vector<int>& faces) {
  std::string s;
  for (int f : faces) s += std::to_string(f) + "\n";
  return s;
}

// ---------------------------------------------------------------- gen-data

void cmd_gen_data(const RunConfig& cfg, const CommandOptions& opts) {
  cfg.validate();
  const fs::path dir = cfg.output_dir;
  const fs::path manifest_path = dir / "manifest.json";
  if (!opts.force) {
    if (auto m = read_json_if(manifest_path); m && m->value("data_hash", "") == data_hash(cfg)) {
      log(opts, "gen-data: up to date (" + manifest_path.string() + ")");
      return;
    }
  }
  const Timer timer;
  try {
    fs::create_directories(dir / "scenes");
  } catch (const fs::filesystem_error& e) {
    throw ConfigError(std::string("cannot create output directory: ") + e.what());
  }
  const World world = build_world(cfg);

  json scenes = json::array();
  for (const auto& s : *world.scenes) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d.ppm", s.scene_id);
    write_ppm(dir / "scenes" / name, s.pixels);
    scenes.push_back({{"id", s.scene_id},
                      {"kind", to_string(s.kind)},
                      {"seed", s.seed},
                      {"file", std::string("scenes/") + name}});
  }
  auto samples = [](const Dataset& d) {
    json arr = json::array();
    for (const auto& s : d.samples) {
      arr.push_back({{"scene_id", s.scene_id},
                     {"distance", s.camera.distance},
                     {"elevation", s.camera.elevation_deg},
                     {"azimuth", s.camera.azimuth_deg}});
    }
    return arr;
  };
  const json manifest = {{"config_hash", config_hash(cfg)},
                         {"data_hash", data_hash(cfg)},
                         {"seed", cfg.seed},
                         {"config", recorded_config(cfg)},
                         {"mesh", cfg.mesh},
                         {"n_faces", world.mesh->face_count()},
                         {"image_size", cfg.image_size},
                         {"scenes", scenes},
                         {"train", samples(world.train)},
                         {"test", samples(world.test)}};
  write_json(manifest_path, manifest);
  log(opts, "gen-data: " + std::to_string(world.train.size()) + " train + " +
                std::to_string(world.test.size()) + " test samples, " + seconds_text(timer.seconds()));
}

World load_world(const RunConfig& cfg) {
  cfg.validate();
  const fs::path path = fs::path(cfg.output_dir) / "manifest.json";
  if (!fs::exists(path)) {
    throw MissingPrerequisite("no dataset manifest at " + path.string() + "; run gen-data first");
  }
  const json m = read_json(path, "manifest");
  if (m.value("data_hash", "") != data_hash(cfg)) {
    throw MissingPrerequisite("manifest " + path.string() +
                              " was generated for a different configuration; rerun gen-data");
  }
  try {
    const int size = m.at("image_size").get<int>();
    std::vector<SceneImage> scenes;
    for (const auto& s : m.at("scenes")) {
      scenes.push_back(generate_scene(scene_kind_from_string(s.at("kind").get<std::string>()),
                                      s.at("seed").get<std::uint64_t>(), size, size,
                                      s.at("id").get<int>()));
    }
    auto samples = [&](const json& arr, Split split) {
      Dataset d;
      d.split = split;
      for (const auto& s : arr) {
        d.samples.push_back({s.at("scene_id").get<int>(),
                             CameraParams{s.at("distance").get<double>(), s.at("elevation").get<double>(),
                                          s.at("azimuth").get<double>(), size, size}});
      }
      return d;
    };
    Dataset train = samples(m.at("train"), Split::train);
    Dataset test = samples(m.at("test"), Split::test);
    return build_world(cfg, resolve_mesh(m.at("mesh").get<std::string>()), std::move(scenes),
                       std::move(train), std::move(test));
  } catch (const json::exception& e) {
    throw MissingPrerequisite("malformed manifest " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------- train-detector

namespace {

fs::path detector_dir(const RunConfig& cfg) { return fs::path(cfg.output_dir) / "detector"; }

DetectorNet load_trained_detector(const RunConfig& cfg) {
  const fs::path dir = detector_dir(cfg);
  const json rep = read_json(dir / "report.json", "detector report (run train-detector)");
  if (rep.value("detector_hash", "") != detector_hash(cfg)) {
    throw MissingPrerequisite("detector in " + dir.string() +
                              " was trained for a different configuration; rerun train-detector");
  }
  try {
    return load_detector(dir / "detector.bin");
  } catch (const std::exception& e) {
    throw MissingPrerequisite(e.what());
  }
}

}  // namespace

DetectorTrainResult cmd_train_detector(const RunConfig& cfg, const CommandOptions& opts) {
  const World world = load_world(cfg);
  const fs::path dir = detector_dir(cfg);
  if (!opts.force && fs::exists(dir / "detector.bin")) {
    if (auto rep = read_json_if(dir / "report.json"); rep && rep->value("detector_hash", "") == detector_hash(cfg)) {
      log(opts, "train-detector: up to date (" + dir.string() + ")");
      DetectorTrainResult res{load_detector(dir / "detector.bin"), rep->at("train_accuracy").get<double>(),
                              rep->at("epoch_loss").get<std::vector<double>>(),
                              rep->value("warning", "")};
      return res;
    }
  }
  const Timer timer;
  DetectorTrainResult res = train_default_detector(world, cfg);
  fs::create_directories(dir);
  save_detector(dir / "detector.bin", res.net);
  json rep = {{"config_hash", config_hash(cfg)},
              {"detector_hash", detector_hash(cfg)},
              {"seed", cfg.seed},
              {"n_images", 2 * world.train.size()},
              {"epochs", cfg.detector.epochs},
              {"train_accuracy", res.train_accuracy},
              {"epoch_loss", res.epoch_loss}};
  if (!res.warning.empty()) rep["warning"] = res.warning;
  write_json(dir / "report.json", rep);
  if (!res.warning.empty()) std::fprintf(stderr, "camoforge: warning: %s\n", res.warning.c_str());
  log(opts, "train-detector: accuracy " + format_double(res.train_accuracy, 4) + ", " +
                seconds_text(timer.seconds()));
  return res;
}

// ------------------------------------------------------------------ attack

namespace {

// Universal Stage-1 texture shared by every non-adaptive run. The texture is
// always used as read back from its file so fresh and resumed runs agree.
TextureMap shared_stage1(const World& world, const RunConfig& cfg, const CommandOptions& opts) {
  const fs::path dir = fs::path(cfg.output_dir) / "stage1";
  const fs::path path = dir / "texture.json";
  if (!opts.force) {
    if (auto rec = read_json_if(dir / "report.json"); rec && rec->value("stage1_hash", "") == stage1_hash(cfg) &&
                                                      fs::exists(path)) {
      return read_texture_file(path);
    }
  }
  const Timer timer;
  DacConfig dac = cfg.dac;
  dac.seed = cfg.seed;
  const Stage1Result s1 = train_stage1(world.train_set, dac);
  fs::create_directories(dir);
  write_file_atomic(path, texture_file_text(s1.global_tex, config_hash(cfg), cfg.seed));
  write_file_atomic(dir / "train.csv", train_report_csv(s1.report));
  json rep = to_json(s1.report);
  rep["config_hash"] = config_hash(cfg);
  rep["stage1_hash"] = stage1_hash(cfg);
  write_json(dir / "report.json", rep);
  log(opts, "stage1: " + seconds_text(timer.seconds()));
  return read_texture_file(path);
}

void write_examples(const fs::path& dir, const World& world, const AttackOutcome& out) {
  const TextureMap clean = reference_texture(*world.mesh);
  const std::size_t n = std::min<std::size_t>(4, world.test_set.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Coverage& cov = world.test_set.coverage(i);
    const Image& scene = world.test_set.scene(i);
    char name[32];
    std::snprintf(name, sizeof name, "before_%02zu.ppm", i);
    write_ppm(dir / name, compose(shade(cov, clean), scene));
    std::snprintf(name, sizeof name, "after_%02zu.ppm", i);
    write_ppm(dir / name, compose(shade(cov, out.adversarial_texture(world.test_set.scene_id(i))), scene));
  }
}

EvalReport run_into(const World& world, const DetectorNet& net, const RunConfig& cfg, AttackMode mode,
                    const std::string& run_id, const CommandOptions& opts) {
  const fs::path dir = fs::path(cfg.output_dir) / "runs" / run_id;
  const std::string hash = config_hash(cfg);
  if (!opts.force) {
    if (auto rec = read_json_if(dir / "eval.json"); rec && rec->value("config_hash", "") == hash &&
                                                    rec->value("mode", "") == to_string(mode)) {
      log(opts, run_id + ": up to date");
      upsert_ledger(cfg.output_dir, *rec);
      return eval_from_record(*rec);
    }
  }
  const int n_m = world.mesh->face_count();
  std::optional<std::vector<int>> faces;
  if (mode == AttackMode::dac_masked && !cfg.faces_file.empty()) {
    faces = read_faces_file(cfg.faces_file);
    try {
      make_face_mask(*faces, n_m);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("face index file " + cfg.faces_file + ": " + e.what());
    }
  }
  std::optional<TextureMap> stage1;
  if (mode != AttackMode::adaptive) stage1 = shared_stage1(world, cfg, opts);

  const Timer timer;
  const AttackOutcome out = run_attack(world, net, cfg, mode, stage1, faces);
  fs::create_directories(dir);
  if (out.global.adaptive()) {
    for (int id : world.train_set.scene_ids()) {
      char name[40];
      std::snprintf(name, sizeof name, "texture_scene_%03d.json", id);
      write_file_atomic(dir / name, texture_file_text(out.adversarial_texture(id), hash, cfg.seed));
      std::snprintf(name, sizeof name, "global_scene_%03d.json", id);
      write_file_atomic(dir / name, texture_file_text(out.global.for_scene(id), hash, cfg.seed));
    }
  } else {
    write_file_atomic(dir / "texture.json",
                      texture_file_text(out.adversarial_texture(world.train_set.scene_ids().front()), hash,
                                        cfg.seed));
  }
  if (out.local_tex) {
    write_file_atomic(dir / "local_texture.json", texture_file_text(*out.local_tex, hash, cfg.seed));
    write_file_atomic(dir / "faces.txt", encode_faces(out.mask.indices()));
  }
  for (std::size_t k = 0; k < out.reports.size(); ++k) {
    const std::string stem = "train_" + std::to_string(k) + "_" + out.reports[k].stage;
    json rep = to_json(out.reports[k]);
    rep["config_hash"] = hash;
    write_json(dir / (stem + ".json"), rep);
    write_file_atomic(dir / (stem + ".csv"), train_report_csv(out.reports[k]));
  }
  if (out.search) {
    json rep = to_json(*out.search);
    rep["config_hash"] = hash;
    write_json(dir / "search.json", rep);
    write_file_atomic(dir / "search_trace.csv", search_trace_csv(*out.search));
  }
  write_examples(dir, world, out);
  const json rec = eval_record(out.eval, run_id, to_string(mode), cfg);
  write_json(dir / "eval.json", rec);
  upsert_ledger(cfg.output_dir, rec);
  log(opts, run_id + ": asr " + format_double(out.eval.asr, 4) + ", p@0.5 " +
                format_double(out.eval.p_at_05, 4) + ", mse " + format_double(out.eval.mse_naturalness, 6) +
                ", " + seconds_text(timer.seconds()));
  return out.eval;
}

}  // namespace

EvalReport cmd_attack(const RunConfig& cfg, AttackMode mode, const CommandOptions& opts) {
  const World world = load_world(cfg);
  const DetectorNet net = load_trained_detector(cfg);
  return run_into(world, net, cfg, mode, to_string(mode), opts);
}

// ------------------------------------------------------------------- sweep

std::vector<SweepPoint> cmd_sweep(const RunConfig& cfg, SweepAxis axis,
                                  const std::optional<std::vector<double>>& values,
                                  const CommandOptions& opts) {
  const World world = load_world(cfg);
  const DetectorNet net = load_trained_detector(cfg);
  const std::vector<double> points = values ? *values : sweep_values(axis);
  if (points.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepPoint> out;
  std::string csv = "axis,value,run_id,config_hash,seed,p_at_05_surrogate,asr,mse_naturalness,mse_unit\n";
  for (double v : points) {
    RunConfig point = cfg;
    AttackMode mode = AttackMode::dac_full;
    if (axis == SweepAxis::faces) {
      point.face_budget = v;
      mode = AttackMode::de_dac;
    } else {
      point.dac.lambda1 = v;
    }
    point.validate();
    const std::string run_id = "sweep-" + to_string(axis) + "-" + point_label(v);
    const EvalReport rep = run_into(world, net, point, mode, run_id, opts);
    out.push_back({v, rep});
    csv += to_string(axis) + "," + format_double(v) + "," + run_id + "," + config_hash(point) + "," +
           std::to_string(cfg.seed) + "," + format_double(rep.p_at_05) + "," + format_double(rep.asr) + "," +
           format_double(rep.mse_naturalness) + "," + format_double(rep.mse_unit) + "\n";
  }
  write_file_atomic(fs::path(cfg.output_dir) / ("sweep_" + to_string(axis) + ".csv"), csv);
  return out;
}

// -------------------------------------------------------------------- eval

EvalReport cmd_eval(const RunConfig& cfg, const std::string& run_id,
                    const std::optional<fs::path>& texture_file, const CommandOptions& opts) {
  const World world = load_world(cfg);
  const DetectorNet net = load_trained_detector(cfg);
  const int n_m = world.mesh->face_count();
  const fs::path runs = fs::path(cfg.output_dir) / "runs";

  GlobalTextures textures;
  std::string input_bytes;
  std::string target;
  auto checked = [&](const fs::path& p) {
    input_bytes += read_file(p);
    TextureMap t = read_texture_file(p);
    if (t.face_count() != n_m) {
      throw ConfigError("texture " + p.string() + " has " + std::to_string(t.face_count()) +
                        " faces, mesh has " + std::to_string(n_m));
    }
    return t;
  };
  if (texture_file) {
    if (!fs::exists(*texture_file)) throw MissingPrerequisite("missing texture file: " + texture_file->string());
    textures = GlobalTextures(checked(*texture_file));
    target = run_id.empty() ? texture_file->stem().string() : run_id;
  } else {
    if (run_id.empty()) throw ConfigError("eval needs --run or --texture");
    const fs::path dir = runs / run_id;
    read_json(dir / "eval.json", "run record (run attack first)");
    if (fs::exists(dir / "texture.json")) {
      textures = GlobalTextures(checked(dir / "texture.json"));
    } else {
      std::map<int, TextureMap> per_scene;
      for (int id : world.test_set.scene_ids()) {
        char name[40];
        std::snprintf(name, sizeof name, "texture_scene_%03d.json", id);
        per_scene.emplace(id, checked(dir / name));
      }
      textures = GlobalTextures(std::move(per_scene));
    }
    target = run_id;
  }

  const std::string eval_id = "eval-" + target;
  const fs::path dir = runs / eval_id;
  const std::string input_hash = hex64(fnv1a(input_bytes));
  if (!opts.force) {
    if (auto rec = read_json_if(dir / "eval.json"); rec && rec->value("config_hash", "") == config_hash(cfg) &&
                                                    rec->value("input_hash", "") == input_hash) {
      log(opts, eval_id + ": up to date");
      upsert_ledger(cfg.output_dir, *rec);
      return eval_from_record(*rec);
    }
  }
  const EvalReport rep = evaluate_global_only(world.test_set, net, reference_texture(*world.mesh), textures,
                                              cfg.detector.threshold);
  json rec = eval_record(rep, eval_id, "eval", cfg);
  rec["input_hash"] = input_hash;
  fs::create_directories(dir);
  write_json(dir / "eval.json", rec);
  upsert_ledger(cfg.output_dir, rec);
  log(opts, eval_id + ": asr " + format_double(rep.asr, 4) + ", p@0.5 " + format_double(rep.p_at_05, 4));
  return rep;
}

// --------------------------------------------------------------------- CLI

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> output_dir, mesh, scenes, faces_file;
  std::optional<int> scenes_per_kind, renders, test_renders, image_size;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda1, lambda2, lr, face_budget;
  std::optional<int> epochs1, epochs2, batch_size;
  std::optional<int> pop_size, max_iters, jobs;
  std::optional<double> crossover_rate, mutation_rate;
  std::optional<int> fitness_epochs, fitness_subset;
  std::optional<int> detector_size, detector_epochs, detector_batch;
  std::optional<double> detector_lr, threshold;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* app, Overrides& o) {
  // A flag given twice keeps its last value, so wrappers can append overrides.
  app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app->add_option("--config", o.config_path, "JSON config file");
  app->add_option("--out", o.output_dir, "output directory");
  app->add_option("--mesh", o.mesh, "mesh: OBJ path or builtin:boxperson");
  app->add_option("--scenes", o.scenes, "comma-separated scene kinds (winter, forest, desert)");
  app->add_option("--scenes-per-kind", o.scenes_per_kind);
  app->add_option("--renders", o.renders, "training renders per scene");
  app->add_option("--test-renders", o.test_renders, "held-out renders per scene");
  app->add_option("--image-size", o.image_size);
  app->add_option("--seed", o.seed);
  app->add_option("--lambda1", o.lambda1);
  app->add_option("--lambda2", o.lambda2);
  app->add_option("--lr", o.lr, "texture learning rate");
  app->add_option("--epochs1", o.epochs1, "Stage-1 epochs");
  app->add_option("--epochs2", o.epochs2, "Stage-2 epochs");
  app->add_option("--batch-size", o.batch_size, "texture training batch size");
  app->add_option("--face-budget", o.face_budget, "fraction of faces carrying the local texture");
  app->add_option("--faces", o.faces_file, "face index file for dac-masked");
  app->add_option("--pop-size", o.pop_size);
  app->add_option("--max-iters", o.max_iters);
  app->add_option("--crossover-rate", o.crossover_rate);
  app->add_option("--mutation-rate", o.mutation_rate);
  app->add_option("--jobs", o.jobs, "parallel fitness evaluations");
  app->add_option("--fitness-epochs", o.fitness_epochs, "Stage-2 epochs per DE fitness evaluation");
  app->add_option("--fitness-subset", o.fitness_subset, "training samples scored per fitness evaluation");
  app->add_option("--detector-size", o.detector_size);
  app->add_option("--detector-epochs", o.detector_epochs);
  app->add_option("--detector-lr", o.detector_lr);
  app->add_option("--detector-batch", o.detector_batch);
  app->add_option("--threshold", o.threshold, "detection threshold");
  app->add_flag("--force", o.force, "redo completed stages");
  app->add_flag("-q,--quiet", o.quiet, "print only errors and warnings");
}

template <typename T, typename U>
void apply(const std::optional<T>& v, U& field) {
  if (v) field = *v;
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    if (!fs::exists(o.config_path)) throw ConfigError("config file not found: " + o.config_path);
    json j;
    try {
      j = json::parse(read_file(o.config_path));
    } catch (const json::exception& e) {
      throw ConfigError("config " + o.config_path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + o.config_path + " must be a JSON object");
    cfg = run_config_from_json(j);
  }
  apply(o.output_dir, cfg.output_dir);
  apply(o.mesh, cfg.mesh);
  if (o.scenes) {
    cfg.scene_kinds.clear();
    std::istringstream in(*o.scenes);
    std::string k;
    while (std::getline(in, k, ',')) {
      if (!k.empty()) cfg.scene_kinds.push_back(k);
    }
  }
  apply(o.scenes_per_kind, cfg.scenes_per_kind);
  apply(o.renders, cfg.n_renders);
  apply(o.test_renders, cfg.n_test_renders);
  if (o.image_size) {
    cfg.image_size = *o.image_size;
    cfg.camera.height = cfg.camera.width = *o.image_size;
  }
  apply(o.seed, cfg.seed);
  apply(o.lambda1, cfg.dac.lambda1);
  apply(o.lambda2, cfg.dac.lambda2);
  apply(o.lr, cfg.dac.lr);
  apply(o.epochs1, cfg.dac.epochs_stage1);
  apply(o.epochs2, cfg.dac.epochs_stage2);
  apply(o.batch_size, cfg.dac.batch_size);
  apply(o.face_budget, cfg.face_budget);
  apply(o.faces_file, cfg.faces_file);
  apply(o.pop_size, cfg.de.pop_size);
  apply(o.max_iters, cfg.de.max_iters);
  apply(o.crossover_rate, cfg.de.crossover_rate);
  apply(o.mutation_rate, cfg.de.mutation_rate);
  apply(o.jobs, cfg.de.jobs);
  apply(o.fitness_epochs, cfg.fitness.epochs_stage2);
  apply(o.fitness_subset, cfg.fitness.eval_subset);
  apply(o.detector_size, cfg.detector.input_size);
  apply(o.detector_epochs, cfg.detector.epochs);
  apply(o.detector_lr, cfg.detector.lr);
  apply(o.detector_batch, cfg.detector.batch_size);
  apply(o.threshold, cfg.detector.threshold);
  cfg.validate();
  return cfg;
}

void print_eval(const EvalReport& rep, bool quiet) {
  if (!quiet) std::printf("%s\n", to_json(rep).dump(2).c_str());
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"camoforge: dual adversarial camouflage on a synthetic mesh and scene set"};
  app.require_subcommand(1);
  Overrides o;
  std::string mode_name, axis_name, run_id, texture_path;
  std::vector<double> values;

  auto* gen = app.add_subcommand("gen-data", "generate scenes and camera samples");
  auto* det = app.add_subcommand("train-detector", "train the surrogate detector");
  auto* atk = app.add_subcommand("attack", "train camouflage textures and evaluate them");
  auto* swp = app.add_subcommand("sweep", "run an attack over face budgets or lambda1 values");
  auto* evl = app.add_subcommand("eval", "evaluate stored textures on the held-out split");
  for (auto* sub : {gen, det, atk, swp, evl}) add_common(sub, o);
  atk->add_option("--mode", mode_name, "stage1-only | dac-full | dac-masked | de-dac | adaptive")->required();
  swp->add_option("--axis", axis_name, "faces | lambda1")->required();
  swp->add_option("--values", values, "override the axis values")->take_all();
  evl->add_option("--run", run_id, "run id under runs/ (e.g. dac-full)");
  evl->add_option("--texture", texture_path, "texture file applied to every scene");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve_config(o);
    const CommandOptions opts{o.force, o.quiet};
    if (gen->parsed()) {
      cmd_gen_data(cfg, opts);
    } else if (det->parsed()) {
      const DetectorTrainResult res = cmd_train_detector(cfg, opts);
      if (!o.quiet) std::printf("train_accuracy %s\n", format_double(res.train_accuracy).c_str());
    } else if (atk->parsed()) {
      print_eval(cmd_attack(cfg, attack_mode_from_string(mode_name), opts), o.quiet);
    } else if (swp->parsed()) {
      const SweepAxis axis = sweep_axis_from_string(axis_name);
      const auto pts = cmd_sweep(cfg, axis, values.empty() ? std::nullopt : std::optional(values), opts);
      for (const auto& p : pts) {
        if (o.quiet) break;
        std::printf("%s=%s asr=%s mse=%s\n", to_string(axis).c_str(), format_double(p.value).c_str(),
                    format_double(p.eval.asr).c_str(), format_double(p.eval.mse_naturalness).c_str());
      }
    } else if (evl->parsed()) {
      print_eval(cmd_eval(cfg, run_id, texture_path.empty() ? std::nullopt : std::optional<fs::path>(texture_path),
                          opts),
                 o.quiet);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "camoforge: config error: %s\n", e.what());
    return 2;
  } catch (const MissingPrerequisite& e) {
    std::fprintf(stderr, "camoforge: missing prerequisite: %s\n", e.what());
    return 3;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "camoforge: numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "camoforge: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

}  // namespace camoforge
