#include "camoforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "camoforge/common.hpp"
#include "camoforge/io.hpp"

namespace camoforge {

using nlohmann::json;

std::string to_string(AttackMode mode) {
  switch (mode) {
    case AttackMode::stage1_only: return "stage1-only";
    case AttackMode::dac_full: return "dac-full";
    case AttackMode::dac_masked: return "dac-masked";
    case AttackMode::de_dac: return "de-dac";
    case AttackMode::adaptive: return "adaptive";
  }
  return "unknown";
}

AttackMode attack_mode_from_string(const std::string& name) {
  for (auto m : {AttackMode::stage1_only, AttackMode::dac_full, AttackMode::dac_masked,
                 AttackMode::de_dac, AttackMode::adaptive}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown attack mode: " + name);
}

void RunConfig::validate() const {
  if (scene_kinds.empty()) throw ConfigError("scene_kinds must not be empty");
  for (const auto& k : scene_kinds) scene_kind_from_string(k);
  if (scenes_per_kind < 1) throw ConfigError("scenes_per_kind must be >= 1");
  if (n_renders < 1 || n_test_renders < 1) throw ConfigError("render counts must be >= 1");
  if (image_size < 16) throw ConfigError("image_size must be >= 16");
  if (detector.input_size < 4 || image_size % detector.input_size != 0) {
    throw ConfigError("image_size must be a multiple of the detector input size");
  }
  if (detector.epochs < 0 || detector.batch_size < 1 || !(detector.lr > 0)) {
    throw ConfigError("bad detector settings");
  }
  if (!(face_budget > 0.0 && face_budget <= 1.0)) throw ConfigError("face_budget must be in (0, 1]");
  if (fitness.epochs_stage2 < 0 || fitness.eval_subset < 1) throw ConfigError("bad fitness budget");
  camera.validate();
  dac.validate();
  if (de.pop_size < 4 || de.max_iters < 1 || de.jobs < 1) throw ConfigError("bad DE settings");
  if (!(de.crossover_rate >= 0 && de.crossover_rate <= 1 && de.mutation_rate >= 0 &&
        de.mutation_rate <= 1)) {
    throw ConfigError("DE rates must lie in [0, 1]");
  }
}

namespace {

json range_json(const Range& r) { return json::array({r.min, r.max}); }

Range range_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("range must be [min, max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

json results_json(const RunConfig& c) {
  return {{"mesh", c.mesh},
          {"scene_kinds", c.scene_kinds},
          {"scenes_per_kind", c.scenes_per_kind},
          {"n_renders", c.n_renders},
          {"n_test_renders", c.n_test_renders},
          {"image_size", c.image_size},
          {"camera",
           {{"distance", range_json(c.camera.distance)},
            {"elevation", range_json(c.camera.elevation)},
            {"azimuth", range_json(c.camera.azimuth)}}},
          {"seed", c.seed},
          {"dac",
           {{"lambda1", c.dac.lambda1},
            {"lambda2", c.dac.lambda2},
            {"lr", c.dac.lr},
            {"epochs_stage1", c.dac.epochs_stage1},
            {"epochs_stage2", c.dac.epochs_stage2},
            {"batch_size", c.dac.batch_size}}},
          {"de",
           {{"pop_size", c.de.pop_size},
            {"max_iters", c.de.max_iters},
            {"crossover_rate", c.de.crossover_rate},
            {"mutation_rate", c.de.mutation_rate}}},
          {"fitness",
           {{"epochs_stage2", c.fitness.epochs_stage2}, {"eval_subset", c.fitness.eval_subset}}},
          {"detector",
           {{"input_size", c.detector.input_size},
            {"epochs", c.detector.epochs},
            {"lr", c.detector.lr},
            {"batch_size", c.detector.batch_size},
            {"threshold", c.detector.threshold}}},
          {"face_budget", c.face_budget},
          {"faces_file", c.faces_file}};
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const RunConfig& cfg) {
  json j = results_json(cfg);
  j["output_dir"] = cfg.output_dir;
  j["de"]["jobs"] = cfg.de.jobs;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  try {
    read_opt(j, "mesh", c.mesh);
    read_opt(j, "scene_kinds", c.scene_kinds);
    read_opt(j, "scenes_per_kind", c.scenes_per_kind);
    read_opt(j, "n_renders", c.n_renders);
    read_opt(j, "n_test_renders", c.n_test_renders);
    read_opt(j, "image_size", c.image_size);
    read_opt(j, "seed", c.seed);
    read_opt(j, "face_budget", c.face_budget);
    read_opt(j, "faces_file", c.faces_file);
    read_opt(j, "output_dir", c.output_dir);
    if (j.contains("camera")) {
      const json& cam = j.at("camera");
      if (cam.contains("distance")) c.camera.distance = range_from(cam.at("distance"));
      if (cam.contains("elevation")) c.camera.elevation = range_from(cam.at("elevation"));
      if (cam.contains("azimuth")) c.camera.azimuth = range_from(cam.at("azimuth"));
    }
    if (j.contains("dac")) {
      const json& d = j.at("dac");
      read_opt(d, "lambda1", c.dac.lambda1);
      read_opt(d, "lambda2", c.dac.lambda2);
      read_opt(d, "lr", c.dac.lr);
      read_opt(d, "epochs_stage1", c.dac.epochs_stage1);
      read_opt(d, "epochs_stage2", c.dac.epochs_stage2);
      read_opt(d, "batch_size", c.dac.batch_size);
    }
    if (j.contains("de")) {
      const json& d = j.at("de");
      read_opt(d, "pop_size", c.de.pop_size);
      read_opt(d, "max_iters", c.de.max_iters);
      read_opt(d, "crossover_rate", c.de.crossover_rate);
      read_opt(d, "mutation_rate", c.de.mutation_rate);
      read_opt(d, "jobs", c.de.jobs);
    }
    if (j.contains("fitness")) {
      read_opt(j.at("fitness"), "epochs_stage2", c.fitness.epochs_stage2);
      read_opt(j.at("fitness"), "eval_subset", c.fitness.eval_subset);
    }
    if (j.contains("detector")) {
      const json& d = j.at("detector");
      read_opt(d, "input_size", c.detector.input_size);
      read_opt(d, "epochs", c.detector.epochs);
      read_opt(d, "lr", c.detector.lr);
      read_opt(d, "batch_size", c.detector.batch_size);
      read_opt(d, "threshold", c.detector.threshold);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.camera.height = c.camera.width = c.image_size;
  return c;
}

std::string config_hash(const RunConfig& cfg) { return hex64(fnv1a(results_json(cfg).dump())); }

std::vector<SceneImage> make_scenes(const RunConfig& cfg) {
  std::vector<SceneImage> scenes;
  int id = 1;
  for (const auto& name : cfg.scene_kinds) {
    const SceneKind kind = scene_kind_from_string(name);
    for (int k = 0; k < cfg.scenes_per_kind; ++k, ++id) {
      scenes.push_back(generate_scene(kind, derive_seed(cfg.seed, 1000 + id), cfg.image_size,
                                      cfg.image_size, id));
    }
  }
  return scenes;
}

World build_world(const RunConfig& cfg, Mesh mesh, std::vector<SceneImage> scenes, Dataset train,
                  Dataset test) {
  auto mesh_ptr = std::make_shared<const Mesh>(std::move(mesh));
  auto scene_ptr = std::make_shared<const std::vector<SceneImage>>(std::move(scenes));
  (void)cfg;
  SampleSet train_set(mesh_ptr, scene_ptr, train);
  SampleSet test_set(mesh_ptr, scene_ptr, test);
  return World{mesh_ptr, scene_ptr, std::move(train), std::move(test), std::move(train_set),
               std::move(test_set)};
}

World build_world(const RunConfig& cfg) {
  cfg.validate();
  CameraRanges ranges = cfg.camera;
  ranges.height = ranges.width = cfg.image_size;
  auto scenes = make_scenes(cfg);
  Dataset train = build_dataset(scenes, cfg.n_renders, derive_seed(cfg.seed, 21), ranges, Split::train);
  Dataset test = build_dataset(scenes, cfg.n_test_renders, derive_seed(cfg.seed, 22), ranges, Split::test);
  return build_world(cfg, resolve_mesh(cfg.mesh), std::move(scenes), std::move(train), std::move(test));
}

std::vector<LabeledImage> build_detector_task(const World& world, const DetectorNet& net,
                                              std::uint64_t seed) {
  const SampleSet& data = world.train_set;
  const int n_m = data.mesh().face_count();
  std::vector<LabeledImage> task;
  task.reserve(2 * data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SceneImage& owner = find_scene(data.scenes(), data.scene_id(i));
    const Image& like = owner.pixels;
    const SceneImage background =
        generate_scene(owner.kind, derive_seed(seed, 5000 + i), like.height, like.width);
    Rng rng(derive_seed(seed, 9000 + i));
    const double r = rng.uniform(), g = rng.uniform(), b = rng.uniform();
    const RenderOutput obj = shade(data.coverage(i), uniform_texture(n_m, r, g, b));
    task.push_back({detector_input(net, compose(obj, background.pixels)), true});
    task.push_back({detector_input(net, background.pixels), false});
  }
  return task;
}

DetectorTrainResult train_default_detector(const World& world, const RunConfig& cfg) {
  const std::uint64_t seed = derive_seed(cfg.seed, 51);
  DetectorNet net = init_detector(seed, cfg.detector.input_size);
  const auto task = build_detector_task(world, net, seed);
  DetectorTrainOptions opts;
  opts.epochs = cfg.detector.epochs;
  opts.lr = cfg.detector.lr;
  opts.batch_size = cfg.detector.batch_size;
  opts.seed = seed;
  return train_detector(net, task, opts);
}

int face_budget_count(double fraction, int n_m) {
  return std::clamp(static_cast<int>(std::lround(fraction * n_m)), 1, n_m);
}

std::vector<int> random_faces(int count, int n_m, std::uint64_t seed) {
  std::vector<int> pool(n_m);
  std::iota(pool.begin(), pool.end(), 1);
  Rng rng(seed);
  for (int k = 0; k < count; ++k) std::swap(pool[k], pool[k + static_cast<int>(rng.below(n_m - k))]);
  std::vector<int> out(pool.begin(), pool.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

FitnessContext make_fitness_context(const World& world, const GlobalTextures& global,
                                    const DetectorNet& net, const RunConfig& cfg) {
  std::vector<std::size_t> order(world.train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 61));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  order.resize(std::min<std::size_t>(order.size(), cfg.fitness.eval_subset));
  std::sort(order.begin(), order.end());
  DacConfig budget = cfg.dac;
  budget.seed = cfg.seed;
  budget.epochs_stage2 = cfg.fitness.epochs_stage2;
  return FitnessContext{world.train_set, world.train_set.subset(order), global, net, budget,
                        cfg.detector.threshold};
}

TextureMap AttackOutcome::adversarial_texture(int scene_id) const {
  const TextureMap& g = global.for_scene(scene_id);
  return local_tex ? compose_texture(g, *local_tex, mask) : g;
}

namespace {

DEConfig search_config(const RunConfig& cfg, int n_faces) {
  DEConfig de = cfg.de;
  de.n_faces = n_faces;
  de.seed = derive_seed(cfg.seed, 41);
  return de;
}

}  // namespace

AttackOutcome run_attack(const World& world, const DetectorNet& net, const RunConfig& cfg,
                         AttackMode mode, const std::optional<TextureMap>& stage1,
                         const std::optional<std::vector<int>>& faces) {
  DacConfig dac = cfg.dac;
  dac.seed = cfg.seed;
  const int n_m = world.mesh->face_count();
  const TextureMap clean = reference_texture(*world.mesh);
  const double thr = cfg.detector.threshold;

  AttackOutcome out{mode, {}, std::nullopt, full_mask(n_m), {}, {}, std::nullopt};

  if (mode == AttackMode::adaptive) {
    out.global = GlobalTextures(train_stage1_per_scene(world.train_set, dac, out.reports));
  } else if (stage1) {
    out.global = GlobalTextures(*stage1);
  } else {
    Stage1Result s1 = train_stage1(world.train_set, dac);
    out.global = GlobalTextures(std::move(s1.global_tex));
    out.reports.push_back(std::move(s1.report));
  }

  if (mode == AttackMode::stage1_only) {
    out.eval = evaluate_global_only(world.test_set, net, clean, out.global, thr);
    return out;
  }

  const int budget = face_budget_count(cfg.face_budget, n_m);
  if (faces) {
    out.mask = make_face_mask(*faces, n_m);
  } else if (mode == AttackMode::dac_masked) {
    out.mask = make_face_mask(random_faces(budget, n_m, derive_seed(cfg.seed, 31)), n_m);
  } else if ((mode == AttackMode::de_dac || mode == AttackMode::adaptive) && budget < n_m) {
    const FitnessContext ctx = make_fitness_context(world, out.global, net, cfg);
    DacFitness fitness(ctx);
    SearchResult sr = de_search(search_config(cfg, budget), n_m,
                                [&](const std::vector<int>& x) { return fitness(x); });
    out.mask = make_face_mask(sr.best.indices, n_m);
    out.search = std::move(sr.report);
  }

  Stage2Result s2 = train_stage2(world.train_set, out.global, out.mask, net, dac);
  out.local_tex = std::move(s2.local_tex);
  out.reports.push_back(std::move(s2.report));
  out.eval = evaluate_camouflage(world.test_set, net, clean, out.global, *out.local_tex, out.mask, thr);
  return out;
}

std::string encode_texture(const TextureMap& tex) {
  std::string s = "[\n";
  for (int f = 0; f < tex.face_count(); ++f) {
    s += "  [" + format_double(tex.at(f, 0)) + ", " + format_double(tex.at(f, 1)) + ", " +
         format_double(tex.at(f, 2)) + "]";
    s += f + 1 < tex.face_count() ? ",\n" : "\n";
  }
  s += "]\n";
  return s;
}

TextureMap decode_texture(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("texture file: ") + e.what());
  }
  const json& colors = j.is_object() ? j.at("colors") : j;
  if (!colors.is_array() || colors.empty()) throw std::runtime_error("texture file: no colors");
  TextureMap tex(static_cast<int>(colors.size()));
  for (std::size_t f = 0; f < colors.size(); ++f) {
    if (!colors[f].is_array() || colors[f].size() != 3) {
      throw std::runtime_error("texture file: entry " + std::to_string(f) + " is not [r,g,b]");
    }
    for (int c = 0; c < 3; ++c) tex.at(static_cast<int>(f), c) = colors[f][c].get<double>();
  }
  return tex;
}

json to_json(const EvalReport& rep) {
  return {{"p_at_05_surrogate", rep.p_at_05},
          {"asr", rep.asr},
          {"mse_naturalness", rep.mse_naturalness},
          {"mse_unit", rep.mse_unit},
          {"clean_p_at_05_surrogate", rep.clean_p_at_05},
          {"n_images", rep.n_images},
          {"threshold", rep.threshold}};
}

json to_json(const TrainReport& rep) {
  json j = {{"stage", rep.stage},
            {"epochs", rep.epochs},
            {"steps_per_epoch", rep.steps_per_epoch},
            {"seed", rep.seed}};
  auto put = [&](const char* name, const std::vector<double>& v) {
    if (!v.empty()) j["trace"][name] = v;
  };
  put("first", rep.first);
  put("adv", rep.adv);
  put("color", rep.color);
  put("smooth", rep.smooth);
  put("total", rep.total);
  return j;
}

json to_json(const SearchReport& rep) {
  json gens = json::array();
  for (const auto& g : rep.generations) {
    json pop = json::array();
    for (const auto& ind : g.population) pop.push_back({{"faces", ind.indices}, {"fitness", *ind.fitness}});
    gens.push_back({{"population", pop}, {"best", {{"faces", g.best.indices}, {"fitness", *g.best.fitness}}}});
  }
  json hist = json::array();
  for (const auto& ind : rep.history) hist.push_back({{"faces", ind.indices}, {"fitness", *ind.fitness}});
  const auto& best = rep.generations.back().best;
  return {{"seed", rep.seed},
          {"evaluations", rep.evaluations},
          {"generations", gens},
          {"history", hist},
          {"best", {{"faces", best.indices}, {"fitness", *best.fitness}}}};
}

std::string train_report_csv(const TrainReport& rep) {
  std::ostringstream out;
  out << "epoch";
  std::vector<std::pair<std::string, std::vector<double>>> cols;
  for (auto [name, trace] : {std::pair{"first", &rep.first}, std::pair{"adv", &rep.adv},
                             std::pair{"color", &rep.color}, std::pair{"smooth", &rep.smooth},
                             std::pair{"total", &rep.total}}) {
    if (trace->empty()) continue;
    out << "," << name;
    cols.emplace_back(name, rep.epoch_mean(*trace));
  }
  out << "\n";
  const std::size_t rows = cols.empty() ? 0 : cols.front().second.size();
  for (std::size_t e = 0; e < rows; ++e) {
    out << e + 1;
    for (const auto& c : cols) out << "," << format_double(c.second[e]);
    out << "\n";
  }
  return out.str();
}

std::string search_trace_csv(const SearchReport& rep) {
  std::string s = "generation,best_fitness\n";
  const auto trace = rep.best_trace();
  for (std::size_t g = 0; g < trace.size(); ++g) {
    s += std::to_string(g) + "," + format_double(trace[g]) + "\n";
  }
  return s;
}

}  // namespace camoforge
