#include "camoforge/de_search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "camoforge/metrics.hpp"

namespace camoforge {

void validate_individual(const Individual& ind, int n_m) {
  for (std::size_t k = 0; k < ind.indices.size(); ++k) {
    const int v = ind.indices[k];
    if (v < 1 || v > n_m) throw std::logic_error("individual index out of range");
    if (k > 0 && ind.indices[k - 1] >= v) throw std::logic_error("individual not strictly increasing");
  }
}

void DEConfig::validate(int n_m) const {
  if (pop_size < 4) throw ConfigError("DE population must be >= 4");
  if (max_iters < 1) throw ConfigError("DE max_iters must be >= 1");
  if (!(crossover_rate >= 0 && crossover_rate <= 1)) throw ConfigError("crossover rate outside [0,1]");
  if (!(mutation_rate >= 0 && mutation_rate <= 1)) throw ConfigError("mutation rate outside [0,1]");
  if (n_faces < 1 || n_faces > n_m) throw ConfigError("n_f must lie in [1, n_m]");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

std::vector<Individual> init_population(const DEConfig& cfg, int n_m) {
  if (cfg.n_faces > n_m) throw std::invalid_argument("init_population: n_f > n_m");
  if (cfg.n_faces < 1) throw std::invalid_argument("init_population: n_f < 1");
  Rng rng(derive_seed(cfg.seed, 11));
  std::vector<Individual> pop;
  std::vector<int> pool(n_m);
  for (int i = 0; i < cfg.pop_size; ++i) {
    for (int f = 0; f < n_m; ++f) pool[f] = f + 1;
    // Partial Fisher-Yates: the first n_f slots form the subset.
    for (int k = 0; k < cfg.n_faces; ++k) {
      std::swap(pool[k], pool[k + static_cast<int>(rng.below(n_m - k))]);
    }
    Individual ind{{pool.begin(), pool.begin() + cfg.n_faces}, std::nullopt};
    std::sort(ind.indices.begin(), ind.indices.end());
    pop.push_back(std::move(ind));
  }
  return pop;
}

std::vector<int> mutate(const std::vector<Individual>& population, std::size_t target,
                        double mutation_rate, int n_m, Rng& rng) {
  const std::size_t n = population.size();
  if (n < 4) throw std::invalid_argument("mutate: population must hold at least 4 individuals");
  std::size_t pick[3];
  for (int k = 0; k < 3; ++k) {
    std::size_t r;
    do {
      r = rng.below(n);
    } while (r == target || std::find(pick, pick + k, r) != pick + k);
    pick[k] = r;
  }
  const auto& a = population[pick[0]].indices;
  const auto& b = population[pick[1]].indices;
  const auto& c = population[pick[2]].indices;
  std::vector<int> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double v = a[k] + mutation_rate * (b[k] - c[k]);
    out[k] = std::clamp(static_cast<int>(std::lround(v)), 1, n_m);
  }
  return out;
}

std::vector<int> crossover(const std::vector<int>& mutant, const std::vector<int>& target,
                           double crossover_rate, Rng& rng) {
  if (mutant.size() != target.size()) throw std::invalid_argument("crossover: length mismatch");
  if (mutant.empty()) return {};
  const std::size_t forced = rng.below(mutant.size());
  std::vector<int> trial(target.size());
  for (std::size_t k = 0; k < trial.size(); ++k) {
    const bool take = rng.uniform() < crossover_rate;
    trial[k] = (k == forced || take) ? mutant[k] : target[k];
  }
  return trial;
}

Individual repair(const std::vector<int>& trial, int n_m, Rng& rng) {
  if (static_cast<int>(trial.size()) > n_m) throw std::invalid_argument("repair: n_f > n_m");
  std::set<int> used;
  Individual out;
  out.indices.reserve(trial.size());
  for (int v : trial) {
    v = std::clamp(v, 1, n_m);
    while (used.count(v)) v = 1 + static_cast<int>(rng.below(n_m));
    used.insert(v);
    out.indices.push_back(v);
  }
  std::sort(out.indices.begin(), out.indices.end());
  validate_individual(out, n_m);
  return out;
}

std::optional<double> FitnessCache::find(const std::vector<int>& key) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void FitnessCache::insert(const std::vector<int>& key, double value) {
  std::lock_guard lock(mutex_);
  values_.emplace(key, value);
}

std::size_t FitnessCache::size() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

std::vector<double> SearchReport::best_trace() const {
  std::vector<double> out;
  for (const auto& g : generations) out.push_back(*g.best.fitness);
  return out;
}

namespace {

// Fills in fitness for every individual, evaluating each distinct unseen
// index set once; up to `jobs` evaluations run concurrently.
void evaluate_population(std::vector<Individual>& pop, const FitnessFn& fitness, int jobs,
                         FitnessCache& cache, SearchReport& report) {
  std::vector<std::vector<int>> fresh;
  for (const auto& ind : pop) {
    if (!cache.find(ind.indices) &&
        std::find(fresh.begin(), fresh.end(), ind.indices) == fresh.end()) {
      fresh.push_back(ind.indices);
    }
  }
  std::vector<double> values(fresh.size());
  if (jobs <= 1 || fresh.size() <= 1) {
    for (std::size_t i = 0; i < fresh.size(); ++i) values[i] = fitness(fresh[i]);
  } else {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(fresh.size());
    const std::size_t n_workers = std::min<std::size_t>(jobs, fresh.size());
    for (std::size_t w = 0; w < n_workers; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < fresh.size(); i += n_workers) {
          try {
            values[i] = fitness(fresh[i]);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    cache.insert(fresh[i], values[i]);
    report.history.push_back({fresh[i], values[i]});
  }
  report.evaluations += fresh.size();
  for (auto& ind : pop) ind.fitness = *cache.find(ind.indices);
}

Individual population_best(const std::vector<Individual>& pop) {
  return *std::min_element(pop.begin(), pop.end(),
                           [](const auto& a, const auto& b) { return *a.fitness < *b.fitness; });
}

}  // namespace

SearchResult de_search(const DEConfig& cfg, int n_m, const FitnessFn& fitness) {
  cfg.validate(n_m);
  SearchResult result;
  SearchReport& report = result.report;
  report.seed = cfg.seed;
  FitnessCache cache;
  Rng rng(derive_seed(cfg.seed, 12));

  std::vector<Individual> pop = init_population(cfg, n_m);
  evaluate_population(pop, fitness, cfg.jobs, cache, report);
  report.generations.push_back({pop, population_best(pop)});

  for (int gen = 1; gen <= cfg.max_iters; ++gen) {
    std::vector<Individual> trials;
    trials.reserve(pop.size());
    for (std::size_t j = 0; j < pop.size(); ++j) {
      const auto mutant = mutate(pop, j, cfg.mutation_rate, n_m, rng);
      const auto trial = crossover(mutant, pop[j].indices, cfg.crossover_rate, rng);
      trials.push_back(repair(trial, n_m, rng));
    }
    evaluate_population(trials, fitness, cfg.jobs, cache, report);
    for (std::size_t j = 0; j < pop.size(); ++j) {
      if (*trials[j].fitness < *pop[j].fitness) pop[j] = trials[j];
    }
    report.generations.push_back({pop, population_best(pop)});
  }
  result.best = report.generations.back().best;
  return result;
}

double evaluate_fitness(const std::vector<int>& indices, const FitnessContext& ctx) {
  const int n_m = ctx.train.mesh().face_count();
  std::vector<bool> detected;
  detected.reserve(ctx.eval.size());
  if (ctx.budget.epochs_stage2 == 0) {
    for (std::size_t i = 0; i < ctx.eval.size(); ++i) {
      const Image adv = adversarial_image(ctx.eval, i, ctx.global.for_scene(ctx.eval.scene_id(i)));
      detected.push_back(detect(ctx.net, detector_input(ctx.net, adv), ctx.threshold));
    }
    return detection_rate(detected);
  }
  const FaceMask mask = make_face_mask(indices, n_m);
  const Stage2Result s2 = train_stage2(ctx.train, ctx.global, mask, ctx.net, ctx.budget);
  for (std::size_t i = 0; i < ctx.eval.size(); ++i) {
    const TextureMap tex =
        compose_texture(ctx.global.for_scene(ctx.eval.scene_id(i)), s2.local_tex, mask);
    const Image adv = adversarial_image(ctx.eval, i, tex);
    detected.push_back(detect(ctx.net, detector_input(ctx.net, adv), ctx.threshold));
  }
  return detection_rate(detected);
}

double DacFitness::operator()(const std::vector<int>& indices) {
  if (auto hit = cache_.find(indices)) return *hit;
  const double value = evaluate_fitness(indices, ctx_);
  cache_.insert(indices, value);
  return value;
}

}  // namespace camoforge
