#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "camoforge/common.hpp"
#include "camoforge/dac.hpp"

namespace camoforge {

// A candidate attack area: n_f distinct 1-based face indices, increasing.
struct Individual {
  std::vector<int> indices;
  std::optional<double> fitness;  // p@0.5, lower is better
};

// Throws std::logic_error unless `ind` is strictly increasing within [1, n_m].
void validate_individual(const Individual& ind, int n_m);

struct DEConfig {
  int pop_size = 20;
  int max_iters = 10;
  double crossover_rate = 0.6;
  double mutation_rate = 0.6;  // DE scale factor
  int n_faces = 1;             // n_f
  std::uint64_t seed = 0;
  int jobs = 1;                // concurrent fitness evaluations

  void validate(int n_m) const;
};

using FitnessFn = std::function<double(const std::vector<int>&)>;

std::vector<Individual> init_population(const DEConfig& cfg, int n_m);

// DE/rand/1 on the sorted coordinates; may contain duplicates.
std::vector<int> mutate(const std::vector<Individual>& population, std::size_t target,
                        double mutation_rate, int n_m, Rng& rng);

// Binomial crossover with one forced mutant coordinate.
std::vector<int> crossover(const std::vector<int>& mutant, const std::vector<int>& target,
                           double crossover_rate, Rng& rng);

// Redraws duplicated values uniformly among unused indices, then sorts.
Individual repair(const std::vector<int>& trial, int n_m, Rng& rng);

// Thread-safe insert-or-get memo keyed by the sorted index set.
class FitnessCache {
 public:
  std::optional<double> find(const std::vector<int>& key) const;
  void insert(const std::vector<int>& key, double value);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::vector<int>, double> values_;
};

struct GenerationRecord {
  std::vector<Individual> population;  // after selection
  Individual best;
};

struct SearchReport {
  std::vector<GenerationRecord> generations;  // [0] is the initial population
  std::vector<Individual> history;            // every fresh evaluation, in order
  std::size_t evaluations = 0;
  std::uint64_t seed = 0;

  std::vector<double> best_trace() const;
};

struct SearchResult {
  Individual best;
  SearchReport report;
};

SearchResult de_search(const DEConfig& cfg, int n_m, const FitnessFn& fitness);

// Everything a DAC fitness evaluation needs; Stage 1 and the detector are
// trained once and shared by all evaluations.
struct FitnessContext {
  SampleSet train;
  SampleSet eval;
  GlobalTextures global;
  DetectorNet net;
  DacConfig budget;  // reduced Stage-2 budget
  double threshold = 0.5;
};

// Stage 2 on the individual's faces under the reduced budget, then p@0.5 of
// the result on the evaluation subset. With zero Stage-2 epochs no local
// texture exists and the global texture alone is scored.
double evaluate_fitness(const std::vector<int>& indices, const FitnessContext& ctx);

// evaluate_fitness with memoization; safe to call concurrently.
class DacFitness {
 public:
  explicit DacFitness(const FitnessContext& ctx) : ctx_(ctx) {}

  double operator()(const std::vector<int>& indices);
  std::size_t cached() const { return cache_.size(); }

 private:
  const FitnessContext& ctx_;
  FitnessCache cache_;
};

}  // namespace camoforge
