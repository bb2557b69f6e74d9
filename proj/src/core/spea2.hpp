#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mask.hpp"

namespace pchan::spea2 {

struct Individual {
  ChannelMask mask;
  double f1 = 0.0;  // error fraction, minimized
  double f2 = 0.0;  // selected channel count, minimized
  int strength = 0;
  double raw_fitness = 0.0;
  double density = 0.0;
  double fitness = 0.0;
};

struct Spea2Config {
  int iterations = 25;
  int population = 80;
  int archive_size = 80;
  double p_crossover = 0.75;
  double p_mutation = 0.7;  // per individual; per-gene flip rate is 1/n_bits
  int min_channels = 2;
  int n_bits = 0;
  ChannelMask admissible;  // empty = every channel allowed
  std::uint64_t seed = 0;
};

struct FrontEntry {
  ChannelMask mask;
  double f1 = 0.0;
  double f2 = 0.0;
};

struct ParetoFront {
  int layer = 1;
  std::vector<FrontEntry> entries;
};

struct HistoryRow {
  int iteration = 0;
  double f2 = 0.0;
  double best_f1 = 0.0;
};

struct RunStats {
  long long evaluations = 0;
  long long cache_hits = 0;
};

struct RunResult {
  std::vector<ParetoFront> layers;
  std::vector<HistoryRow> history;
  RunStats stats;
  std::vector<Individual> final_archive;
};

using Evaluator = std::function<std::pair<double, double>(const ChannelMask&)>;

// Strict Pareto dominance under minimization.
bool dominates(double af1, double af2, double bf1, double bf2);
inline bool dominates(const Individual& a, const Individual& b) {
  return dominates(a.f1, a.f2, b.f1, b.f2);
}

// Strength, raw fitness, k-th-neighbor density and total fitness over the
// combined population + archive pool.
void assign_fitness(std::vector<Individual>& pool);

// Keeps nondominated members, fills with best dominated ones or truncates by
// nearest-neighbor distance while protecting per-objective extremes.
std::vector<Individual> environmental_selection(const std::vector<Individual>& pool,
                                                int archive_size);

// Binary tournaments + uniform crossover + bit-flip mutation + repair.
std::vector<Individual> vary(const std::vector<Individual>& archive, const Spea2Config& cfg,
                             std::mt19937_64& rng);

// Nondominated sorting into layers by repeated peeling; layer ids from 1.
std::vector<std::vector<Individual>> extract_layers(const std::vector<Individual>& pool);

RunResult run(const Evaluator& evaluator, const Spea2Config& cfg);

}  // namespace pchan::spea2
