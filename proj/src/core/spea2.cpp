#include "spea2.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "errors.hpp"
#include "rng.hpp"

namespace pchan::spea2 {

bool dominates(double af1, double af2, double bf1, double bf2) {
  return af1 <= bf1 && af2 <= bf2 && (af1 < bf1 || af2 < bf2);
}

void assign_fitness(std::vector<Individual>& pool) {
  const int n = static_cast<int>(pool.size());
  if (n == 0) throw ConfigError("fitness assignment over an empty pool");

  std::vector<std::vector<bool>> dom(static_cast<std::size_t>(n),
                                     std::vector<bool>(static_cast<std::size_t>(n), false));
  for (int i = 0; i < n; ++i) {
    pool[static_cast<std::size_t>(i)].strength = 0;
    for (int j = 0; j < n; ++j) {
      if (i != j && dominates(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)])) {
        dom[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = true;
        ++pool[static_cast<std::size_t>(i)].strength;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    double r = 0.0;
    for (int j = 0; j < n; ++j) {
      if (dom[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
        r += pool[static_cast<std::size_t>(j)].strength;
      }
    }
    pool[static_cast<std::size_t>(i)].raw_fitness = r;
  }

  const int k = std::clamp(static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)))), 1,
                           std::max(1, n - 1));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double d1 = pool[static_cast<std::size_t>(i)].f1 - pool[static_cast<std::size_t>(j)].f1;
      const double d2 = pool[static_cast<std::size_t>(i)].f2 - pool[static_cast<std::size_t>(j)].f2;
      dist[static_cast<std::size_t>(j)] = std::hypot(d1, d2);
    }
    dist[static_cast<std::size_t>(i)] = -1.0;  // self sorts first, skipped below
    std::sort(dist.begin(), dist.end());
    const double sigma_k = n == 1 ? 0.0 : dist[static_cast<std::size_t>(k)];
    pool[static_cast<std::size_t>(i)].density = 1.0 / (sigma_k + 2.0);
    pool[static_cast<std::size_t>(i)].fitness =
        pool[static_cast<std::size_t>(i)].raw_fitness + pool[static_cast<std::size_t>(i)].density;
  }
}

namespace {

// Sorted distances from member `i` to every other member of `kept`.
std::vector<double> distance_vector(const std::vector<Individual>& pool,
                                    const std::vector<int>& kept, int i) {
  std::vector<double> d;
  d.reserve(kept.size() - 1);
  for (int j : kept) {
    if (j == i) continue;
    const double d1 = pool[static_cast<std::size_t>(i)].f1 - pool[static_cast<std::size_t>(j)].f1;
    const double d2 = pool[static_cast<std::size_t>(i)].f2 - pool[static_cast<std::size_t>(j)].f2;
    d.push_back(std::hypot(d1, d2));
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace

std::vector<Individual> environmental_selection(const std::vector<Individual>& pool,
                                                int archive_size) {
  if (archive_size < 1) throw ConfigError("archive size must be >= 1");
  const int n = static_cast<int>(pool.size());

  std::vector<int> nondom, dominated;
  for (int i = 0; i < n; ++i) {
    (pool[static_cast<std::size_t>(i)].raw_fitness == 0.0 ? nondom : dominated).push_back(i);
  }

  if (static_cast<int>(nondom.size()) <= archive_size) {
    // Fill the remainder with the best dominated individuals by fitness.
    std::sort(dominated.begin(), dominated.end(), [&](int a, int b) {
      const double fa = pool[static_cast<std::size_t>(a)].fitness;
      const double fb = pool[static_cast<std::size_t>(b)].fitness;
      return fa < fb || (fa == fb && a < b);
    });
    std::vector<Individual> archive;
    for (int i : nondom) archive.push_back(pool[static_cast<std::size_t>(i)]);
    for (int i : dominated) {
      if (static_cast<int>(archive.size()) >= archive_size) break;
      archive.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return archive;
  }

  // Too many nondominated: repeatedly drop the member with the
  // lexicographically smallest sorted-distance vector, never dropping the
  // current per-objective extremes while any alternative exists.
  std::vector<int> kept = nondom;
  while (static_cast<int>(kept.size()) > archive_size) {
    int ext_f1 = kept.front(), ext_f2 = kept.front();
    for (int i : kept) {
      const auto& a = pool[static_cast<std::size_t>(i)];
      const auto& b1 = pool[static_cast<std::size_t>(ext_f1)];
      const auto& b2 = pool[static_cast<std::size_t>(ext_f2)];
      if (a.f1 < b1.f1 || (a.f1 == b1.f1 && a.f2 < b1.f2)) ext_f1 = i;
      if (a.f2 < b2.f2 || (a.f2 == b2.f2 && a.f1 < b2.f1)) ext_f2 = i;
    }

    std::vector<std::vector<double>> dv(kept.size());
    for (std::size_t p = 0; p < kept.size(); ++p) dv[p] = distance_vector(pool, kept, kept[p]);

    int victim = -1;
    for (std::size_t p = 0; p < kept.size(); ++p) {
      const int i = kept[p];
      if (i == ext_f1 || i == ext_f2) continue;
      if (victim < 0) {
        victim = static_cast<int>(p);
        continue;
      }
      const auto& a = dv[p];
      const auto& b = dv[static_cast<std::size_t>(victim)];
      if (a < b) {
        victim = static_cast<int>(p);
      } else if (a == b) {
        // Identical crowding: prefer removing higher fitness, then higher index.
        const double fa = pool[static_cast<std::size_t>(i)].fitness;
        const double fb = pool[static_cast<std::size_t>(kept[static_cast<std::size_t>(victim)])].fitness;
        if (fa > fb || (fa == fb && i > kept[static_cast<std::size_t>(victim)])) {
          victim = static_cast<int>(p);
        }
      }
    }
    if (victim < 0) victim = 0;  // only extremes left and still too many
    kept.erase(kept.begin() + victim);
  }

  std::vector<Individual> archive;
  archive.reserve(kept.size());
  for (int i : kept) archive.push_back(pool[static_cast<std::size_t>(i)]);
  return archive;
}

namespace {

std::vector<int> admissible_indices(const Spea2Config& cfg) {
  std::vector<int> idx;
  if (cfg.admissible.empty()) {
    for (int i = 0; i < cfg.n_bits; ++i) idx.push_back(i);
  } else {
    for (std::size_t i = 0; i < cfg.admissible.size(); ++i) {
      if (cfg.admissible[i]) idx.push_back(static_cast<int>(i));
    }
  }
  return idx;
}

void repair(ChannelMask& mask, const std::vector<int>& allowed, int min_channels,
            std::mt19937_64& rng) {
  int on = popcount(mask);
  if (on >= min_channels) return;
  std::vector<int> off;
  for (int i : allowed) {
    if (!mask[static_cast<std::size_t>(i)]) off.push_back(i);
  }
  std::shuffle(off.begin(), off.end(), rng);
  for (int i : off) {
    if (on >= min_channels) break;
    mask[static_cast<std::size_t>(i)] = 1;
    ++on;
  }
}

void validate_config(const Spea2Config& cfg) {
  if (cfg.population < 2) throw ConfigError("population must be >= 2");
  if (cfg.archive_size < 1) throw ConfigError("archive size must be >= 1");
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.n_bits < 1) throw ConfigError("genome length must be >= 1");
  if (cfg.p_crossover < 0.0 || cfg.p_crossover > 1.0 || cfg.p_mutation < 0.0 ||
      cfg.p_mutation > 1.0) {
    throw ConfigError("crossover/mutation probabilities must lie in [0,1]");
  }
  if (cfg.min_channels < 0) throw ConfigError("min_channels must be >= 0");
  if (!cfg.admissible.empty() &&
      static_cast<int>(cfg.admissible.size()) != cfg.n_bits) {
    throw ConfigError("admissible mask length does not match genome length");
  }
  const int avail = cfg.admissible.empty() ? cfg.n_bits : popcount(cfg.admissible);
  if (avail < cfg.min_channels) {
    throw ConfigError("admissible channels (" + std::to_string(avail) +
                      ") cannot satisfy min_channels=" + std::to_string(cfg.min_channels));
  }
}

}  // namespace

std::vector<Individual> vary(const std::vector<Individual>& archive, const Spea2Config& cfg,
                             std::mt19937_64& rng) {
  if (archive.empty()) throw ConfigError("variation needs a nonempty archive");
  const std::vector<int> allowed = admissible_indices(cfg);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(archive.size()) - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto tournament = [&]() -> const Individual& {
    const int a = pick(rng);
    const int b = pick(rng);
    const double fa = archive[static_cast<std::size_t>(a)].fitness;
    const double fb = archive[static_cast<std::size_t>(b)].fitness;
    if (fa < fb) return archive[static_cast<std::size_t>(a)];
    if (fb < fa) return archive[static_cast<std::size_t>(b)];
    return unit(rng) < 0.5 ? archive[static_cast<std::size_t>(a)]
                           : archive[static_cast<std::size_t>(b)];
  };

  std::vector<Individual> offspring;
  offspring.reserve(static_cast<std::size_t>(cfg.population));
  const double flip_rate = 1.0 / cfg.n_bits;
  for (int c = 0; c < cfg.population; ++c) {
    const Individual& p1 = tournament();
    const Individual& p2 = tournament();

    Individual child;
    child.mask = p1.mask;
    if (unit(rng) < cfg.p_crossover) {
      for (int i = 0; i < cfg.n_bits; ++i) {
        if (unit(rng) < 0.5) child.mask[static_cast<std::size_t>(i)] = p2.mask[static_cast<std::size_t>(i)];
      }
    }
    if (unit(rng) < cfg.p_mutation) {
      for (int i : allowed) {
        if (unit(rng) < flip_rate) {
          child.mask[static_cast<std::size_t>(i)] ^= 1;
        }
      }
    }
    repair(child.mask, allowed, cfg.min_channels, rng);
    offspring.push_back(std::move(child));
  }
  return offspring;
}

std::vector<std::vector<Individual>> extract_layers(const std::vector<Individual>& pool) {
  std::vector<std::vector<Individual>> layers;
  std::vector<int> remaining;
  for (int i = 0; i < static_cast<int>(pool.size()); ++i) remaining.push_back(i);

  while (!remaining.empty()) {
    std::vector<int> layer, rest;
    for (int i : remaining) {
      bool dominated_by_any = false;
      for (int j : remaining) {
        if (j != i && dominates(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(i)])) {
          dominated_by_any = true;
          break;
        }
      }
      (dominated_by_any ? rest : layer).push_back(i);
    }
    std::vector<Individual> out;
    out.reserve(layer.size());
    for (int i : layer) out.push_back(pool[static_cast<std::size_t>(i)]);
    layers.push_back(std::move(out));
    remaining = std::move(rest);
  }
  return layers;
}

RunResult run(const Evaluator& evaluator, const Spea2Config& cfg) {
  validate_config(cfg);
  auto rng = make_rng(cfg.seed, 0x5ea2);
  const std::vector<int> allowed = admissible_indices(cfg);

  RunResult result;
  std::map<std::string, std::pair<double, double>> cache;
  auto evaluate = [&](Individual& ind) {
    const std::string key = mask_to_string(ind.mask);
    auto it = cache.find(key);
    if (it != cache.end()) {
      ++result.stats.cache_hits;
      ind.f1 = it->second.first;
      ind.f2 = it->second.second;
      return;
    }
    std::pair<double, double> obj;
    try {
      obj = evaluator(ind.mask);
    } catch (const ConfigError& e) {
      throw ConfigError("evaluating mask " + key + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("evaluating mask " + key + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("evaluating mask " + key + ": " + e.what());
    }
    if (!std::isfinite(obj.first) || !std::isfinite(obj.second)) {
      throw NumericError("evaluator returned non-finite objectives for mask " + key);
    }
    ++result.stats.evaluations;
    cache.emplace(key, obj);
    ind.f1 = obj.first;
    ind.f2 = obj.second;
  };

  std::vector<Individual> population;
  population.reserve(static_cast<std::size_t>(cfg.population));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < cfg.population; ++i) {
    Individual ind;
    ind.mask.assign(static_cast<std::size_t>(cfg.n_bits), 0);
    for (int b : allowed) {
      if (unit(rng) < 0.5) ind.mask[static_cast<std::size_t>(b)] = 1;
    }
    repair(ind.mask, allowed, cfg.min_channels, rng);
    population.push_back(std::move(ind));
  }

  std::vector<Individual> archive;
  for (int t = 0; t < cfg.iterations; ++t) {
    for (Individual& ind : population) evaluate(ind);

    std::vector<Individual> pool = population;
    pool.insert(pool.end(), archive.begin(), archive.end());
    assign_fitness(pool);
    archive = environmental_selection(pool, cfg.archive_size);

    // Per-iteration history: best error at each channel count over the
    // nondominated members of the current archive.
    std::map<double, double> best_by_f2;
    const auto archive_layers = extract_layers(archive);
    for (const auto& layer0 : archive_layers.front()) {
      auto it = best_by_f2.find(layer0.f2);
      if (it == best_by_f2.end() || layer0.f1 < it->second) best_by_f2[layer0.f2] = layer0.f1;
    }
    for (const auto& [f2, f1] : best_by_f2) {
      result.history.push_back(HistoryRow{t + 1, f2, f1});
    }

    if (t + 1 < cfg.iterations) population = vary(archive, cfg, rng);
  }

  const auto layers = extract_layers(archive);
  for (std::size_t li = 0; li < layers.size(); ++li) {
    ParetoFront front;
    front.layer = static_cast<int>(li) + 1;
    for (const Individual& ind : layers[li]) {
      front.entries.push_back(FrontEntry{ind.mask, ind.f1, ind.f2});
    }
    std::sort(front.entries.begin(), front.entries.end(),
              [](const FrontEntry& a, const FrontEntry& b) {
                if (a.f2 != b.f2) return a.f2 < b.f2;
                if (a.f1 != b.f1) return a.f1 < b.f1;
                return a.mask < b.mask;
              });
    // Identical masks can survive in the archive via population/archive
    // overlap; the exported front keeps one entry per mask.
    front.entries.erase(std::unique(front.entries.begin(), front.entries.end(),
                                    [](const FrontEntry& a, const FrontEntry& b) {
                                      return a.mask == b.mask;
                                    }),
                        front.entries.end());
    result.layers.push_back(std::move(front));
  }
  result.final_archive = archive;
  return result;
}

}  // namespace pchan::spea2
