#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "core/errors.hpp"
#include "core/spea2.hpp"

using namespace pchan;

namespace {

std::vector<spea2::Individual> random_pool(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<spea2::Individual> pool(static_cast<std::size_t>(n));
  for (auto& ind : pool) {
    ind.f1 = unit(rng);
    ind.f2 = std::floor(unit(rng) * 10.0);  // coarse grid forces ties
  }
  return pool;
}

spea2::Individual point(double f1, double f2) {
  spea2::Individual ind;
  ind.f1 = f1;
  ind.f2 = f2;
  return ind;
}

}  // namespace

TEST_CASE("strict dominance under minimization") {
  CHECK(spea2::dominates(1.0, 1.0, 2.0, 2.0));
  CHECK(spea2::dominates(1.0, 2.0, 1.0, 3.0));
  CHECK(spea2::dominates(1.0, 2.0, 2.0, 2.0));
  CHECK_FALSE(spea2::dominates(1.0, 1.0, 1.0, 1.0));
  CHECK_FALSE(spea2::dominates(1.0, 3.0, 2.0, 2.0));
  CHECK_FALSE(spea2::dominates(2.0, 2.0, 1.0, 3.0));
}

TEST_CASE("fitness assignment matches a quadratic-time scratch oracle") {
  std::vector<spea2::Individual> pool = random_pool(20, 3);
  spea2::assign_fitness(pool);

  const int n = 20;
  const int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  for (int i = 0; i < n; ++i) {
    int strength = 0;
    for (int j = 0; j < n; ++j) {
      if (j != i && spea2::dominates(pool[static_cast<std::size_t>(i)].f1,
                                     pool[static_cast<std::size_t>(i)].f2,
                                     pool[static_cast<std::size_t>(j)].f1,
                                     pool[static_cast<std::size_t>(j)].f2)) {
        ++strength;
      }
    }
    CHECK(pool[static_cast<std::size_t>(i)].strength == strength);
  }
  for (int i = 0; i < n; ++i) {
    double raw = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != i && spea2::dominates(pool[static_cast<std::size_t>(j)].f1,
                                     pool[static_cast<std::size_t>(j)].f2,
                                     pool[static_cast<std::size_t>(i)].f1,
                                     pool[static_cast<std::size_t>(i)].f2)) {
        raw += pool[static_cast<std::size_t>(j)].strength;
      }
    }
    CHECK(pool[static_cast<std::size_t>(i)].raw_fitness == raw);

    std::vector<double> d;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      d.push_back(std::hypot(pool[static_cast<std::size_t>(i)].f1 - pool[static_cast<std::size_t>(j)].f1,
                             pool[static_cast<std::size_t>(i)].f2 - pool[static_cast<std::size_t>(j)].f2));
    }
    std::sort(d.begin(), d.end());
    const double density = 1.0 / (d[static_cast<std::size_t>(k - 1)] + 2.0);
    CHECK(pool[static_cast<std::size_t>(i)].density == doctest::Approx(density).epsilon(1e-12));
    CHECK(pool[static_cast<std::size_t>(i)].fitness ==
          doctest::Approx(raw + density).epsilon(1e-12));
  }
}

TEST_CASE("nondominated members always reach the archive") {
  std::vector<spea2::Individual> pool = {
      point(0.0, 5.0), point(2.0, 2.0), point(5.0, 0.0),  // nondominated
      point(1.0, 6.0), point(3.0, 3.0), point(6.0, 1.0),
      point(4.0, 4.0), point(2.5, 2.5), point(7.0, 7.0), point(8.0, 8.0)};
  spea2::assign_fitness(pool);
  const std::vector<spea2::Individual> archive = spea2::environmental_selection(pool, 5);
  REQUIRE(archive.size() == 5);

  auto contains = [&](double f1, double f2) {
    return std::any_of(archive.begin(), archive.end(), [&](const spea2::Individual& a) {
      return a.f1 == f1 && a.f2 == f2;
    });
  };
  CHECK(contains(0.0, 5.0));
  CHECK(contains(2.0, 2.0));
  CHECK(contains(5.0, 0.0));

  // the two dominated fillers are the lowest-fitness dominated members
  std::vector<std::pair<double, int>> dominated_fitness;
  for (int i = 0; i < 10; ++i) {
    if (pool[static_cast<std::size_t>(i)].raw_fitness > 0.0) {
      dominated_fitness.emplace_back(pool[static_cast<std::size_t>(i)].fitness, i);
    }
  }
  std::sort(dominated_fitness.begin(), dominated_fitness.end());
  for (int p = 0; p < 2; ++p) {
    const auto& ind = pool[static_cast<std::size_t>(dominated_fitness[static_cast<std::size_t>(p)].second)];
    CHECK(contains(ind.f1, ind.f2));
  }
}

TEST_CASE("truncation never drops the per-objective extremes") {
  std::vector<spea2::Individual> pool = {point(0.0, 4.0), point(1.0, 3.0), point(2.0, 2.0),
                                         point(3.0, 1.0), point(4.0, 0.0)};
  spea2::assign_fitness(pool);
  for (int size = 2; size <= 4; ++size) {
    const std::vector<spea2::Individual> archive = spea2::environmental_selection(pool, size);
    REQUIRE(static_cast<int>(archive.size()) == size);
    bool has_min_f1 = false, has_min_f2 = false;
    for (const auto& a : archive) {
      if (a.f1 == 0.0 && a.f2 == 4.0) has_min_f1 = true;
      if (a.f1 == 4.0 && a.f2 == 0.0) has_min_f2 = true;
    }
    CHECK(has_min_f1);
    CHECK(has_min_f2);
  }

  // the most crowded interior point goes first
  const std::vector<spea2::Individual> four = spea2::environmental_selection(pool, 4);
  CHECK(std::none_of(four.begin(), four.end(),
                     [](const spea2::Individual& a) { return a.f1 == 2.0; }));
}

TEST_CASE("layer extraction equals brute-force peeling") {
  // explicit chain: each point dominates the next
  std::vector<spea2::Individual> chain = {point(1.0, 1.0), point(2.0, 2.0), point(3.0, 3.0)};
  const auto chain_layers = spea2::extract_layers(chain);
  REQUIRE(chain_layers.size() == 3);
  CHECK(chain_layers[0].size() == 1);
  CHECK(chain_layers[0][0].f1 == 1.0);
  CHECK(chain_layers[2][0].f1 == 3.0);

  std::vector<spea2::Individual> pool = random_pool(100, 7);
  const auto layers = spea2::extract_layers(pool);

  // scratch peeling on (f1, f2) pairs
  std::vector<std::pair<double, double>> rem;
  for (const auto& ind : pool) rem.emplace_back(ind.f1, ind.f2);
  std::size_t li = 0;
  std::size_t total = 0;
  while (!rem.empty()) {
    std::vector<std::pair<double, double>> layer, rest;
    for (const auto& p : rem) {
      bool dominated = false;
      for (const auto& q : rem) {
        // a point never dominates itself or an exact duplicate
        if (spea2::dominates(q.first, q.second, p.first, p.second)) {
          dominated = true;
          break;
        }
      }
      (dominated ? rest : layer).push_back(p);
    }
    REQUIRE(li < layers.size());
    REQUIRE(layers[li].size() == layer.size());
    std::multiset<std::pair<double, double>> want(layer.begin(), layer.end()), got;
    for (const auto& ind : layers[li]) got.emplace(ind.f1, ind.f2);
    CHECK(got == want);
    total += layer.size();
    rem = std::move(rest);
    ++li;
  }
  CHECK(li == layers.size());
  CHECK(total == pool.size());

  // within a layer nobody dominates anybody
  for (const auto& layer : layers) {
    for (const auto& a : layer) {
      for (const auto& b : layer) {
        CHECK_FALSE(spea2::dominates(a.f1, a.f2, b.f1, b.f2));
      }
    }
  }
}

TEST_CASE("variation respects the admissible set and the channel floor") {
  spea2::Spea2Config cfg;
  cfg.population = 40;
  cfg.n_bits = 10;
  cfg.min_channels = 3;
  cfg.admissible = ChannelMask{1, 1, 1, 0, 1, 1, 0, 1, 1, 1};

  std::vector<spea2::Individual> archive;
  std::mt19937_64 seed_rng(9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    spea2::Individual ind;
    ind.mask.assign(10, 0);
    for (std::size_t b = 0; b < 10; ++b) {
      if (cfg.admissible[b] && unit(seed_rng) < 0.6) ind.mask[b] = 1;
    }
    while (popcount(ind.mask) < cfg.min_channels) {
      const std::size_t b = static_cast<std::size_t>(seed_rng() % 10);
      if (cfg.admissible[b]) ind.mask[b] = 1;
    }
    ind.fitness = unit(seed_rng);
    archive.push_back(std::move(ind));
  }

  std::mt19937_64 rng(11);
  const std::vector<spea2::Individual> kids = spea2::vary(archive, cfg, rng);
  REQUIRE(kids.size() == 40);
  for (const auto& kid : kids) {
    REQUIRE(kid.mask.size() == 10);
    CHECK(kid.mask[3] == 0);
    CHECK(kid.mask[6] == 0);
    CHECK(popcount(kid.mask) >= 3);
  }
}

TEST_CASE("search recovers the exact pareto front of a toy problem") {
  // error falls only with bits set in the first half; every extra bit costs
  const int half = 4;
  const spea2::Evaluator eval = [&](const ChannelMask& m) {
    int good = 0;
    for (int i = 0; i < half; ++i) good += m[static_cast<std::size_t>(i)] ? 1 : 0;
    return std::make_pair(1.0 - static_cast<double>(good) / half,
                          static_cast<double>(popcount(m)));
  };

  spea2::Spea2Config cfg;
  cfg.iterations = 15;
  cfg.population = 30;
  cfg.archive_size = 30;
  cfg.n_bits = 8;
  cfg.min_channels = 2;
  cfg.seed = 5;

  const spea2::RunResult res = spea2::run(eval, cfg);
  REQUIRE_FALSE(res.layers.empty());
  const spea2::ParetoFront& front = res.layers.front();

  std::set<std::pair<double, double>> got;
  for (const auto& e : front.entries) got.emplace(e.f2, e.f1);
  const std::set<std::pair<double, double>> want = {{2.0, 0.5}, {3.0, 0.25}, {4.0, 0.0}};
  CHECK(got == want);
  for (const auto& e : front.entries) {
    // optimal masks never spend bits outside the informative half
    for (int i = half; i < cfg.n_bits; ++i) CHECK(e.mask[static_cast<std::size_t>(i)] == 0);
  }

  // memoization: distinct masks evaluated once, repeats served from cache
  CHECK(res.stats.evaluations < static_cast<long long>(cfg.population) * cfg.iterations);
  CHECK(res.stats.cache_hits > 0);

  // history covers every iteration and never regresses per channel count
  std::set<int> iters;
  for (const auto& row : res.history) iters.insert(row.iteration);
  CHECK(static_cast<int>(iters.size()) == cfg.iterations);
  CHECK(*iters.begin() == 1);
  CHECK(*iters.rbegin() == cfg.iterations);
  std::map<double, double> last_best;
  for (const auto& row : res.history) {
    auto it = last_best.find(row.f2);
    if (it != last_best.end()) CHECK(row.best_f1 <= it->second + 1e-15);
    last_best[row.f2] = row.best_f1;
  }
}

TEST_CASE("identical seeds give identical runs") {
  const spea2::Evaluator eval = [](const ChannelMask& m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) acc += std::sin(static_cast<double>(i) + 1.0);
    }
    return std::make_pair(std::abs(acc), static_cast<double>(popcount(m)));
  };
  spea2::Spea2Config cfg;
  cfg.iterations = 8;
  cfg.population = 20;
  cfg.archive_size = 20;
  cfg.n_bits = 12;
  cfg.min_channels = 2;
  cfg.seed = 99;

  const spea2::RunResult a = spea2::run(eval, cfg);
  const spea2::RunResult b = spea2::run(eval, cfg);
  REQUIRE(a.layers.size() == b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    REQUIRE(a.layers[i].entries.size() == b.layers[i].entries.size());
    for (std::size_t j = 0; j < a.layers[i].entries.size(); ++j) {
      CHECK(a.layers[i].entries[j].mask == b.layers[i].entries[j].mask);
      CHECK(a.layers[i].entries[j].f1 == b.layers[i].entries[j].f1);
      CHECK(a.layers[i].entries[j].f2 == b.layers[i].entries[j].f2);
    }
  }
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].iteration == b.history[i].iteration);
    CHECK(a.history[i].f2 == b.history[i].f2);
    CHECK(a.history[i].best_f1 == b.history[i].best_f1);
  }
  CHECK(a.stats.evaluations == b.stats.evaluations);
  CHECK(a.stats.cache_hits == b.stats.cache_hits);
}

TEST_CASE("every evaluated mask honors the channel floor") {
  int min_seen = 1 << 20;
  const spea2::Evaluator eval = [&](const ChannelMask& m) {
    min_seen = std::min(min_seen, popcount(m));
    return std::make_pair(0.5, static_cast<double>(popcount(m)));
  };
  spea2::Spea2Config cfg;
  cfg.iterations = 5;
  cfg.population = 16;
  cfg.archive_size = 16;
  cfg.n_bits = 9;
  cfg.min_channels = 4;
  cfg.seed = 17;
  spea2::run(eval, cfg);
  CHECK(min_seen >= 4);
}

TEST_CASE("config validation rejects impossible settings") {
  const spea2::Evaluator eval = [](const ChannelMask& m) {
    return std::make_pair(0.0, static_cast<double>(popcount(m)));
  };
  spea2::Spea2Config cfg;
  cfg.n_bits = 6;

  spea2::Spea2Config bad = cfg;
  bad.population = 1;
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  bad = cfg;
  bad.n_bits = 0;
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  bad = cfg;
  bad.iterations = 0;
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  bad = cfg;
  bad.p_crossover = 1.5;
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  bad = cfg;
  bad.admissible = ChannelMask{1, 1};  // wrong length
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  bad = cfg;
  bad.admissible = ChannelMask{1, 1, 0, 0, 0, 0};
  bad.min_channels = 3;  // only 2 admissible channels
  CHECK_THROWS_AS(spea2::run(eval, bad), ConfigError);

  CHECK_THROWS_AS(spea2::environmental_selection({}, 0), ConfigError);
  std::vector<spea2::Individual> empty;
  CHECK_THROWS_AS(spea2::assign_fitness(empty), ConfigError);
}

TEST_CASE("evaluator failures carry the offending mask") {
  const spea2::Evaluator eval = [](const ChannelMask&) -> std::pair<double, double> {
    throw NumericError("boom");
  };
  spea2::Spea2Config cfg;
  cfg.iterations = 2;
  cfg.population = 4;
  cfg.n_bits = 4;
  cfg.min_channels = 2;
  CHECK_THROWS_WITH_AS(spea2::run(eval, cfg), doctest::Contains("evaluating mask"),
                       NumericError);

  const spea2::Evaluator nan_eval = [](const ChannelMask& m) {
    return std::make_pair(std::nan(""), static_cast<double>(popcount(m)));
  };
  CHECK_THROWS_WITH_AS(spea2::run(nan_eval, cfg), doctest::Contains("non-finite"),
                       NumericError);
}
