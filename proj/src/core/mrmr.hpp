#pragma once

#include <cstdint>
#include <vector>

#include "classify.hpp"
#include "features.hpp"

namespace pchan::fsel {

// Discretizes a continuous vector into equal-frequency bins (categorical
// passthrough when there are at most `bins` distinct values), then estimates
// mutual information from the joint histogram. Natural log units.
std::vector<int> discretize(const std::vector<double>& x, int bins);
double mutual_information(const std::vector<int>& xc, const std::vector<int>& yc);
double mutual_information(const std::vector<double>& x, const std::vector<double>& y, int bins);

struct MrmrSelection {
  std::vector<int> selected;  // feature indices, best first
  std::vector<double> scores; // greedy criterion value at each pick
};

// Greedy max-relevance min-redundancy ranking (difference form); ties pick
// the lower feature index.
MrmrSelection mrmr_select(const FeatureMatrix& data, int k, int bins);

// Sweeps prefixes of the full ranking with ensemble cross-validation and
// returns the prefix length with the best mean accuracy (ties: shorter).
int choose_k(const FeatureMatrix& data, int bins, int n_folds, std::uint64_t seed,
             const cls::EnsembleOptions& opt);

}  // namespace pchan::fsel
