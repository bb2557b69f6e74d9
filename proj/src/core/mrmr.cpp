#include "mrmr.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>

#include "errors.hpp"

namespace pchan::fsel {

std::vector<int> discretize(const std::vector<double>& x, int bins) {
  if (bins < 2) throw ConfigError("discretization needs at least 2 bins");
  const std::size_t n = x.size();
  if (n == 0) throw DataError("cannot discretize an empty vector");

  std::map<double, int> distinct;
  for (double v : x) {
    if (distinct.emplace(v, 0).second && static_cast<int>(distinct.size()) > bins) break;
  }
  if (static_cast<int>(distinct.size()) <= bins) {
    // Few distinct values: treat as categorical, one bin per value.
    int next = 0;
    for (auto& [v, id] : distinct) id = next++;
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = distinct.at(x[i]);
    return out;
  }

  // Equal-frequency binning on the stable (value, index) order, so any
  // monotone transform of x yields identical bins.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && a < b);
  });
  std::vector<int> out(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    out[idx[rank]] = static_cast<int>((rank * static_cast<std::size_t>(bins)) / n);
  }
  return out;
}

double mutual_information(const std::vector<int>& xc, const std::vector<int>& yc) {
  if (xc.size() != yc.size() || xc.empty()) {
    throw DataError("mutual information needs two equal-length nonempty vectors");
  }
  const double n = static_cast<double>(xc.size());
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> px, py;
  for (std::size_t i = 0; i < xc.size(); ++i) {
    joint[{xc[i], yc[i]}] += 1.0;
    px[xc[i]] += 1.0;
    py[yc[i]] += 1.0;
  }
  double mi = 0.0;
  for (const auto& [xy, c] : joint) {
    const double pxy = c / n;
    mi += pxy * std::log(pxy * n * n / (px[xy.first] * py[xy.second]));
  }
  return std::max(0.0, mi);
}

double mutual_information(const std::vector<double>& x, const std::vector<double>& y, int bins) {
  return mutual_information(discretize(x, bins), discretize(y, bins));
}

MrmrSelection mrmr_select(const FeatureMatrix& data, int k, int bins) {
  const int d = data.n_features();
  const int n = data.n_samples();
  if (n < 1 || d < 1) throw DataError("mrmr needs a nonempty feature matrix");
  if (k < 1 || k > d) throw ConfigError("mrmr k must be in [1, n_features]");

  std::vector<std::vector<int>> cols(static_cast<std::size_t>(d));
  std::vector<double> buf(static_cast<std::size_t>(n));
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < n; ++i) buf[static_cast<std::size_t>(i)] = data.x(i, j);
    cols[static_cast<std::size_t>(j)] = discretize(buf, bins);
  }
  std::vector<int> ycat(data.labels.begin(), data.labels.end());

  std::vector<double> relevance(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    relevance[static_cast<std::size_t>(j)] = mutual_information(cols[static_cast<std::size_t>(j)], ycat);
  }

  MrmrSelection sel;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  std::vector<double> redundancy(static_cast<std::size_t>(d), 0.0);

  for (int pick = 0; pick < k; ++pick) {
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j < d; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double red =
          pick == 0 ? 0.0 : redundancy[static_cast<std::size_t>(j)] / pick;
      const double score = relevance[static_cast<std::size_t>(j)] - red;
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    sel.selected.push_back(best);
    sel.scores.push_back(best_score);
    for (int j = 0; j < d; ++j) {
      if (!used[static_cast<std::size_t>(j)]) {
        redundancy[static_cast<std::size_t>(j)] +=
            mutual_information(cols[static_cast<std::size_t>(j)], cols[static_cast<std::size_t>(best)]);
      }
    }
  }
  return sel;
}

int choose_k(const FeatureMatrix& data, int bins, int n_folds, std::uint64_t seed,
             const cls::EnsembleOptions& opt) {
  const int d = data.n_features();
  const MrmrSelection sel = mrmr_select(data, d, bins);
  const std::vector<int> folds = cls::stratified_folds(data.labels, n_folds, seed);

  int best_k = 1;
  double best_acc = -1.0;
  for (int k = 1; k <= d; ++k) {
    FeatureMatrix sub;
    sub.x.resize(data.x.rows(), k);
    sub.labels = data.labels;
    for (int j = 0; j < k; ++j) sub.x.col(j) = data.x.col(sel.selected[static_cast<std::size_t>(j)]);

    const cls::CvReport rep = cls::cross_validate(sub, folds, [&](const FeatureMatrix& tr) {
      auto model = std::make_shared<cls::TrainedEnsemble>(cls::train_ensemble(tr, opt));
      return [model](const Eigen::VectorXd& v) { return model->predict(v); };
    });
    if (rep.mean_accuracy > best_acc) {  // strict: ties keep the shorter prefix
      best_acc = rep.mean_accuracy;
      best_k = k;
    }
  }
  return best_k;
}

}  // namespace pchan::fsel
