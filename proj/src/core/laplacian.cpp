#include "laplacian.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace pchan::dsp {

LaplacianOperator build_laplacian(const eeg::ChannelLayout& layout, int k_neighbors) {
  const int n = layout.size();
  if (n < 2) throw ConfigError("laplacian needs at least 2 channels");
  if (k_neighbors < 1) throw ConfigError("laplacian neighbor count must be >= 1");
  const int k = std::min(k_neighbors, n - 1);

  LaplacianOperator op;
  op.matrix = Eigen::MatrixXd::Zero(n, n);
  op.neighbors.resize(static_cast<std::size_t>(n));

  std::vector<std::pair<double, int>> dist;
  dist.reserve(static_cast<std::size_t>(n - 1));
  for (int c = 0; c < n; ++c) {
    dist.clear();
    for (int j = 0; j < n; ++j) {
      if (j == c) continue;
      const double dx = layout.at(c).x - layout.at(j).x;
      const double dy = layout.at(c).y - layout.at(j).y;
      const double d = std::hypot(dx, dy);
      if (!(d > 0.0)) {
        throw DataError("channels '" + layout.at(c).name + "' and '" + layout.at(j).name +
                        "' share a position; laplacian weights undefined");
      }
      dist.emplace_back(d, j);
    }
    // Ties on distance resolve to the lower channel index.
    std::sort(dist.begin(), dist.end());

    double wsum = 0.0;
    for (int i = 0; i < k; ++i) wsum += 1.0 / dist[static_cast<std::size_t>(i)].first;

    op.matrix(c, c) = 1.0;
    auto& nb = op.neighbors[static_cast<std::size_t>(c)];
    nb.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
      const auto& [d, j] = dist[static_cast<std::size_t>(i)];
      const double w = (1.0 / d) / wsum;
      op.matrix(c, j) = -w;
      nb.push_back(Neighbor{j, w});
    }
  }
  return op;
}

Eigen::MatrixXd apply_spatial(const LaplacianOperator& op, const Eigen::MatrixXd& data) {
  if (data.rows() != op.matrix.rows()) {
    throw DataError("spatial filter built for " + std::to_string(op.matrix.rows()) +
                    " channels applied to " + std::to_string(data.rows()));
  }
  return op.matrix * data;
}

eeg::EegTrial apply_spatial(const LaplacianOperator& op, const eeg::EegTrial& trial) {
  eeg::EegTrial out = trial;
  out.data = apply_spatial(op, trial.data);
  return out;
}

}  // namespace pchan::dsp
