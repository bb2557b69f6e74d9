#pragma once

#include <Eigen/Dense>
#include <vector>

namespace pchan {

// Rows are trials, columns are features; labels[i] belongs to row i.
struct FeatureMatrix {
  Eigen::MatrixXd x;
  std::vector<int> labels;

  int n_samples() const { return static_cast<int>(x.rows()); }
  int n_features() const { return static_cast<int>(x.cols()); }
};

}  // namespace pchan
