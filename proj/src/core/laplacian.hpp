#pragma once

#include <vector>

#include "eeg_data.hpp"
#include "layout.hpp"

namespace pchan::dsp {

struct Neighbor {
  int index = -1;
  double weight = 0.0;  // normalized inverse-distance weight
};

// Small surface Laplacian: y_c = x_c - sum_i w_i x_{n_i} over the k nearest
// electrodes, weights inversely proportional to distance and normalized to
// sum 1 per channel.
struct LaplacianOperator {
  Eigen::MatrixXd matrix;  // [n_channels x n_channels]
  std::vector<std::vector<Neighbor>> neighbors;
};

LaplacianOperator build_laplacian(const eeg::ChannelLayout& layout, int k_neighbors);

eeg::EegTrial apply_spatial(const LaplacianOperator& op, const eeg::EegTrial& trial);
Eigen::MatrixXd apply_spatial(const LaplacianOperator& op, const Eigen::MatrixXd& data);

}  // namespace pchan::dsp
