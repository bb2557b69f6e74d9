#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "features.hpp"

namespace pchan::cls {

// Two-class Gaussian LDA with shared (ridge-stabilized) covariance.
struct LdaModel {
  Eigen::VectorXd mean1, mean2;
  Eigen::MatrixXd pooled_inv;
  double log_prior1 = 0.0, log_prior2 = 0.0;

  // Discriminant difference g1(x) - g2(x); ties ( == 0) go to class 1.
  double score(const Eigen::VectorXd& x) const;
  int predict(const Eigen::VectorXd& x) const { return score(x) >= 0.0 ? 1 : 2; }
};

LdaModel train_lda(const FeatureMatrix& train);

struct KnnModel {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  int k = 6;

  int predict(const Eigen::VectorXd& q) const;
};

struct SvmKernel {
  enum Kind { linear, poly } kind = linear;
  int degree = 3;
  double coef0 = 1.0;

  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

struct SvmModel {
  Eigen::MatrixXd support_x;     // rows are support vectors
  Eigen::VectorXd coeff;         // alpha_i * y_i per support vector
  double bias = 0.0;
  SvmKernel kernel;
  int iterations = 0;

  double decision(const Eigen::VectorXd& q) const;
  int predict(const Eigen::VectorXd& q) const { return decision(q) >= 0.0 ? 1 : 2; }
};

// Deterministic sequential minimal optimization (maximal-violating-pair
// selection); labels 1/2 map to +1/-1. The iteration budget is
// max_passes * n_samples pair updates.
SvmModel train_svm(const FeatureMatrix& train, const SvmKernel& kernel, double c,
                   double tol = 1e-3, int max_passes = 10000);

// Per-feature zero-mean unit-variance scaling fit on training data; features
// with zero variance pass through unscaled.
struct Standardizer {
  Eigen::VectorXd mean, scale;

  void fit(const Eigen::MatrixXd& x);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct EnsembleOptions {
  double svm_c = 1.0;
  int poly_degree = 3;
  double poly_coef0 = 1.0;
  int knn_k = 6;
};

// LDA + k-NN + linear SVM + polynomial SVM, hard majority vote. SVMs and
// k-NN see standardized features; LDA sees the raw ones. A 2-2 split falls
// back to the LDA vote.
struct TrainedEnsemble {
  LdaModel lda;
  KnnModel knn;
  SvmModel svm_linear, svm_poly;
  Standardizer standardizer;

  int predict(const Eigen::VectorXd& x) const;
};

TrainedEnsemble train_ensemble(const FeatureMatrix& train, const EnsembleOptions& opt = {});

// fold id per sample; class proportions preserved per fold, shuffling seeded.
std::vector<int> stratified_folds(const std::vector<int>& labels, int n_folds,
                                  std::uint64_t seed);

struct CvReport {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
  std::vector<int> fold_ids;
};

using Predictor = std::function<int(const Eigen::VectorXd&)>;
using Trainer = std::function<Predictor(const FeatureMatrix&)>;

CvReport cross_validate(const FeatureMatrix& data, const std::vector<int>& fold_ids,
                        const Trainer& trainer);
CvReport cross_validate(const FeatureMatrix& data, int n_folds, std::uint64_t seed,
                        const Trainer& trainer);

}  // namespace pchan::cls
