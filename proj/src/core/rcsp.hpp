#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "classify.hpp"
#include "eeg_data.hpp"
#include "features.hpp"
#include "mask.hpp"

namespace pchan::rcsp {

// Class spatial covariances, trace-normalized per trial then averaged.
struct CovPair {
  Eigen::MatrixXd c1, c2;
  int n1 = 0, n2 = 0;  // trial counts behind each average
};

struct RcspParams {
  double alpha = 0.0;  // penalty weight
  double beta = 0.0;   // generic-blend weight
  double gamma = 0.0;  // shrinkage weight
  int d_pairs = 3;
  Eigen::MatrixXd penalty_k;  // empty means identity
};

// Per-auxiliary-subject class covariances and trial counts behind
// subject-to-subject covariance transfer.
struct SubjectCov {
  Eigen::MatrixXd c1, c2;
  int n1 = 0, n2 = 0;
  std::string subject_id;
};

struct GenericCov {
  std::vector<SubjectCov> subjects;
  bool empty() const { return subjects.empty(); }
};

struct RcspModel {
  Eigen::MatrixXd w;            // [n_ch x 2*d_pairs], interleaved max/min columns
  Eigen::VectorXd eigenvalues;  // pencil eigenvalue per column
  RcspParams params;
  ChannelMask channel_mask;
};

CovPair covariance(const eeg::TrialSet& trials, const ChannelMask& mask);

GenericCov build_generic(const std::vector<eeg::TrialSet>& aux_subjects,
                         const ChannelMask& mask);

// Blends target covariances toward the generic ones and shrinks toward the
// identity. Requires generic data whenever beta > 0.
CovPair regularize(const CovPair& cov, const GenericCov* generic, const RcspParams& params);

// Plain CSP: pencil (C1, C1 + C2) solved by Cholesky whitening; columns are
// [max1, min1, max2, min2, ...] with w' (C1+C2) w = 1 each.
RcspModel fit_csp(const CovPair& cov, int d_pairs = 3);

// Regularized variant: regularize, then solve the two penalized pencils
// (Ct_c, Ct_1 + Ct_2 + alpha K) and interleave the top d_pairs of each.
RcspModel fit_rcsp(const CovPair& cov, const GenericCov* generic, const RcspParams& params);

// Z = W' X; features are log(var_p / sum var). Length 2*d_pairs.
Eigen::VectorXd project_features(const RcspModel& model, const eeg::EegTrial& trial);
FeatureMatrix project_features(const RcspModel& model, const eeg::TrialSet& trials);

struct RcspGrid {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> gammas;
  static RcspGrid defaults();
};

struct GridPoint {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  double accuracy = 0.0;
};

// Exhaustive grid evaluation by inner stratified-CV accuracy of the full
// rcsp -> ensemble chain; ties prefer smaller alpha, then beta, then gamma.
RcspParams grid_search_params(const eeg::TrialSet& train, const GenericCov* generic,
                              const RcspGrid& grid, int d_pairs, int inner_folds,
                              std::uint64_t seed, const cls::EnsembleOptions& ens,
                              std::vector<GridPoint>* report = nullptr);

}  // namespace pchan::rcsp
