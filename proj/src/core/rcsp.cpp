#include "rcsp.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "log.hpp"
#include "rng.hpp"

namespace pchan::rcsp {

namespace {

Eigen::MatrixXd restrict_rows(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return out;
}

Eigen::MatrixXd trial_cov(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd p = x * x.transpose();
  const double tr = p.trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw NumericError("trial covariance has non-positive trace " + std::to_string(tr));
  }
  p /= tr;
  return 0.5 * (p + p.transpose());
}

void check_min_eigenvalue(const Eigen::MatrixXd& b, const char* what) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(1.0, hi))) {
    throw NumericError(std::string(what) + " is singular (smallest eigenvalue " +
                       std::to_string(lo) + ")");
  }
}

// Largest-magnitude entry made positive; first such entry decides on ties.
void sign_normalize(Eigen::MatrixXd& w) {
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < w.rows(); ++r) {
      if (std::abs(w(r, c)) > std::abs(w(best, c))) best = r;
    }
    if (w(best, c) < 0.0) w.col(c) = -w.col(c);
  }
}

}  // namespace

CovPair covariance(const eeg::TrialSet& trials, const ChannelMask& mask) {
  const std::vector<int> idx = mask_indices(mask);
  if (idx.size() < 2) throw ConfigError("covariance needs a mask selecting >= 2 channels");

  CovPair out;
  const Eigen::Index m = static_cast<Eigen::Index>(idx.size());
  out.c1 = Eigen::MatrixXd::Zero(m, m);
  out.c2 = Eigen::MatrixXd::Zero(m, m);
  for (const eeg::EegTrial& t : trials.trials) {
    if (t.data.rows() != static_cast<Eigen::Index>(mask.size())) {
      throw DataError("trial has " + std::to_string(t.data.rows()) +
                      " channels but the mask covers " + std::to_string(mask.size()));
    }
    const Eigen::MatrixXd c = trial_cov(restrict_rows(t.data, idx));
    if (t.label == 1) {
      out.c1 += c;
      ++out.n1;
    } else {
      out.c2 += c;
      ++out.n2;
    }
  }
  if (out.n1 == 0 || out.n2 == 0) {
    throw DataError("covariance needs trials from both classes (got " +
                    std::to_string(out.n1) + " / " + std::to_string(out.n2) + ")");
  }
  out.c1 /= out.n1;
  out.c2 /= out.n2;
  return out;
}

GenericCov build_generic(const std::vector<eeg::TrialSet>& aux_subjects,
                         const ChannelMask& mask) {
  GenericCov g;
  g.subjects.reserve(aux_subjects.size());
  for (const eeg::TrialSet& ts : aux_subjects) {
    const CovPair cp = covariance(ts, mask);
    SubjectCov sc;
    sc.c1 = cp.c1;
    sc.c2 = cp.c2;
    sc.n1 = cp.n1;
    sc.n2 = cp.n2;
    sc.subject_id = ts.subject_id;
    g.subjects.push_back(std::move(sc));
  }
  return g;
}

CovPair regularize(const CovPair& cov, const GenericCov* generic, const RcspParams& params) {
  if (!(params.alpha >= 0.0)) throw ConfigError("alpha must be >= 0");
  if (!(params.beta >= 0.0 && params.beta <= 1.0)) throw ConfigError("beta must be in [0,1]");
  if (!(params.gamma >= 0.0 && params.gamma <= 1.0)) throw ConfigError("gamma must be in [0,1]");
  const bool have_generic = generic != nullptr && !generic->empty();
  if (params.beta > 0.0 && !have_generic) {
    throw ConfigError("beta > 0 requires covariance data from auxiliary subjects");
  }

  const Eigen::Index m = cov.c1.rows();
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);

  CovPair out;
  out.n1 = cov.n1;
  out.n2 = cov.n2;
  for (int cls = 1; cls <= 2; ++cls) {
    const Eigen::MatrixXd& c = cls == 1 ? cov.c1 : cov.c2;
    const int n_own = cls == 1 ? cov.n1 : cov.n2;

    int n_aux = 0;
    Eigen::MatrixXd gsum = Eigen::MatrixXd::Zero(m, m);
    if (have_generic) {
      for (const SubjectCov& s : generic->subjects) {
        const Eigen::MatrixXd& cs = cls == 1 ? s.c1 : s.c2;
        if (cs.rows() != m) {
          throw DataError("generic covariance dimension " + std::to_string(cs.rows()) +
                          " does not match target dimension " + std::to_string(m));
        }
        const int ns = cls == 1 ? s.n1 : s.n2;
        n_aux += ns;
        gsum += ns * cs;
      }
    }
    const double n_total = n_own + n_aux;
    const double s_c = n_own / n_total;
    const Eigen::MatrixXd g_c = gsum / n_total;

    Eigen::MatrixXd hat = (1.0 - params.beta) * s_c * c + params.beta * g_c;
    Eigen::MatrixXd tilde = (1.0 - params.gamma) * hat + params.gamma * eye;
    (cls == 1 ? out.c1 : out.c2) = std::move(tilde);
  }
  return out;
}

namespace {

struct Whitened {
  Eigen::LLT<Eigen::MatrixXd> llt;

  explicit Whitened(const Eigen::MatrixXd& b) : llt(b) {
    if (llt.info() != Eigen::Success) {
      throw NumericError("composite covariance Cholesky factorization failed");
    }
  }

  // M = L^-1 A L^-T, symmetrized.
  Eigen::MatrixXd whiten(const Eigen::MatrixXd& a) const {
    const Eigen::MatrixXd y = llt.matrixL().solve(a);
    Eigen::MatrixXd msym = llt.matrixL().solve(y.transpose()).transpose();
    return 0.5 * (msym + msym.transpose());
  }

  // w = L^-T u, so that w' B w = u'u.
  Eigen::MatrixXd unwhiten(const Eigen::MatrixXd& u) const {
    return llt.matrixU().solve(u);
  }
};

void check_d_pairs(int d_pairs, Eigen::Index m) {
  if (d_pairs < 1) throw ConfigError("d_pairs must be >= 1");
  if (2 * d_pairs > m) {
    throw ConfigError("d_pairs=" + std::to_string(d_pairs) + " needs at least " +
                      std::to_string(2 * d_pairs) + " channels, mask has " + std::to_string(m));
  }
}

}  // namespace

RcspModel fit_csp(const CovPair& cov, int d_pairs) {
  const Eigen::Index m = cov.c1.rows();
  check_d_pairs(d_pairs, m);

  Eigen::MatrixXd b = cov.c1 + cov.c2;
  b = 0.5 * (b + b.transpose());
  check_min_eigenvalue(b, "composite covariance C1 + C2");

  const Whitened wh(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(wh.whiten(cov.c1));
  if (es.info() != Eigen::Success) throw NumericError("csp eigendecomposition failed");

  RcspModel model;
  model.params.d_pairs = d_pairs;
  model.w.resize(m, 2 * d_pairs);
  model.eigenvalues.resize(2 * d_pairs);
  Eigen::MatrixXd u(m, 2 * d_pairs);
  for (int p = 0; p < d_pairs; ++p) {
    u.col(2 * p) = es.eigenvectors().col(m - 1 - p);  // largest lambda
    u.col(2 * p + 1) = es.eigenvectors().col(p);      // smallest lambda
    model.eigenvalues(2 * p) = es.eigenvalues()(m - 1 - p);
    model.eigenvalues(2 * p + 1) = es.eigenvalues()(p);
  }
  model.w = wh.unwhiten(u);
  sign_normalize(model.w);
  return model;
}

RcspModel fit_rcsp(const CovPair& cov, const GenericCov* generic, const RcspParams& params) {
  const Eigen::Index m = cov.c1.rows();
  check_d_pairs(params.d_pairs, m);

  Eigen::MatrixXd k;
  if (params.penalty_k.size() == 0) {
    k = Eigen::MatrixXd::Identity(m, m);
  } else {
    k = params.penalty_k;
    if (k.rows() != m || k.cols() != m) {
      throw ConfigError("penalty matrix K must be " + std::to_string(m) + "x" +
                        std::to_string(m));
    }
    if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw ConfigError("penalty matrix K must be symmetric");
    }
  }

  const CovPair reg = regularize(cov, generic, params);
  Eigen::MatrixXd b = reg.c1 + reg.c2 + params.alpha * k;
  b = 0.5 * (b + b.transpose());
  check_min_eigenvalue(b, "penalized composite covariance");

  const Whitened wh(b);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es1(wh.whiten(reg.c1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(wh.whiten(reg.c2));
  if (es1.info() != Eigen::Success || es2.info() != Eigen::Success) {
    throw NumericError("rcsp eigendecomposition failed");
  }

  RcspModel model;
  model.params = params;
  model.w.resize(m, 2 * params.d_pairs);
  model.eigenvalues.resize(2 * params.d_pairs);
  Eigen::MatrixXd u(m, 2 * params.d_pairs);
  for (int p = 0; p < params.d_pairs; ++p) {
    // Even columns favor class 1, odd columns favor class 2.
    u.col(2 * p) = es1.eigenvectors().col(m - 1 - p);
    u.col(2 * p + 1) = es2.eigenvectors().col(m - 1 - p);
    model.eigenvalues(2 * p) = es1.eigenvalues()(m - 1 - p);
    model.eigenvalues(2 * p + 1) = es2.eigenvalues()(m - 1 - p);
  }
  model.w = wh.unwhiten(u);
  sign_normalize(model.w);
  return model;
}

Eigen::VectorXd project_features(const RcspModel& model, const eeg::EegTrial& trial) {
  Eigen::MatrixXd x;
  if (trial.data.rows() == model.w.rows()) {
    x = trial.data;
  } else if (!model.channel_mask.empty() &&
             trial.data.rows() == static_cast<Eigen::Index>(model.channel_mask.size())) {
    x = restrict_rows(trial.data, mask_indices(model.channel_mask));
  } else {
    throw DataError("trial has " + std::to_string(trial.data.rows()) +
                    " channels; model expects " + std::to_string(model.w.rows()));
  }

  const Eigen::MatrixXd z = model.w.transpose() * x;
  const Eigen::Index p = z.rows();
  Eigen::VectorXd var(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double mean = z.row(i).mean();
    var(i) = (z.row(i).array() - mean).square().mean();
  }
  const double total = var.sum();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("projected trial has zero total variance");
  }
  Eigen::VectorXd f(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    f(i) = std::log(std::max(var(i), 1e-300) / total);
  }
  return f;
}

FeatureMatrix project_features(const RcspModel& model, const eeg::TrialSet& trials) {
  FeatureMatrix fm;
  const Eigen::Index n = static_cast<Eigen::Index>(trials.trials.size());
  fm.x.resize(n, model.w.cols());
  fm.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    fm.x.row(i) = project_features(model, trials.trials[static_cast<std::size_t>(i)]).transpose();
    fm.labels[static_cast<std::size_t>(i)] = trials.trials[static_cast<std::size_t>(i)].label;
  }
  return fm;
}

RcspGrid RcspGrid::defaults() {
  RcspGrid g;
  for (int e = -10; e <= -1; ++e) g.alphas.push_back(std::pow(10.0, e));
  for (int i = 1; i <= 9; ++i) {
    g.betas.push_back(i / 10.0);
    g.gammas.push_back(i / 10.0);
  }
  return g;
}

RcspParams grid_search_params(const eeg::TrialSet& train, const GenericCov* generic,
                              const RcspGrid& grid, int d_pairs, int inner_folds,
                              std::uint64_t seed, const cls::EnsembleOptions& ens,
                              std::vector<GridPoint>* report) {
  if (grid.alphas.empty() || grid.betas.empty() || grid.gammas.empty()) {
    throw ConfigError("rcsp parameter grid is empty");
  }
  const bool have_generic = generic != nullptr && !generic->empty();
  std::vector<double> betas = grid.betas;
  if (!have_generic) {
    const bool had_positive = std::any_of(betas.begin(), betas.end(),
                                          [](double b) { return b > 0.0; });
    betas.assign(1, 0.0);
    if (had_positive) {
      log_info("no auxiliary subjects available; restricting the beta grid to 0");
    }
  }

  std::vector<int> labels;
  labels.reserve(train.trials.size());
  for (const eeg::EegTrial& t : train.trials) labels.push_back(t.label);
  const std::vector<int> fold_ids = cls::stratified_folds(labels, inner_folds, seed);
  const int n_folds = inner_folds;

  // Pre-split fold trial sets once; every grid point sees the same folds.
  std::vector<eeg::TrialSet> fold_train(static_cast<std::size_t>(n_folds));
  std::vector<eeg::TrialSet> fold_test(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    fold_train[static_cast<std::size_t>(f)].layout = train.layout;
    fold_test[static_cast<std::size_t>(f)].layout = train.layout;
  }
  for (std::size_t i = 0; i < train.trials.size(); ++i) {
    for (int f = 0; f < n_folds; ++f) {
      (fold_ids[i] == f ? fold_test : fold_train)[static_cast<std::size_t>(f)].trials.push_back(
          train.trials[i]);
    }
  }

  const int n_ch = train.trials.empty() ? 0 : train.trials.front().n_channels();
  const ChannelMask all = full_mask(static_cast<std::size_t>(n_ch));

  RcspParams best;
  best.d_pairs = d_pairs;
  double best_acc = -1.0;
  std::string last_failure;

  for (double alpha : grid.alphas) {
    for (double beta : betas) {
      for (double gamma : grid.gammas) {
        RcspParams p;
        p.alpha = alpha;
        p.beta = beta;
        p.gamma = gamma;
        p.d_pairs = d_pairs;

        double acc_sum = 0.0;
        int n_ok = 0;
        bool failed = false;
        for (int f = 0; f < n_folds && !failed; ++f) {
          const eeg::TrialSet& tr = fold_train[static_cast<std::size_t>(f)];
          const eeg::TrialSet& te = fold_test[static_cast<std::size_t>(f)];
          try {
            const CovPair cov = covariance(tr, all);
            const RcspModel model = fit_rcsp(cov, have_generic ? generic : nullptr, p);
            const FeatureMatrix ftr = project_features(model, tr);
            const cls::TrainedEnsemble e = cls::train_ensemble(ftr, ens);
            int correct = 0;
            for (const eeg::EegTrial& t : te.trials) {
              if (e.predict(project_features(model, t)) == t.label) ++correct;
            }
            acc_sum += static_cast<double>(correct) / te.trials.size();
            ++n_ok;
          } catch (const NumericError& ex) {
            failed = true;
            last_failure = ex.what();
          }
        }
        const double acc = failed ? -1.0 : acc_sum / n_ok;
        if (report != nullptr) report->push_back(GridPoint{alpha, beta, gamma, acc});
        // Strictly-greater keeps the first (lexicographically smallest) triple
        // on ties.
        if (acc > best_acc) {
          best_acc = acc;
          best.alpha = alpha;
          best.beta = beta;
          best.gamma = gamma;
        }
      }
    }
  }
  if (best_acc < 0.0) {
    throw NumericError("every rcsp grid point failed; last error: " + last_failure);
  }
  return best;
}

}  // namespace pchan::rcsp
