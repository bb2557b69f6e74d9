#include "classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "errors.hpp"
#include "rng.hpp"

namespace pchan::cls {

namespace {

void split_by_class(const FeatureMatrix& fm, std::vector<int>& idx1, std::vector<int>& idx2) {
  idx1.clear();
  idx2.clear();
  for (int i = 0; i < fm.n_samples(); ++i) {
    if (fm.labels[static_cast<std::size_t>(i)] == 1)
      idx1.push_back(i);
    else
      idx2.push_back(i);
  }
}

}  // namespace

double LdaModel::score(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd diff = pooled_inv * (mean1 - mean2);
  const double g = x.dot(diff) - 0.5 * (mean1 + mean2).dot(diff) + (log_prior1 - log_prior2);
  return g;
}

LdaModel train_lda(const FeatureMatrix& train) {
  std::vector<int> i1, i2;
  split_by_class(train, i1, i2);
  if (i1.empty() || i2.empty()) {
    throw DataError("lda training set is missing one of the two classes");
  }
  const int d = train.n_features();
  const int n = train.n_samples();

  LdaModel m;
  m.mean1 = Eigen::VectorXd::Zero(d);
  m.mean2 = Eigen::VectorXd::Zero(d);
  for (int i : i1) m.mean1 += train.x.row(i).transpose();
  for (int i : i2) m.mean2 += train.x.row(i).transpose();
  m.mean1 /= static_cast<double>(i1.size());
  m.mean2 /= static_cast<double>(i2.size());

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
  for (int i : i1) {
    const Eigen::VectorXd c = train.x.row(i).transpose() - m.mean1;
    pooled.noalias() += c * c.transpose();
  }
  for (int i : i2) {
    const Eigen::VectorXd c = train.x.row(i).transpose() - m.mean2;
    pooled.noalias() += c * c.transpose();
  }
  const double denom = std::max(1, n - 2);
  pooled /= denom;
  // Ridge keeps the solve well posed when folds are small or features
  // strongly correlated.
  const double ridge = 1e-6 * std::max(pooled.trace() / d, 1e-30);
  pooled += ridge * Eigen::MatrixXd::Identity(d, d);

  m.pooled_inv = pooled.llt().solve(Eigen::MatrixXd::Identity(d, d));
  m.log_prior1 = std::log(static_cast<double>(i1.size()) / n);
  m.log_prior2 = std::log(static_cast<double>(i2.size()) / n);
  return m;
}

int KnnModel::predict(const Eigen::VectorXd& q) const {
  const int n = static_cast<int>(x.rows());
  if (n == 0) throw DataError("knn model has no training samples");
  const int k_eff = std::min(k, n);

  std::vector<std::pair<double, int>> dist;
  dist.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    dist.emplace_back((x.row(i).transpose() - q).squaredNorm(), i);
  }
  // Equal distances resolve to the lower training index.
  std::partial_sort(dist.begin(), dist.begin() + k_eff, dist.end());

  int votes1 = 0;
  for (int i = 0; i < k_eff; ++i) {
    if (labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)] == 1)
      ++votes1;
  }
  return 2 * votes1 >= k_eff ? 1 : 2;  // vote tie goes to class 1
}

double SvmKernel::operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const double dot = a.dot(b);
  if (kind == linear) return dot;
  return std::pow(dot + coef0, degree);
}

double SvmModel::decision(const Eigen::VectorXd& q) const {
  double f = bias;
  for (Eigen::Index i = 0; i < support_x.rows(); ++i) {
    f += coeff(i) * kernel(support_x.row(i).transpose(), q);
  }
  return f;
}

SvmModel train_svm(const FeatureMatrix& train, const SvmKernel& kernel, double c, double tol,
                   int max_passes) {
  const int n = train.n_samples();
  if (n < 2) throw DataError("svm needs at least 2 training samples");
  if (!(c > 0.0)) throw ConfigError("svm penalty C must be positive");

  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = train.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const double v = kernel(train.x.row(i).transpose(), train.x.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
  }

  // Maximal-violating-pair SMO on the dual. f caches the margin term
  // sum_j alpha_j y_j K(i, j); the pair (i, j) with the largest KKT gap is
  // updated each iteration, ties resolved to the lower index.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  const long long budget = static_cast<long long>(max_passes) * n;
  long long updates = 0;
  double gap_up = 0.0, gap_lo = 0.0;

  for (;;) {
    int i = -1, j = -1;
    double up = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      const double v = y(t) - f(t);
      const bool in_up = (y(t) > 0.0 && alpha(t) < c) || (y(t) < 0.0 && alpha(t) > 0.0);
      const bool in_lo = (y(t) > 0.0 && alpha(t) > 0.0) || (y(t) < 0.0 && alpha(t) < c);
      if (in_up && v > up) {
        up = v;
        i = t;
      }
      if (in_lo && v < lo) {
        lo = v;
        j = t;
      }
    }
    gap_up = up;
    gap_lo = lo;
    if (i < 0 || j < 0 || up - lo <= tol) break;
    if (updates >= budget) {
      throw NumericError("svm optimizer did not converge within " + std::to_string(updates) +
                         " pair updates (KKT gap " + std::to_string(up - lo) + ")");
    }

    double clip_lo, clip_hi;
    if (y(i) != y(j)) {
      clip_lo = std::max(0.0, alpha(j) - alpha(i));
      clip_hi = std::min(c, c + alpha(j) - alpha(i));
    } else {
      clip_lo = std::max(0.0, alpha(i) + alpha(j) - c);
      clip_hi = std::min(c, alpha(i) + alpha(j));
    }
    const double eta = std::max(k(i, i) + k(j, j) - 2.0 * k(i, j), 1e-12);
    const double ei = f(i) - y(i), ej = f(j) - y(j);
    const double aj = std::clamp(alpha(j) + y(j) * (ei - ej) / eta, clip_lo, clip_hi);
    if (aj == alpha(j)) break;  // no movable direction left at fp resolution
    const double ai = std::clamp(alpha(i) + y(i) * y(j) * (alpha(j) - aj), 0.0, c);

    const double di = y(i) * (ai - alpha(i));
    const double dj = y(j) * (aj - alpha(j));
    f += di * k.col(i) + dj * k.col(j);
    alpha(i) = ai;
    alpha(j) = aj;
    ++updates;
  }

  // Midpoint of the KKT interval; equals y - f at any free support vector.
  const double b = std::isfinite(gap_up) && std::isfinite(gap_lo) ? 0.5 * (gap_up + gap_lo) : 0.0;

  SvmModel m;
  m.kernel = kernel;
  m.bias = b;
  m.iterations = static_cast<int>(std::min<long long>(updates, INT32_MAX));
  std::vector<int> sv;
  for (int i = 0; i < n; ++i) {
    if (alpha(i) > 1e-12) sv.push_back(i);
  }
  m.support_x.resize(static_cast<Eigen::Index>(sv.size()), train.n_features());
  m.coeff.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    m.support_x.row(static_cast<Eigen::Index>(s)) = train.x.row(sv[s]);
    m.coeff(static_cast<Eigen::Index>(s)) = alpha(sv[s]) * y(sv[s]);
  }
  return m;
}

void Standardizer::fit(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  mean = x.colwise().mean();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double var = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = x(i, j) - mean(j);
      var += d * d;
    }
    var /= std::max<Eigen::Index>(1, n - 1);
    const double s = std::sqrt(var);
    scale(j) = s > 1e-12 ? s : 1.0;
  }
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(scale);
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = x;
  out.rowwise() -= mean.transpose();
  out.array().rowwise() /= scale.transpose().array();
  return out;
}

int TrainedEnsemble::predict(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd xs = standardizer.apply(x);
  const int v_lda = lda.predict(x);
  int votes1 = 0;
  votes1 += v_lda == 1 ? 1 : 0;
  votes1 += knn.predict(xs) == 1 ? 1 : 0;
  votes1 += svm_linear.predict(xs) == 1 ? 1 : 0;
  votes1 += svm_poly.predict(xs) == 1 ? 1 : 0;
  if (votes1 > 2) return 1;
  if (votes1 < 2) return 2;
  return v_lda;
}

TrainedEnsemble train_ensemble(const FeatureMatrix& train, const EnsembleOptions& opt) {
  TrainedEnsemble e;
  e.lda = train_lda(train);
  e.standardizer.fit(train.x);

  FeatureMatrix scaled;
  scaled.x = e.standardizer.apply(train.x);
  scaled.labels = train.labels;

  e.knn.x = scaled.x;
  e.knn.labels = scaled.labels;
  e.knn.k = opt.knn_k;

  SvmKernel lin;
  lin.kind = SvmKernel::linear;
  e.svm_linear = train_svm(scaled, lin, opt.svm_c);

  SvmKernel pol;
  pol.kind = SvmKernel::poly;
  pol.degree = opt.poly_degree;
  pol.coef0 = opt.poly_coef0;
  e.svm_poly = train_svm(scaled, pol, opt.svm_c);
  return e;
}

std::vector<int> stratified_folds(const std::vector<int>& labels, int n_folds,
                                  std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (n_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");

  std::vector<int> fold(static_cast<std::size_t>(n), -1);
  auto rng = make_rng(seed, 0xf01d5);
  for (int cls : {1, 2}) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (labels[static_cast<std::size_t>(i)] == cls) idx.push_back(i);
    }
    if (static_cast<int>(idx.size()) < n_folds) {
      throw ConfigError("class " + std::to_string(cls) + " has " +
                        std::to_string(idx.size()) + " samples, fewer than " +
                        std::to_string(n_folds) + " folds");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t p = 0; p < idx.size(); ++p) {
      fold[static_cast<std::size_t>(idx[p])] = static_cast<int>(p % static_cast<std::size_t>(n_folds));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (fold[static_cast<std::size_t>(i)] < 0) {
      throw DataError("labels must be 1 or 2 for stratified folding");
    }
  }
  return fold;
}

CvReport cross_validate(const FeatureMatrix& data, const std::vector<int>& fold_ids,
                        const Trainer& trainer) {
  if (fold_ids.size() != data.labels.size()) {
    throw ConfigError("fold assignment length does not match sample count");
  }
  const int n_folds = fold_ids.empty() ? 0 : *std::max_element(fold_ids.begin(), fold_ids.end()) + 1;
  if (n_folds < 2) throw ConfigError("cross-validation needs at least 2 folds");

  CvReport rep;
  rep.fold_ids = fold_ids;
  rep.fold_accuracies.reserve(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    std::vector<int> train_idx, test_idx;
    for (std::size_t i = 0; i < fold_ids.size(); ++i) {
      (fold_ids[i] == f ? test_idx : train_idx).push_back(static_cast<int>(i));
    }
    if (test_idx.empty()) continue;

    FeatureMatrix tr;
    tr.x.resize(static_cast<Eigen::Index>(train_idx.size()), data.x.cols());
    tr.labels.resize(train_idx.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) {
      tr.x.row(static_cast<Eigen::Index>(i)) = data.x.row(train_idx[i]);
      tr.labels[i] = data.labels[static_cast<std::size_t>(train_idx[i])];
    }
    const Predictor predict = trainer(tr);

    int correct = 0;
    for (int i : test_idx) {
      if (predict(data.x.row(i).transpose()) == data.labels[static_cast<std::size_t>(i)])
        ++correct;
    }
    rep.fold_accuracies.push_back(static_cast<double>(correct) / test_idx.size());
  }
  rep.mean_accuracy =
      std::accumulate(rep.fold_accuracies.begin(), rep.fold_accuracies.end(), 0.0) /
      std::max<std::size_t>(1, rep.fold_accuracies.size());
  return rep;
}

CvReport cross_validate(const FeatureMatrix& data, int n_folds, std::uint64_t seed,
                        const Trainer& trainer) {
  return cross_validate(data, stratified_folds(data.labels, n_folds, seed), trainer);
}

}  // namespace pchan::cls
