#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "core/classify.hpp"
#include "core/errors.hpp"

using namespace pchan;

namespace {

// two axis-aligned gaussian blobs, class 1 at -mu, class 2 at +mu
FeatureMatrix blobs(int n_per_class, int dim, double mu, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  FeatureMatrix fm;
  fm.x.resize(2 * n_per_class, dim);
  fm.labels.resize(static_cast<std::size_t>(2 * n_per_class));
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const int label = i < n_per_class ? 1 : 2;
    const double center = label == 1 ? -mu : mu;
    for (int j = 0; j < dim; ++j) fm.x(i, j) = center + nd(rng);
    fm.labels[static_cast<std::size_t>(i)] = label;
  }
  return fm;
}

FeatureMatrix xor_four() {
  FeatureMatrix fm;
  fm.x.resize(4, 2);
  fm.x << 0, 0, 1, 1, 0, 1, 1, 0;
  fm.labels = {1, 1, 2, 2};
  return fm;
}

double train_accuracy(const FeatureMatrix& fm, const std::function<int(const Eigen::VectorXd&)>& p) {
  int ok = 0;
  for (int i = 0; i < fm.n_samples(); ++i) {
    if (p(fm.x.row(i).transpose()) == fm.labels[static_cast<std::size_t>(i)]) ++ok;
  }
  return static_cast<double>(ok) / fm.n_samples();
}

}  // namespace

TEST_CASE("lda separates gaussian blobs and matches a scratch reimplementation") {
  const FeatureMatrix fm = blobs(40, 3, 2.0, 0.7, 7);
  const cls::LdaModel m = cls::train_lda(fm);
  CHECK(train_accuracy(fm, [&](const Eigen::VectorXd& q) { return m.predict(q); }) >= 0.99);

  // recompute the discriminant from first principles
  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(3), mu2 = Eigen::VectorXd::Zero(3);
  int n1 = 0, n2 = 0;
  for (int i = 0; i < fm.n_samples(); ++i) {
    if (fm.labels[static_cast<std::size_t>(i)] == 1) {
      mu1 += fm.x.row(i).transpose();
      ++n1;
    } else {
      mu2 += fm.x.row(i).transpose();
      ++n2;
    }
  }
  mu1 /= n1;
  mu2 /= n2;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(3, 3);
  for (int i = 0; i < fm.n_samples(); ++i) {
    const Eigen::VectorXd d =
        fm.x.row(i).transpose() - (fm.labels[static_cast<std::size_t>(i)] == 1 ? mu1 : mu2);
    s += d * d.transpose();
  }
  s /= (fm.n_samples() - 2);

  CHECK((m.mean1 - mu1).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((m.mean2 - mu2).cwiseAbs().maxCoeff() < 1e-12);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd q(3);
    for (int j = 0; j < 3; ++j) q(j) = 3.0 * nd(rng);
    // ridge-stabilized pooled covariance stays within eps of the plain one here,
    // so the scratch discriminant must agree in sign away from the boundary
    const Eigen::VectorXd si_q = s.ldlt().solve(q);
    const double g1 = mu1.dot(si_q) - 0.5 * mu1.dot(s.ldlt().solve(mu1)) +
                      std::log(static_cast<double>(n1) / fm.n_samples());
    const double g2 = mu2.dot(si_q) - 0.5 * mu2.dot(s.ldlt().solve(mu2)) +
                      std::log(static_cast<double>(n2) / fm.n_samples());
    if (std::abs(g1 - g2) < 1e-6) continue;
    CHECK(m.predict(q) == (g1 - g2 >= 0.0 ? 1 : 2));
  }
}

TEST_CASE("lda resolves a symmetric tie to class 1") {
  FeatureMatrix fm;
  fm.x.resize(6, 2);
  fm.x << -1, -1, -2, -1, -1, -2, 1, 1, 2, 1, 1, 2;
  fm.labels = {1, 1, 1, 2, 2, 2};
  const cls::LdaModel m = cls::train_lda(fm);
  const Eigen::VectorXd origin = Eigen::VectorXd::Zero(2);
  CHECK(std::abs(m.score(origin)) < 1e-12);
  CHECK(m.predict(origin) == 1);
}

TEST_CASE("lda requires both classes") {
  FeatureMatrix fm;
  fm.x = Eigen::MatrixXd::Random(5, 2);
  fm.labels = {1, 1, 1, 1, 1};
  CHECK_THROWS_AS(cls::train_lda(fm), DataError);
}

TEST_CASE("knn agrees with a brute-force majority vote") {
  const FeatureMatrix fm = blobs(30, 2, 0.4, 1.0, 13);  // heavy overlap
  cls::KnnModel m;
  m.x = fm.x;
  m.labels = fm.labels;
  m.k = 6;

  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd q(2);
    q << nd(rng), nd(rng);

    std::vector<std::pair<double, int>> d;
    for (int i = 0; i < fm.n_samples(); ++i) {
      d.emplace_back((fm.x.row(i).transpose() - q).squaredNorm(), i);
    }
    std::sort(d.begin(), d.end());
    int votes1 = 0;
    for (int i = 0; i < 6; ++i) {
      if (fm.labels[static_cast<std::size_t>(d[static_cast<std::size_t>(i)].second)] == 1)
        ++votes1;
    }
    const int want = 2 * votes1 >= 6 ? 1 : 2;
    CHECK(m.predict(q) == want);
  }
}

TEST_CASE("knn clamps k to the training size and breaks vote ties to class 1") {
  cls::KnnModel m;
  m.x.resize(4, 1);
  m.x << 0.0, 1.0, 10.0, 11.0;
  m.labels = {1, 2, 1, 2};
  m.k = 6;  // only 4 samples; k_eff = 4, votes split 2-2
  Eigen::VectorXd q(1);
  q << 0.5;
  CHECK(m.predict(q) == 1);

  m.k = 1;
  CHECK(m.predict(q) == 1);  // nearest is index 0
  q << 0.9;
  CHECK(m.predict(q) == 2);
}

TEST_CASE("knn with no training data is rejected") {
  cls::KnnModel m;
  Eigen::VectorXd q(1);
  q << 0.0;
  CHECK_THROWS_AS(m.predict(q), DataError);
}

TEST_CASE("linear svm separates blobs and satisfies the kkt conditions") {
  const FeatureMatrix fm = blobs(25, 2, 1.5, 0.5, 23);
  const cls::SvmKernel lin{};
  const cls::SvmModel m = cls::train_svm(fm, lin, 1.0);
  CHECK(train_accuracy(fm, [&](const Eigen::VectorXd& q) { return m.predict(q); }) >= 0.98);
  CHECK(m.support_x.rows() == m.coeff.size());
  CHECK(m.support_x.rows() >= 2);

  // dual feasibility: 0 < |coeff| <= C and sum of signed coefficients is 0
  for (Eigen::Index i = 0; i < m.coeff.size(); ++i) {
    CHECK(std::abs(m.coeff(i)) > 0.0);
    CHECK(std::abs(m.coeff(i)) <= 1.0 + 1e-12);
  }
  CHECK(std::abs(m.coeff.sum()) < 1e-9);

  // optimality: every training point respects the margin conditions for its
  // multiplier, within the optimizer's stopping tolerance
  for (int i = 0; i < fm.n_samples(); ++i) {
    const Eigen::VectorXd xi = fm.x.row(i).transpose();
    const double yi = fm.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    double alpha = 0.0;
    for (Eigen::Index s = 0; s < m.support_x.rows(); ++s) {
      if ((m.support_x.row(s).transpose() - xi).cwiseAbs().maxCoeff() == 0.0) {
        alpha = std::abs(m.coeff(s));
        break;
      }
    }
    const double margin = yi * m.decision(xi);
    const double slack = 5e-3;
    if (alpha < 1e-9) {
      CHECK(margin >= 1.0 - slack);
    } else if (alpha > 1.0 - 1e-9) {
      CHECK(margin <= 1.0 + slack);
    } else {
      CHECK(margin == doctest::Approx(1.0).epsilon(slack));
    }
  }
}

TEST_CASE("svm training is deterministic") {
  const FeatureMatrix fm = blobs(20, 3, 0.8, 1.0, 29);
  const cls::SvmKernel lin{};
  const cls::SvmModel a = cls::train_svm(fm, lin, 1.0);
  const cls::SvmModel b = cls::train_svm(fm, lin, 1.0);
  CHECK(a.support_x.rows() == b.support_x.rows());
  CHECK((a.coeff - b.coeff).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.bias == b.bias);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("polynomial svm solves xor while the linear one cannot") {
  const FeatureMatrix fm = xor_four();
  cls::SvmKernel poly;
  poly.kind = cls::SvmKernel::poly;
  poly.degree = 2;
  poly.coef0 = 1.0;
  const cls::SvmModel pm = cls::train_svm(fm, poly, 10.0);
  CHECK(train_accuracy(fm, [&](const Eigen::VectorXd& q) { return pm.predict(q); }) == 1.0);

  const cls::SvmKernel lin{};
  const cls::SvmModel lm = cls::train_svm(fm, lin, 10.0);
  CHECK(train_accuracy(fm, [&](const Eigen::VectorXd& q) { return lm.predict(q); }) < 1.0);
}

TEST_CASE("svm rejects bad inputs") {
  FeatureMatrix fm;
  fm.x = Eigen::MatrixXd::Random(1, 2);
  fm.labels = {1};
  const cls::SvmKernel lin{};
  CHECK_THROWS_AS(cls::train_svm(fm, lin, 1.0), DataError);

  const FeatureMatrix ok = blobs(5, 2, 1.0, 0.5, 31);
  CHECK_THROWS_AS(cls::train_svm(ok, lin, 0.0), ConfigError);
  CHECK_THROWS_AS(cls::train_svm(ok, lin, -2.0), ConfigError);
}

TEST_CASE("standardizer yields zero mean unit variance and skips constant columns") {
  std::mt19937_64 rng(37);
  std::normal_distribution<double> nd(3.0, 2.5);
  Eigen::MatrixXd x(50, 3);
  for (int i = 0; i < 50; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = 10.0 * nd(rng) - 40.0;
    x(i, 2) = 7.5;  // constant
  }
  cls::Standardizer st;
  st.fit(x);
  const Eigen::MatrixXd z = st.apply(x);
  for (int j = 0; j < 2; ++j) {
    CHECK(z.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
    const double var = (z.col(j).array() - z.col(j).mean()).square().sum() / (50 - 1);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  // constant column: centered but not divided, so it maps to exactly zero
  CHECK((z.col(2).array() == 0.0).all());
  CHECK(st.scale(2) == 1.0);

  // row-wise apply agrees with the matrix overload
  const Eigen::VectorXd row0 = st.apply(Eigen::VectorXd(x.row(0).transpose()));
  CHECK((row0 - z.row(0).transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("ensemble fits separable blobs perfectly") {
  const FeatureMatrix fm = blobs(30, 4, 2.5, 0.5, 41);
  const cls::TrainedEnsemble ens = cls::train_ensemble(fm);
  CHECK(train_accuracy(fm, [&](const Eigen::VectorXd& q) { return ens.predict(q); }) == 1.0);
}

TEST_CASE("a 2-2 vote split falls back to the lda vote") {
  const FeatureMatrix fm = blobs(25, 2, 0.35, 1.0, 43);  // overlapping classes
  const cls::TrainedEnsemble ens = cls::train_ensemble(fm);

  std::mt19937_64 rng(47);
  std::normal_distribution<double> nd;
  int splits_seen = 0;
  for (int rep = 0; rep < 3000 && splits_seen < 5; ++rep) {
    Eigen::VectorXd q(2);
    q << 1.5 * nd(rng), 1.5 * nd(rng);
    const Eigen::VectorXd qs = ens.standardizer.apply(q);
    const int v_lda = ens.lda.predict(q);
    const int v_knn = ens.knn.predict(qs);
    const int v_lin = ens.svm_linear.predict(qs);
    const int v_poly = ens.svm_poly.predict(qs);
    const int ones = (v_lda == 1) + (v_knn == 1) + (v_lin == 1) + (v_poly == 1);
    if (ones == 2) {
      ++splits_seen;
      CHECK(ens.predict(q) == v_lda);
    } else {
      const int majority = ones > 2 ? 1 : 2;
      CHECK(ens.predict(q) == majority);
    }
  }
  CHECK(splits_seen == 5);  // the overlap must actually produce disagreements
}

TEST_CASE("ensemble is no worse than its best member on held-out folds") {
  const FeatureMatrix fm = blobs(60, 3, 0.9, 1.0, 53);
  const std::vector<int> folds = cls::stratified_folds(fm.labels, 5, 59);

  auto cv_with = [&](const cls::Trainer& tr) {
    return cls::cross_validate(fm, folds, tr).mean_accuracy;
  };

  const double acc_ens = cv_with([](const FeatureMatrix& tr) {
    auto m = std::make_shared<cls::TrainedEnsemble>(cls::train_ensemble(tr));
    return [m](const Eigen::VectorXd& q) { return m->predict(q); };
  });
  const double acc_lda = cv_with([](const FeatureMatrix& tr) {
    auto m = std::make_shared<cls::LdaModel>(cls::train_lda(tr));
    return [m](const Eigen::VectorXd& q) { return m->predict(q); };
  });
  const double acc_knn = cv_with([](const FeatureMatrix& tr) {
    auto st = std::make_shared<cls::Standardizer>();
    st->fit(tr.x);
    auto m = std::make_shared<cls::KnnModel>();
    m->x = st->apply(tr.x);
    m->labels = tr.labels;
    return [m, st](const Eigen::VectorXd& q) { return m->predict(st->apply(q)); };
  });
  const double acc_lin = cv_with([](const FeatureMatrix& tr) {
    auto st = std::make_shared<cls::Standardizer>();
    st->fit(tr.x);
    FeatureMatrix scaled{st->apply(tr.x), tr.labels};
    auto m = std::make_shared<cls::SvmModel>(cls::train_svm(scaled, cls::SvmKernel{}, 1.0));
    return [m, st](const Eigen::VectorXd& q) { return m->predict(st->apply(q)); };
  });

  const double best_single = std::max({acc_lda, acc_knn, acc_lin});
  CHECK(acc_ens >= best_single - 0.05);
}

TEST_CASE("ensemble scores near chance on permuted labels") {
  FeatureMatrix fm = blobs(100, 4, 1.5, 1.0, 61);
  std::mt19937_64 rng(67);
  std::shuffle(fm.labels.begin(), fm.labels.end(), rng);

  const cls::CvReport rep = cls::cross_validate(fm, 10, 71, [](const FeatureMatrix& tr) {
    auto m = std::make_shared<cls::TrainedEnsemble>(cls::train_ensemble(tr));
    return [m](const Eigen::VectorXd& q) { return m->predict(q); };
  });
  CHECK(rep.mean_accuracy <= 0.65);
  CHECK(rep.mean_accuracy >= 0.35);
}

TEST_CASE("stratified folds balance both classes and are deterministic") {
  std::vector<int> labels;
  for (int i = 0; i < 52; ++i) labels.push_back(1);
  for (int i = 0; i < 51; ++i) labels.push_back(2);
  const std::vector<int> f = cls::stratified_folds(labels, 10, 101);
  REQUIRE(f.size() == labels.size());
  std::vector<int> c1(10, 0), c2(10, 0);
  for (std::size_t i = 0; i < f.size(); ++i) {
    REQUIRE(f[i] >= 0);
    REQUIRE(f[i] < 10);
    (labels[i] == 1 ? c1 : c2)[static_cast<std::size_t>(f[i])]++;
  }
  const auto [lo1, hi1] = std::minmax_element(c1.begin(), c1.end());
  const auto [lo2, hi2] = std::minmax_element(c2.begin(), c2.end());
  CHECK(*hi1 - *lo1 <= 1);
  CHECK(*hi2 - *lo2 <= 1);

  CHECK(cls::stratified_folds(labels, 10, 101) == f);
  CHECK(cls::stratified_folds(labels, 10, 102) != f);
}

TEST_CASE("stratified folds reject impossible splits") {
  const std::vector<int> labels = {1, 1, 1, 2, 2};
  CHECK_THROWS_WITH_AS(cls::stratified_folds(labels, 3, 1),
                       doctest::Contains("fewer than"), ConfigError);
  CHECK_THROWS_AS(cls::stratified_folds(labels, 1, 1), ConfigError);
  const std::vector<int> bad = {1, 1, 2, 2, 3};
  CHECK_THROWS_AS(cls::stratified_folds(bad, 2, 1), DataError);
}

TEST_CASE("cross_validate averages fold accuracies unweighted") {
  FeatureMatrix fm;
  fm.x = Eigen::MatrixXd::Random(10, 1);
  fm.labels = {1, 1, 1, 1, 1, 2, 2, 2, 2, 2};
  const std::vector<int> folds = {0, 0, 1, 1, 1, 0, 0, 0, 1, 1};

  const cls::CvReport rep = cls::cross_validate(fm, folds, [](const FeatureMatrix&) {
    return [](const Eigen::VectorXd&) { return 1; };
  });
  REQUIRE(rep.fold_accuracies.size() == 2);
  // fold 0 holds 2 of class 1 and 3 of class 2; fold 1 holds 3 and 2
  CHECK(rep.fold_accuracies[0] == doctest::Approx(2.0 / 5.0));
  CHECK(rep.fold_accuracies[1] == doctest::Approx(3.0 / 5.0));
  CHECK(rep.mean_accuracy == doctest::Approx(0.5));
  CHECK(rep.fold_ids == folds);

  CHECK_THROWS_AS(cls::cross_validate(fm, std::vector<int>{0, 1}, [](const FeatureMatrix&) {
                    return [](const Eigen::VectorXd&) { return 1; };
                  }),
                  ConfigError);
}
