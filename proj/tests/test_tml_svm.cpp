#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "tml/bench.hpp"
#include "tml/metric_nn.hpp"
#include "tml/tml_svm.hpp"

using namespace tml;

TEST_CASE("center_and_scale maps data into the unit ball") {
  SUBCASE("symmetric pair") {
    Matrix X(2, 2);
    X << 1, 1, -1, -1;
    auto [Xp, info] = center_and_scale(X);
    CHECK(info.mean.norm() <= 1e-12);
    CHECK(info.scale == doctest::Approx(std::sqrt(2.0)));
    CHECK(Xp.row(0).norm() == doctest::Approx(1.0));
    CHECK(Xp.row(1).norm() == doctest::Approx(1.0));
  }
  SUBCASE("single point centers to the origin") {
    Matrix X(1, 3);
    X << 4, 5, 6;
    auto [Xp, info] = center_and_scale(X);
    CHECK(Xp.row(0).norm() <= 1e-12);
  }
  SUBCASE("max row norm is exactly one") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-4, 4);
    Matrix X(9, 3);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 3; ++j) X(i, j) = u(rng);
    auto [Xp, info] = center_and_scale(X);
    CHECK(Xp.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    // round-trip through apply
    CHECK(info.apply_rows(X).isApprox(Xp, 1e-12));
  }
  SUBCASE("identically zero data rejected") {
    Matrix X = Matrix::Ones(3, 2);  // zero after centering
    CHECK_THROWS(center_and_scale(X));
  }
}

namespace {
struct SmallInstance {
  Matrix X;
  std::vector<int> y;
  TpsTransform t;
  SideConditionBasis basis;
};

SmallInstance make_instance(std::mt19937_64& rng, int n = 8, bool perturb = true) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  SmallInstance s;
  s.X.resize(n, 2);
  s.y.resize(n);
  for (int i = 0; i < n; ++i) {
    int c = i % 2 ? 1 : -1;
    s.y[i] = c;
    s.X(i, 0) = 0.4 * c + 0.3 * u(rng);
    s.X(i, 1) = u(rng);
  }
  AnchorSet a = select_anchors(s.X, 3, AnchorMethod::KMEDOIDS, rng());
  s.basis = build_side_basis(a);
  s.t = TpsTransform::identity(a, KernelSpec::default_for_dim(2));
  if (perturb) {
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) s.t.linear(i, j) += u(rng);
    Vector c(s.basis.free_count());
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = u(rng);
    s.t.weights = weights_from_free(s.basis, c);
  }
  return s;
}
}  // namespace

TEST_CASE("transform subproblem closed forms") {
  std::mt19937_64 rng(5);
  SmallInstance s = make_instance(rng, 8, false);

  SUBCASE("inactive hinge everywhere gives zero value and gradient") {
    // a hyperplane with huge margins: w aligned with the class axis
    Vector w(2);
    w << 50, 0;
    auto [J, g] = tml_svm_subproblem_objective(s.t, s.basis, s.X, s.y, w, 0.0,
                                               2.0, 3.0);
    CHECK(J == doctest::Approx(0.0));
    CHECK(g.norm() <= 1e-12);
  }

  SUBCASE("zero hyperplane gives C1 * n") {
    Vector w = Vector::Zero(2);
    auto [J, g] = tml_svm_subproblem_objective(s.t, s.basis, s.X, s.y, w, 0.0,
                                               2.5, 1.0);
    CHECK(J == doctest::Approx(2.5 * s.X.rows()));
  }
}

TEST_CASE("subproblem gradient matches central differences on 20 seeds") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    SmallInstance s = make_instance(rng);
    Vector w(2);
    w << u(rng) * 2, u(rng) * 2;
    double b = u(rng);
    double c1 = std::pow(2.0, trial % 5 - 2);
    double c2 = std::pow(5.0, trial % 3 - 1);
    auto [J, grad] =
        tml_svm_subproblem_objective(s.t, s.basis, s.X, s.y, w, b, c1, c2);
    Vector theta = pack_parameters(s.t, s.basis);
    auto value = [&](const Vector& th) {
      TpsTransform tt = unpack_parameters(th, s.t.anchors, s.t.kernel, s.basis);
      return tml_svm_subproblem_objective(tt, s.basis, s.X, s.y, w, b, c1, c2)
          .first;
    };
    CHECK(testutil::gradient_rel_error(value, theta, grad) <= 1e-5);
  }
}

TEST_CASE("frozen transform degenerates to the plain linear SVM") {
  std::mt19937_64 rng(11);
  Matrix X;
  std::vector<int> ypm;
  testutil::random_binary_instance(rng, 12, 2, X, ypm);
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) labels[i] = ypm[i] > 0 ? 1 : 0;

  TmlSvmConfig cfg;
  cfg.c1 = 4.0;
  cfg.freeze_transform = true;
  TmlSvmModel m = tml_svm_train(X, labels, cfg);
  REQUIRE(m.pairs.size() == 1);

  auto [Xp, info] = center_and_scale(X);
  std::vector<int> y01(12);
  for (int i = 0; i < 12; ++i) y01[i] = labels[i] == m.pairs[0].class_a ? 1 : -1;
  SvmModel direct = svm_train(Xp, y01, 4.0);
  CHECK((m.pairs[0].svm.w - direct.w).norm() <= 1e-8);
  CHECK(std::abs(m.pairs[0].svm.b - direct.b) <= 1e-8);
  CHECK(m.pairs[0].transform.weights.norm() == 0.0);
  CHECK(m.pairs[0].transform.linear.isIdentity(1e-15));
}

TEST_CASE("training contracts on separable data") {
  std::mt19937_64 rng(13);
  Matrix X;
  std::vector<int> ypm;
  testutil::random_binary_instance(rng, 16, 2, X, ypm);
  std::vector<int> labels(16);
  for (int i = 0; i < 16; ++i) labels[i] = ypm[i] > 0 ? 1 : 0;

  TmlSvmConfig cfg;
  cfg.c1 = 8.0;
  cfg.c2 = 0.5;
  cfg.max_outer = 8;
  cfg.seed = 3;
  TmlSvmModel m = tml_svm_train(X, labels, cfg);
  REQUIRE(m.pairs.size() == 1);
  const auto& pm = m.pairs[0];

  // objective trace non-increasing
  for (std::size_t i = 1; i < pm.report.objective_trace.size(); ++i)
    CHECK(pm.report.objective_trace[i] <=
          pm.report.objective_trace[i - 1] + 1e-6);

  // unit ball feasibility and side conditions
  CHECK(pm.report.max_ball_violation <= 1e-4);
  CHECK(pm.transform.side_condition_violation() <= 1e-8);
  Matrix Xp = pm.centering.apply_rows(X);
  Matrix F = apply_transform_rows(pm.transform, Xp);
  CHECK(F.rowwise().squaredNorm().maxCoeff() <= 1.0 + 1e-4);

  // consistency: training points the final SVM separates keep their class
  int correct = 0;
  for (int i = 0; i < 16; ++i)
    correct += tml_svm_predict(m, Vector(X.row(i))) == labels[i];
  CHECK(correct >= 14);
}

TEST_CASE("concentric circles: nonlinear transform beats any linear cut") {
  SyntheticSpec spec;
  spec.radii = {1.0, 2.0};
  spec.samples_per_class = 40;
  spec.noise = 0.05;
  spec.seed = 9;
  Dataset ds = make_circles(spec);

  // the best linear separator on this sample is near chance; bound it by
  // sweeping many directions and thresholds
  double best_linear = 0;
  for (int ai = 0; ai < 60; ++ai) {
    double ang = ai * M_PI / 60;
    Vector w(2);
    w << std::cos(ang), std::sin(ang);
    std::vector<double> proj(ds.X.rows());
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i) proj[i] = w.dot(ds.X.row(i));
    std::vector<double> sorted = proj;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t t = 0; t + 1 < sorted.size(); ++t) {
      double thr = 0.5 * (sorted[t] + sorted[t + 1]);
      int acc = 0;
      for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
        acc += (proj[i] > thr ? 1 : 0) == ds.labels[i];
      best_linear = std::max(best_linear,
                             std::max(acc, static_cast<int>(ds.X.rows()) - acc) /
                                 static_cast<double>(ds.X.rows()));
    }
  }
  CHECK(best_linear <= 0.70);  // near chance; finite-sample slack

  TmlSvmConfig cfg;
  cfg.c1 = 50.0;
  cfg.c2 = 1e-3;
  cfg.max_outer = 12;
  cfg.seed = 1;
  TmlSvmModel m = tml_svm_train(ds.X, ds.labels, cfg);
  int correct = 0;
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
    correct += tml_svm_predict(m, Vector(ds.X.row(i))) == ds.labels[i];
  CHECK(correct >= static_cast<int>(0.95 * ds.X.rows()));
}

TEST_CASE("multiclass bank has one transform per class pair") {
  SyntheticSpec spec;
  spec.generator = SyntheticGenerator::BLOBS;
  spec.centers = Matrix(3, 2);
  spec.centers << 0, 0, 6, 0, 0, 6;
  spec.samples_per_class = 12;
  spec.noise = 0.4;
  spec.seed = 15;
  Dataset ds = make_blobs(spec);
  TmlSvmConfig cfg;
  cfg.max_outer = 3;
  TmlSvmModel m = tml_svm_train(ds.X, ds.labels, cfg);
  CHECK(m.pairs.size() == 3);
  int correct = 0;
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
    correct += tml_svm_predict(m, Vector(ds.X.row(i))) == ds.labels[i];
  CHECK(correct >= static_cast<int>(0.9 * ds.X.rows()));

  std::vector<int> single(ds.labels.size(), 0);
  CHECK_THROWS(tml_svm_train(ds.X, single, cfg));
}

TEST_CASE("kernelized variant trains and predicts on circles") {
  SyntheticSpec spec;
  spec.radii = {1.0, 2.0};
  spec.samples_per_class = 25;
  spec.noise = 0.05;
  spec.seed = 17;
  Dataset ds = make_circles(spec);
  TmlSvmConfig cfg;
  cfg.c1 = 20.0;
  cfg.kpca_rank = 10;
  cfg.max_outer = 5;
  TmlSvmModel m = kernel_tml_svm_train(ds.X, ds.labels, cfg);
  REQUIRE(m.kpca.has_value());
  int correct = 0;
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
    correct += tml_svm_predict(m, Vector(ds.X.row(i))) == ds.labels[i];
  CHECK(correct >= static_cast<int>(0.9 * ds.X.rows()));
}
