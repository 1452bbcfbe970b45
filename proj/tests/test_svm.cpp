#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "tml/bench.hpp"
#include "tml/svm.hpp"

using namespace tml;

TEST_CASE("two-point max margin solution") {
  Matrix X(2, 1);
  X << -1, 1;
  std::vector<int> y = {-1, +1};
  SvmModel m = svm_train(X, y, 100.0);
  CHECK(m.w[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(m.b == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("duplicated dataset with halved cost gives the same model") {
  std::mt19937_64 rng(7);
  Matrix X;
  std::vector<int> y;
  testutil::random_binary_instance(rng, 8, 2, X, y);
  SvmModel base = svm_train(X, y, 2.0);

  Matrix X2(16, 2);
  std::vector<int> y2(16);
  for (int i = 0; i < 8; ++i) {
    X2.row(2 * i) = X.row(i);
    X2.row(2 * i + 1) = X.row(i);
    y2[2 * i] = y2[2 * i + 1] = y[i];
  }
  SvmModel doubled = svm_train(X2, y2, 1.0);
  CHECK((base.w - doubled.w).norm() < 1e-5);
  CHECK(base.b == doctest::Approx(doubled.b).epsilon(1e-5));
}

TEST_CASE("weak duality and duality gap on random instances") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix X;
    std::vector<int> y;
    testutil::random_binary_instance(rng, 6 + static_cast<int>(rng() % 5), 2, X, y);
    double c1 = std::pow(2.0, static_cast<double>(trial % 5) - 2);
    SvmModel m = svm_train(X, y, c1);
    double primal = m.primal_objective(X, y);
    CHECK(primal + 1e-10 >= m.dual_objective);
    CHECK(primal - m.dual_objective <= 1e-6 * (1 + primal));
  }
}

TEST_CASE("matches the exhaustive QP reference on tiny instances") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 8; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);  // 4..8
    int d = 1 + static_cast<int>(rng() % 3);
    Matrix X;
    std::vector<int> y;
    testutil::random_binary_instance(rng, n, d, X, y);
    double c1 = std::pow(2.0, static_cast<double>(static_cast<int>(rng() % 7) - 3));

    Matrix Q(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        Q(i, j) = y[i] * y[j] * (X.row(i).dot(X.row(j)) + 1.0);
    auto oracle = testutil::solve_box_qp(Q, c1);
    REQUIRE(oracle.alpha.size() == n);

    SvmModel m = svm_train(X, y, c1);
    double primal = m.primal_objective(X, y);
    // strong duality: oracle dual optimum == primal optimum
    CHECK(std::abs(primal - oracle.dual_objective) <=
          1e-5 * (1 + std::abs(oracle.dual_objective)));
  }
}

TEST_CASE("predict sign, tie rule and margin") {
  SvmModel m;
  m.w = Vector(2);
  m.w << 1, 0;
  m.b = 0;
  Vector x(2);
  x << 2, 5;
  auto p = svm_predict(m, x);
  CHECK(p.label == 1);
  CHECK(p.margin == doctest::Approx(2.0));

  Vector on_plane(2);
  on_plane << 0, 3;
  CHECK(svm_predict(m, on_plane).label == 1);  // tie resolves positive

  SvmModel m2;
  m2.w = Vector(2);
  m2.w << 1, 1;
  m2.b = -3;
  Vector x2(2);
  x2 << 1, 1;
  auto p2 = svm_predict(m2, x2);
  CHECK(p2.label == -1);
  CHECK(p2.margin == doctest::Approx(-1.0));
}

TEST_CASE("scale covariance of the decision function") {
  std::mt19937_64 rng(17);
  Matrix X;
  std::vector<int> y;
  testutil::random_binary_instance(rng, 10, 2, X, y);
  SvmModel base = svm_train(X, y, 4.0);

  // Scaling inputs by s and adjusting nothing else changes the geometry;
  // the decision on scaled queries must agree with the base decision when
  // the model is trained on scaled data with the same cost.
  const double s = 3.0;
  SvmModel scaled = svm_train(Matrix(s * X), y, 4.0);
  for (int i = 0; i < 10; ++i) {
    Vector q = X.row(i);
    CHECK(svm_predict(base, q).label == svm_predict(scaled, Vector(s * q)).label);
  }
}

TEST_CASE("determinism and degenerate input") {
  std::mt19937_64 rng(19);
  Matrix X;
  std::vector<int> y;
  testutil::random_binary_instance(rng, 9, 3, X, y);
  SvmModel a = svm_train(X, y, 1.5);
  SvmModel b = svm_train(X, y, 1.5);
  CHECK(a.w == b.w);
  CHECK(a.b == b.b);

  std::vector<int> ones(9, 1);
  CHECK_THROWS(svm_train(X, ones, 1.0));
}

TEST_CASE("one-vs-one wrapper") {
  SUBCASE("two classes reduce to the single binary model") {
    std::mt19937_64 rng(23);
    Matrix X;
    std::vector<int> ypm;
    testutil::random_binary_instance(rng, 10, 2, X, ypm);
    std::vector<int> labels(10);
    for (int i = 0; i < 10; ++i) labels[i] = ypm[i] > 0 ? 1 : 0;
    OvoBank bank = ovo_train(X, labels, 2.0);
    REQUIRE(bank.entries.size() == 1);
    SvmModel direct = svm_train(X, ypm, 2.0);
    for (int i = 0; i < 10; ++i) {
      Vector q = X.row(i);
      int expect = svm_predict(direct, q).label > 0 ? 1 : 0;
      CHECK(ovo_predict(bank, q) == expect);
    }
  }

  SUBCASE("well separated blobs are fit almost perfectly") {
    SyntheticSpec spec;
    spec.generator = SyntheticGenerator::BLOBS;
    spec.centers = Matrix(3, 2);
    spec.centers << 0, 0, 8, 0, 0, 8;
    spec.samples_per_class = 25;
    spec.noise = 0.5;
    spec.seed = 5;
    Dataset ds = make_blobs(spec);
    OvoBank bank = ovo_train(ds.X, ds.labels, 10.0);
    REQUIRE(bank.entries.size() == 3);
    int correct = 0;
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i)
      correct += ovo_predict(bank, Vector(ds.X.row(i))) == ds.labels[i];
    CHECK(correct >= static_cast<int>(0.95 * ds.X.rows()));
  }
}
