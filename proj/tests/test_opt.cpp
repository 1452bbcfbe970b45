#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "tml/opt.hpp"

using namespace tml;

TEST_CASE("unconstrained quadratic reaches the origin") {
  OptProblem p;
  p.origin = Vector(2);
  p.origin << 3, -4;
  p.objective = [](const Vector& t, Vector& g) {
    g = 2 * t;
    return t.squaredNorm();
  };
  auto [theta, report] = minimize(p);
  CHECK(theta.norm() < 1e-4);
  CHECK(report.converged);
  CHECK(report.max_violation == 0.0);
}

TEST_CASE("active scalar constraint lands on the boundary") {
  OptProblem p;
  p.origin = Vector::Constant(1, 3.0);
  p.objective = [](const Vector& t, Vector& g) {
    g = 2 * t;
    return t.squaredNorm();
  };
  p.inequalities.push_back([](const Vector& t, Vector& g) {
    g = -Vector::Ones(1);
    return 1.0 - t[0];
  });
  auto [theta, report] = minimize(p);
  CHECK(theta[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(report.max_violation <= 1e-4);
}

TEST_CASE("disc-constrained quadratic hits the known KKT point") {
  OptProblem p;
  p.origin = Vector::Zero(2);
  p.objective = [](const Vector& t, Vector& g) {
    g = 2 * (t - Vector::Constant(2, 2.0));
    return (t - Vector::Constant(2, 2.0)).squaredNorm();
  };
  p.inequalities.push_back([](const Vector& t, Vector& g) {
    g = 2 * t;
    return t.squaredNorm() - 1.0;
  });
  auto [theta, report] = minimize(p);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(theta[0] == doctest::Approx(s).epsilon(1e-3));
  CHECK(theta[1] == doctest::Approx(s).epsilon(1e-3));
  CHECK(report.max_violation <= 1e-4);
}

TEST_CASE("block inequalities match the scalar path") {
  // Same disc constraint expressed through the vectorized interface.
  OptProblem p;
  p.origin = Vector::Zero(2);
  p.objective = [](const Vector& t, Vector& g) {
    g = 2 * (t - Vector::Constant(2, 2.0));
    return (t - Vector::Constant(2, 2.0)).squaredNorm();
  };
  p.block_count = 1;
  p.block_values = [](const Vector& t) {
    return Vector::Constant(1, t.squaredNorm() - 1.0);
  };
  p.block_accumulate = [](const Vector& t, const Vector& coef) {
    return Vector(2 * coef[0] * t);
  };
  auto [theta, report] = minimize(p);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(theta[0] == doctest::Approx(s).epsilon(1e-3));
  CHECK(report.max_violation <= 1e-4);
}

TEST_CASE("linear reparameterization keeps iterates in the affine set") {
  // minimize |theta|^2 over theta = (1,1,0) + span{(1,-1,0)}: optimum at
  // the projection (0.?,...) -> u = -... closed form: theta* = (0? ) ...
  // For origin o and basis z, u* = -z'o / |z|^2, theta* = o + z u*.
  OptProblem p;
  Vector o(3);
  o << 1, 1, 0;
  Matrix Z(3, 1);
  Z << 1, -1, 0;
  p.origin = o;
  p.basis = Z;
  p.objective = [](const Vector& t, Vector& g) {
    g = 2 * t;
    return t.squaredNorm();
  };
  auto [theta, report] = minimize(p);
  Vector expected = o + Z * Vector::Constant(1, -Z.col(0).dot(o) / Z.col(0).squaredNorm());
  CHECK((theta - expected).norm() < 1e-6);
  // stays in the affine set exactly
  CHECK(std::abs((theta - o).dot(Vector::Unit(3, 2))) < 1e-14);
}

TEST_CASE("severely infeasible start is restored to feasibility") {
  OptProblem p;
  p.origin = Vector::Constant(2, -5.0);
  p.objective = [](const Vector& t, Vector& g) {
    g = Vector::Ones(2);
    return t.sum();
  };
  p.inequalities.push_back([](const Vector& t, Vector& g) {
    g = -Vector::Ones(2);
    return 1.0 - t.sum();  // t1 + t2 >= 1
  });
  auto [theta, report] = minimize(p);
  CHECK(1.0 - theta.sum() <= 1e-4);
  CHECK(report.max_violation <= 1e-4);
}

TEST_CASE("project_psd examples and properties") {
  Matrix I = Matrix::Identity(3, 3);
  CHECK(project_psd(I).isApprox(I, 1e-12));

  Matrix d2(2, 2);
  d2 << 2, 0, 0, -3;
  Matrix pd = project_psd(d2);
  CHECK(pd(0, 0) == doctest::Approx(2.0));
  CHECK(pd(1, 1) == doctest::Approx(0.0));

  Matrix offdiag(2, 2);
  offdiag << 0, 1, 1, 0;
  Matrix po = project_psd(offdiag);
  CHECK(po(0, 0) == doctest::Approx(0.5));
  CHECK(po(0, 1) == doctest::Approx(0.5));
  CHECK(po(1, 0) == doctest::Approx(0.5));
  CHECK(po(1, 1) == doctest::Approx(0.5));

  // idempotent, min eigenvalue >= -1e-10
  Matrix R = Matrix::Random(4, 4);
  Matrix S = R + R.transpose();
  Matrix P1 = project_psd(S);
  CHECK(project_psd(P1).isApprox(P1, 1e-10));
  Eigen::SelfAdjointEigenSolver<Matrix> es(P1);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);

  Matrix bad(2, 2);
  bad << 1, std::nan(""), 0, 1;
  CHECK_THROWS_AS(project_psd(bad), std::domain_error);
}

TEST_CASE("objective gradient sanity via finite differences") {
  // Rosenbrock-style objective: exercises the line search on curved
  // geometry and double-checks our value/gradient convention.
  auto value = [](const Vector& t) {
    return 100 * std::pow(t[1] - t[0] * t[0], 2) + std::pow(1 - t[0], 2);
  };
  OptProblem p;
  p.origin = Vector::Zero(2);
  p.objective = [&](const Vector& t, Vector& g) {
    g.resize(2);
    g[0] = -400 * t[0] * (t[1] - t[0] * t[0]) - 2 * (1 - t[0]);
    g[1] = 200 * (t[1] - t[0] * t[0]);
    return value(t);
  };
  Vector at(2);
  at << 0.4, -0.3;
  Vector g(2);
  p.objective(at, g);
  CHECK(testutil::gradient_rel_error(value, at, g) < 1e-6);

  OptConfig cfg;
  cfg.max_outer = 1;
  cfg.max_inner = 20000;
  cfg.tol = 1e-10;
  auto [theta, report] = minimize(p, cfg);
  CHECK((theta - Vector::Ones(2)).norm() < 1e-3);
}
