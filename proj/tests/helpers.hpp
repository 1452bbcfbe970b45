// Shared test utilities: finite-difference gradient checking, a brute-force
// box-QP solver used as the SVM reference, and small data generators.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace testutil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Maximum relative error between an analytic gradient and central finite
// differences of `value` at theta.
inline double gradient_rel_error(
    const std::function<double(const Vector&)>& value, const Vector& theta,
    const Vector& analytic, double step = 1e-6) {
  double worst = 0.0;
  double scale = std::max(1.0, analytic.norm());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    Vector tp = theta, tm = theta;
    tp[i] += step;
    tm[i] -= step;
    double fd = (value(tp) - value(tm)) / (2 * step);
    worst = std::max(worst, std::abs(fd - analytic[i]) / scale);
  }
  return worst;
}

// Exact reference for the augmented-bias soft-margin SVM dual:
//   max  sum(a) - 0.5 a' Q a   s.t. 0 <= a <= C,
// with Q_ij = y_i y_j (x_i . x_j + 1). Enumerates every lower/upper/free
// pattern and returns the best feasible stationary value, exact up to
// numerics for n <= 12 or so.
struct QpOracle {
  double dual_objective = -std::numeric_limits<double>::infinity();
  Vector alpha;
};

inline QpOracle solve_box_qp(const Matrix& Q, double C) {
  const int n = static_cast<int>(Q.rows());
  QpOracle best;
  std::vector<int> state(n, 0);  // 0 = at 0, 1 = at C, 2 = free
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<int> free_idx;
    Vector a = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 1) a[i] = C;
      if (state[i] == 2) free_idx.push_back(i);
    }
    const int f = static_cast<int>(free_idx.size());
    if (f > 0) {
      Matrix Qff(f, f);
      Vector rhs(f);
      for (int r = 0; r < f; ++r) {
        for (int s = 0; s < f; ++s) Qff(r, s) = Q(free_idx[r], free_idx[s]);
        double dot = 0.0;
        for (int i = 0; i < n; ++i)
          if (state[i] == 1) dot += Q(free_idx[r], i) * C;
        rhs[r] = 1.0 - dot;
      }
      Eigen::FullPivLU<Matrix> lu(Qff);
      if (!lu.isInvertible()) continue;
      Vector af = lu.solve(rhs);
      bool ok = true;
      for (int r = 0; r < f; ++r) {
        if (!(af[r] > -1e-10 && af[r] < C + 1e-10)) ok = false;
        a[free_idx[r]] = std::min(C, std::max(0.0, af[r]));
      }
      if (!ok) continue;
    }
    Vector g = Vector::Ones(n) - Q * a;  // dual gradient
    bool kkt = true;
    for (int i = 0; i < n; ++i) {
      if (state[i] == 0 && g[i] > 1e-8) kkt = false;
      if (state[i] == 1 && g[i] < -1e-8) kkt = false;
    }
    if (!kkt) continue;
    double val = a.sum() - 0.5 * a.dot(Q * a);
    if (val > best.dual_objective) {
      best.dual_objective = val;
      best.alpha = a;
    }
  }
  return best;
}

// Separable-ish random binary instance with both labels present.
inline void random_binary_instance(std::mt19937_64& rng, int n, int d, Matrix& X,
                                   std::vector<int>& y) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  X.resize(n, d);
  y.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    int label = i < n / 2 ? -1 : +1;
    y[i] = label;
    for (int j = 0; j < d; ++j) X(i, j) = gauss(rng) + 1.2 * label * (j == 0);
  }
  y[0] = -1;
  y[n - 1] = +1;
}

}  // namespace testutil
