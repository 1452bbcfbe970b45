// Gradient-based minimizer: equality constraints are eliminated through a
// fixed linear reparameterization, inequality constraints handled by an
// augmented Lagrangian with squared-hinge penalty terms.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Objective or constraint: value plus gradient at theta.
using ValueGradFn =
    std::function<double(const Vector& theta, Vector& grad)>;

struct OptProblem {
  ValueGradFn objective;
  std::vector<ValueGradFn> inequalities;  // g(theta) <= 0

  // Optional vectorized inequality block (g(theta) <= 0 componentwise) for
  // problems with one constraint per sample: block_values returns all
  // values, block_accumulate returns sum_i coef_i * grad g_i(theta).
  Eigen::Index block_count = 0;
  std::function<Vector(const Vector&)> block_values;
  std::function<Vector(const Vector&, const Vector&)> block_accumulate;

  // theta = origin + basis * u. Empty basis means identity (u = theta).
  Vector origin;
  std::optional<Matrix> basis;

  Eigen::Index free_dim() const {
    return basis ? basis->cols() : origin.size();
  }
  Vector lift(const Vector& u) const {
    return basis ? Vector(origin + *basis * u) : Vector(origin + u);
  }
};

struct OptConfig {
  int max_outer = 20;
  int max_inner = 200;
  double tol = 1e-6;
  double penalty_growth = 10.0;
  double initial_penalty = 1.0;
  double feasibility_tol = 1e-4;
};

struct OptReport {
  double objective = 0.0;
  int iterations = 0;
  double max_violation = 0.0;
  bool converged = false;
  std::string reason;
};

// Minimizes from u = 0 (i.e. theta = origin). Returns theta.
std::pair<Vector, OptReport> minimize(const OptProblem& problem,
                                      const OptConfig& config = {});

// Frobenius-nearest PSD matrix: symmetrize, clamp negative eigenvalues.
Matrix project_psd(const Eigen::Ref<const Matrix>& M);

}  // namespace tml
