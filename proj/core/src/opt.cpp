#include "tml/opt.hpp"

#include <cmath>
#include <stdexcept>

namespace tml {

namespace {

struct MeritEval {
  double value;
  Vector grad_u;       // gradient of the merit in u-coordinates
  double objective;    // bare objective at theta
  double max_violation;
};

// Powell-Hestenes-Rockafellar term per inequality:
//   (1/2rho) * (max(0, lambda + rho g)^2 - lambda^2)
MeritEval eval_merit(const OptProblem& p, const Vector& u, const Vector& lambda,
                     double rho) {
  const Vector theta = p.lift(u);
  Vector grad_theta(theta.size());
  MeritEval out;
  out.objective = p.objective(theta, grad_theta);
  out.value = out.objective;
  out.max_violation = 0.0;

  Vector gi(theta.size());
  for (std::size_t i = 0; i < p.inequalities.size(); ++i) {
    gi.setZero();
    const double g = p.inequalities[i](theta, gi);
    out.max_violation = std::max(out.max_violation, g);
    const double active = std::max(0.0, lambda[static_cast<Eigen::Index>(i)] + rho * g);
    out.value += (active * active -
                  lambda[static_cast<Eigen::Index>(i)] * lambda[static_cast<Eigen::Index>(i)]) /
                 (2.0 * rho);
    if (active > 0.0) grad_theta += active * gi;
  }
  if (p.block_count > 0) {
    const Eigen::Index base = static_cast<Eigen::Index>(p.inequalities.size());
    const Vector g = p.block_values(theta);
    Vector coef(p.block_count);
    for (Eigen::Index i = 0; i < p.block_count; ++i) {
      out.max_violation = std::max(out.max_violation, g[i]);
      const double lam = lambda[base + i];
      coef[i] = std::max(0.0, lam + rho * g[i]);
      out.value += (coef[i] * coef[i] - lam * lam) / (2.0 * rho);
    }
    if (coef.maxCoeff() > 0.0) grad_theta += p.block_accumulate(theta, coef);
  }
  out.grad_u = p.basis ? Vector(p.basis->transpose() * grad_theta) : grad_theta;
  return out;
}

}  // namespace

std::pair<Vector, OptReport> minimize(const OptProblem& problem,
                                      const OptConfig& config) {
  const Eigen::Index m =
      static_cast<Eigen::Index>(problem.inequalities.size()) + problem.block_count;
  Vector u = Vector::Zero(problem.free_dim());
  Vector lambda = Vector::Zero(m);
  double rho = config.initial_penalty;

  OptReport report;
  constexpr double kArmijoC = 1e-4;
  constexpr int kMaxBacktracks = 50;

  MeritEval cur = eval_merit(problem, u, lambda, rho);
  if (!std::isfinite(cur.value))
    throw std::runtime_error("minimize: objective not finite at start point");

  double prev_violation = cur.max_violation;
  const int outer_rounds = m == 0 ? 1 : config.max_outer;

  for (int outer = 0; outer < outer_rounds; ++outer) {
    double step = 1.0;
    for (int inner = 0; inner < config.max_inner; ++inner) {
      ++report.iterations;
      const double gnorm = cur.grad_u.norm();
      if (gnorm <= config.tol * (1.0 + std::abs(cur.value))) break;

      const Vector dir = -cur.grad_u;
      int backtracks = 0;
      MeritEval next{};
      bool accepted = false;
      double s = step;
      while (backtracks < kMaxBacktracks) {
        next = eval_merit(problem, u + s * dir, lambda, rho);
        if (std::isfinite(next.value) &&
            next.value <= cur.value - kArmijoC * s * gnorm * gnorm) {
          accepted = true;
          break;
        }
        s *= 0.5;
        ++backtracks;
      }
      if (!accepted) {
        if (!std::isfinite(next.value))
          throw std::runtime_error("minimize: divergence, backtracking exhausted on non-finite objective");
        break;  // no further descent possible at this scale
      }
      u += s * dir;
      cur = next;
      step = std::min(2.0 * s, 1e6);
    }

    // Multiplier update lambda <- max(0, lambda + rho g), then escalate the
    // penalty unless the violation shrank enough.
    if (m > 0) {
      const Vector theta = problem.lift(u);
      Vector scratch(theta.size());
      const Eigen::Index n_scalar =
          static_cast<Eigen::Index>(problem.inequalities.size());
      for (Eigen::Index i = 0; i < n_scalar; ++i) {
        scratch.setZero();
        const double g = problem.inequalities[static_cast<std::size_t>(i)](theta, scratch);
        lambda[i] = std::max(0.0, lambda[i] + rho * g);
      }
      if (problem.block_count > 0) {
        const Vector g = problem.block_values(theta);
        for (Eigen::Index i = 0; i < problem.block_count; ++i)
          lambda[n_scalar + i] = std::max(0.0, lambda[n_scalar + i] + rho * g[i]);
      }
      cur = eval_merit(problem, u, lambda, rho);
      if (cur.max_violation <= config.feasibility_tol &&
          cur.grad_u.norm() <= config.tol * (1.0 + std::abs(cur.value)))
        break;
      if (cur.max_violation > 0.25 * prev_violation)
        rho *= config.penalty_growth;
      prev_violation = cur.max_violation;
      cur = eval_merit(problem, u, lambda, rho);
    }
  }

  const Vector theta = problem.lift(u);
  report.objective = cur.objective;
  report.max_violation = std::max(0.0, cur.max_violation);
  const bool grad_ok = cur.grad_u.norm() <= config.tol * (1.0 + std::abs(cur.value));
  const bool feas_ok = cur.max_violation <= config.feasibility_tol;
  report.converged = grad_ok && feas_ok;
  report.reason = report.converged ? "stationary and feasible"
                : !feas_ok         ? "feasibility tolerance not reached"
                                   : "iteration budget exhausted";
  return {theta, report};
}

Matrix project_psd(const Eigen::Ref<const Matrix>& M) {
  if (!M.allFinite())
    throw std::domain_error("project_psd: non-finite entries");
  const Matrix S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  Vector vals = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace tml
