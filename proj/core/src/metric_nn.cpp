#include "tml/metric_nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tml {

namespace {

void subsample_pairs(std::vector<std::pair<int, int>>& pairs, std::size_t cap,
                     std::mt19937_64& rng) {
  if (pairs.size() <= cap) return;
  for (std::size_t i = 0; i < cap; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pairs.size() - 1);
    std::swap(pairs[i], pairs[pick(rng)]);
  }
  pairs.resize(cap);
  std::sort(pairs.begin(), pairs.end());
}

}  // namespace

PairSets build_pairs(const std::vector<int>& labels, std::size_t cap_per_set,
                     std::uint64_t seed) {
  const int n = static_cast<int>(labels.size());
  if (n < 2) throw std::invalid_argument("build_pairs: need at least 2 samples");
  PairSets out;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      (labels[i] == labels[j] ? out.equivalent : out.nonequivalent)
          .emplace_back(i, j);
  std::mt19937_64 rng(seed);
  subsample_pairs(out.equivalent, cap_per_set, rng);
  subsample_pairs(out.nonequivalent, cap_per_set, rng);
  return out;
}

double mahalanobis_distance(const MahalanobisMetric& metric,
                            const Eigen::Ref<const Vector>& xi,
                            const Eigen::Ref<const Vector>& xj) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (metric.M + metric.M.transpose()));
  if (eig.eigenvalues().minCoeff() < -1e-8)
    throw std::domain_error("mahalanobis_distance: M is not PSD");
  const Vector diff = xi - xj;
  return std::sqrt(std::max(0.0, diff.dot(metric.M * diff)));
}

namespace {

Matrix pair_scatter(const Eigen::Ref<const Matrix>& X,
                    const std::vector<std::pair<int, int>>& pairs) {
  Matrix S = Matrix::Zero(X.cols(), X.cols());
  for (const auto& [i, j] : pairs) {
    const Vector u = X.row(i) - X.row(j);
    S += u * u.transpose();
  }
  return S;
}

}  // namespace

MahalanobisMetric mmc_train(const Eigen::Ref<const Matrix>& X,
                            const PairSets& pairs, const MmcConfig& config) {
  if (pairs.nonequivalent.empty())
    throw std::invalid_argument("mmc_train: nonequivalent pair set is empty");
  const Matrix Sp = pair_scatter(X, pairs.equivalent);
  const Matrix Sn = pair_scatter(X, pairs.nonequivalent);
  if (Sn.norm() == 0.0)
    throw std::runtime_error("mmc_train: all nonequivalent pair differences are zero");

  const Eigen::Index d = X.cols();
  Matrix M = Matrix::Identity(d, d);
  M /= (M.cwiseProduct(Sn)).sum();

  const double step = config.step / std::max(1.0, Sp.norm());
  for (int it = 0; it < config.max_iter; ++it) {
    M = project_psd(M - step * Sp);
    const double n_sum = (M.cwiseProduct(Sn)).sum();
    if (n_sum < 1.0) {
      if (n_sum <= 0.0) {
        // Gradient step annihilated every N-relevant direction; restart
        // from the dominant N direction.
        Eigen::SelfAdjointEigenSolver<Matrix> eig(Sn);
        const Vector v = eig.eigenvectors().col(d - 1);
        M = v * v.transpose() / eig.eigenvalues()[d - 1];
      } else {
        M /= n_sum;
      }
    }
  }
  return {M};
}

namespace detail {

std::pair<double, Vector> tml_nn_objective_with_gram(
    const TpsTransform& t, const SideConditionBasis& basis,
    const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& G,
    const PairSets& pairs, double lambda) {
  const Eigen::Index d = t.dim();
  const Matrix F = X * t.linear.transpose() + G * t.weights.transpose();

  double J = lambda * t.weights.squaredNorm();
  Matrix grad_L = Matrix::Zero(d, d);
  Matrix grad_psi = 2.0 * lambda * t.weights;
  for (const auto& [i, j] : pairs.equivalent) {
    const Vector diff = F.row(i) - F.row(j);
    J += diff.squaredNorm();
    grad_L.noalias() += 2.0 * diff * (X.row(i) - X.row(j));
    grad_psi.noalias() += 2.0 * diff * (G.row(i) - G.row(j));
  }

  Vector grad(d * d + basis.free_count());
  grad.head(d * d) =
      Eigen::Map<const Vector>(Matrix(grad_L.transpose()).data(), d * d);
  grad.tail(basis.free_count()) = free_from_weight_gradient(basis, grad_psi);
  return {J, grad};
}

}  // namespace detail

std::pair<double, Vector> tml_nn_objective(const TpsTransform& t,
                                           const SideConditionBasis& basis,
                                           const Eigen::Ref<const Matrix>& X,
                                           const PairSets& pairs, double lambda) {
  const Matrix G = kernel_matrix(X, t.anchors, t.kernel);
  return detail::tml_nn_objective_with_gram(t, basis, X, G, pairs, lambda);
}

Vector pack_parameters(const TpsTransform& t, const SideConditionBasis& basis) {
  const Eigen::Index d = t.dim();
  Vector theta(d * d + basis.free_count());
  theta.head(d * d) =
      Eigen::Map<const Vector>(Matrix(t.linear.transpose()).data(), d * d);
  // Recover free coordinates by projection; exact for any Psi built
  // through the basis (orthonormal columns).
  Eigen::Index offset = d * d;
  for (Eigen::Index k = 0; k < basis.dim(); ++k) {
    const auto& B = basis.bases[static_cast<std::size_t>(k)];
    theta.segment(offset, B.cols()) = B.transpose() * t.weights.row(k).transpose();
    offset += B.cols();
  }
  return theta;
}

TpsTransform unpack_parameters(const Eigen::Ref<const Vector>& theta,
                               const AnchorSet& anchors, KernelSpec kernel,
                               const SideConditionBasis& basis) {
  const Eigen::Index d = anchors.dim();
  TpsTransform t;
  t.anchors = anchors;
  t.kernel = kernel;
  t.linear =
      Eigen::Map<const Matrix>(theta.head(d * d).data(), d, d).transpose();
  t.weights = weights_from_free(basis, theta.tail(basis.free_count()));
  return t;
}

TpsTransform tml_nn_train(const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& labels,
                          const TmlNnConfig& config) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw std::invalid_argument("tml_nn_train: label count mismatch");

  const PairSets pairs = build_pairs(labels, config.pair_cap, config.seed);
  if (pairs.nonequivalent.empty())
    throw std::invalid_argument("tml_nn_train: single-class data");

  const KernelSpec kernel = config.kernel_from_dim
                                ? KernelSpec::default_for_dim(static_cast<int>(d))
                                : config.kernel;
  Eigen::Index p = static_cast<Eigen::Index>(
      std::ceil(config.anchor_fraction * static_cast<double>(n)));
  p = std::clamp<Eigen::Index>(p, std::min<Eigen::Index>(3, n), n);
  if (p < 3)
    throw std::invalid_argument("tml_nn_train: need at least 3 samples for anchors");
  const AnchorSet anchors =
      select_anchors(X, p, AnchorMethod::KMEDOIDS, config.seed);
  const SideConditionBasis basis =
      build_side_basis(anchors, config.full_side_conditions);

  const Matrix G = kernel_matrix(X, anchors, kernel);

  // Start at L = alpha I, Psi = 0 with alpha chosen to make the
  // N-sum constraint exactly active.
  double n_sum0 = 0.0;
  for (const auto& [i, j] : pairs.nonequivalent)
    n_sum0 += (X.row(i) - X.row(j)).squaredNorm();
  if (n_sum0 <= 0.0)
    throw std::runtime_error("tml_nn_train: degenerate data, all class differences zero");
  const double alpha = 1.0 / std::sqrt(n_sum0);

  TpsTransform init = TpsTransform::identity(anchors, kernel);
  init.linear *= alpha;

  const Eigen::Index n_params = d * d + basis.free_count();

  auto unpack = [&](const Vector& theta) {
    return unpack_parameters(theta, anchors, kernel, basis);
  };

  OptProblem problem;
  problem.origin = pack_parameters(init, basis);
  if (config.freeze_weights) {
    Matrix Z = Matrix::Zero(n_params, d * d);
    Z.topRows(d * d).setIdentity();
    problem.basis = Z;
  }
  problem.objective = [&, lambda = config.lambda](const Vector& theta,
                                                  Vector& grad) {
    const TpsTransform t = unpack(theta);
    auto [J, g] = detail::tml_nn_objective_with_gram(t, basis, X, G, pairs, lambda);
    grad = g;
    return J;
  };
  problem.inequalities.push_back([&](const Vector& theta, Vector& grad) {
    const TpsTransform t = unpack(theta);
    const Matrix F = X * t.linear.transpose() + G * t.weights.transpose();
    double n_sum = 0.0;
    Matrix grad_L = Matrix::Zero(d, d);
    Matrix grad_psi = Matrix::Zero(d, anchors.count());
    for (const auto& [i, j] : pairs.nonequivalent) {
      const Vector diff = F.row(i) - F.row(j);
      n_sum += diff.squaredNorm();
      grad_L.noalias() -= 2.0 * diff * (X.row(i) - X.row(j));
      grad_psi.noalias() -= 2.0 * diff * (G.row(i) - G.row(j));
    }
    grad.resize(n_params);
    grad.head(d * d) =
        Eigen::Map<const Vector>(Matrix(grad_L.transpose()).data(), d * d);
    grad.tail(basis.free_count()) = free_from_weight_gradient(basis, grad_psi);
    return 1.0 - n_sum;
  });

  auto [theta, report] = minimize(problem, config.optimizer);
  if (!std::isfinite(report.objective))
    throw std::runtime_error("tml_nn_train: optimizer diverged");
  return unpack(theta);
}

}  // namespace tml
