#include "tml/tml_svm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

#include "tml/metric_nn.hpp"

namespace tml {

std::pair<Matrix, CenteringInfo> center_and_scale(const Eigen::Ref<const Matrix>& X) {
  if (X.rows() < 1) throw std::invalid_argument("center_and_scale: empty data");
  CenteringInfo info;
  info.mean = X.colwise().mean();
  Matrix centered = X.rowwise() - info.mean.transpose();
  const double max_norm = centered.rowwise().norm().maxCoeff();
  if (X.rows() > 1 && max_norm == 0.0)
    throw std::runtime_error("center_and_scale: data is identical, zero after centering");
  info.scale = max_norm > 0.0 ? max_norm : 1.0;
  centered /= info.scale;
  return {std::move(centered), info};
}

namespace detail {

std::pair<double, Vector> tml_svm_subproblem_with_gram(
    const TpsTransform& t, const SideConditionBasis& basis,
    const Eigen::Ref<const Matrix>& X, const Eigen::Ref<const Matrix>& G,
    const std::vector<int>& y, const Eigen::Ref<const Vector>& w, double b,
    double c1, double c2) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = t.dim();
  const Matrix F = X * t.linear.transpose() + G * t.weights.transpose();

  double J = c2 * t.weights.squaredNorm();
  Matrix grad_L = Matrix::Zero(d, d);
  Matrix grad_psi = 2.0 * c2 * t.weights;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
    const double hinge = std::max(0.0, 1.0 - yi * (w.dot(F.row(i)) + b));
    if (hinge > 0.0) {
      J += c1 * hinge * hinge;
      // d/dL of the squared hinge is -2 C1 hinge * y_i w x_i^T; the same
      // outer product against the kernel vector drives Psi.
      const double coef = -2.0 * c1 * hinge * yi;
      grad_L.noalias() += coef * w * X.row(i);
      grad_psi.noalias() += coef * w * G.row(i);
    }
  }

  Vector grad(d * d + basis.free_count());
  grad.head(d * d) =
      Eigen::Map<const Vector>(Matrix(grad_L.transpose()).data(), d * d);
  grad.tail(basis.free_count()) = free_from_weight_gradient(basis, grad_psi);
  return {J, grad};
}

}  // namespace detail

std::pair<double, Vector> tml_svm_subproblem_objective(
    const TpsTransform& t, const SideConditionBasis& basis,
    const Eigen::Ref<const Matrix>& X, const std::vector<int>& y,
    const Eigen::Ref<const Vector>& w, double b, double c1, double c2) {
  const Matrix G = kernel_matrix(X, t.anchors, t.kernel);
  return detail::tml_svm_subproblem_with_gram(t, basis, X, G, y, w, b, c1, c2);
}

namespace {

// Combined objective tracked across outer iterations; uses the augmented
// bias norm so the SVM half-step is an exact minimizer of it.
double combined_objective(const SvmModel& svm, const Eigen::Ref<const Matrix>& F,
                          const std::vector<int>& y, double c2,
                          const TpsTransform& t) {
  return svm.primal_objective(F, y) + c2 * t.weights.squaredNorm();
}

TmlSvmModel::PairModel train_binary(const Eigen::Ref<const Matrix>& X_raw,
                                    const std::vector<int>& y,
                                    const TmlSvmConfig& config) {
  auto [X, centering] = center_and_scale(X_raw);
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();

  const KernelSpec kernel = config.kernel_from_dim
                                ? KernelSpec::default_for_dim(static_cast<int>(d))
                                : config.kernel;
  Eigen::Index p = static_cast<Eigen::Index>(
      std::ceil(config.anchor_fraction * static_cast<double>(n)));
  p = std::clamp<Eigen::Index>(p, std::min<Eigen::Index>(3, n), n);
  if (p < 3)
    throw std::invalid_argument("tml_svm_train: need at least 3 samples for anchors");
  const AnchorSet anchors =
      select_anchors(X, p, AnchorMethod::KMEDOIDS, config.seed);
  const SideConditionBasis basis =
      build_side_basis(anchors, config.full_side_conditions);
  const Matrix G = kernel_matrix(X, anchors, kernel);
  const Eigen::Index n_params = d * d + basis.free_count();

  TpsTransform transform = TpsTransform::identity(anchors, kernel);
  TmlSvmReport report;

  auto ball_violation = [&](const Matrix& F) {
    return F.rowwise().squaredNorm().maxCoeff() - 1.0;
  };

  Matrix F = X;  // identity transform at start
  SvmModel svm = svm_train(F, y, config.c1);
  double objective = combined_objective(svm, F, y, config.c2, transform);
  report.objective_trace.push_back(objective);

  if (!config.freeze_transform) {
    for (int outer = 0; outer < config.max_outer; ++outer) {
      ++report.outer_iterations;

      // Transform half-step: squared-hinge subproblem under the unit-ball
      // inequalities, side conditions eliminated through the basis.
      OptProblem problem;
      problem.origin = pack_parameters(transform, basis);
      problem.objective = [&](const Vector& theta, Vector& grad) {
        const TpsTransform t = unpack_parameters(theta, anchors, kernel, basis);
        auto [J, g] = detail::tml_svm_subproblem_with_gram(
            t, basis, X, G, y, svm.w, svm.b, config.c1, config.c2);
        grad = g;
        return J;
      };

      // Unit-ball constraints |f(x_i)|^2 <= 1 as one vectorized block; the
      // transformed rows are cached between the value and gradient calls.
      struct BallCache {
        Vector theta;
        Matrix F;
      };
      auto cache = std::make_shared<BallCache>();
      auto refresh = [&, cache](const Vector& theta) {
        if (cache->theta.size() == theta.size() && cache->theta == theta) return;
        const TpsTransform t = unpack_parameters(theta, anchors, kernel, basis);
        cache->F = X * t.linear.transpose() + G * t.weights.transpose();
        cache->theta = theta;
      };
      problem.block_count = n;
      problem.block_values = [refresh, cache](const Vector& theta) {
        refresh(theta);
        return Vector(cache->F.rowwise().squaredNorm().array() - 1.0);
      };
      problem.block_accumulate = [&, refresh, cache](const Vector& theta,
                                                     const Vector& coef) {
        refresh(theta);
        // sum_i coef_i * 2 f_i x_i^T and the same against the kernel rows
        const Matrix W = 2.0 * cache->F.transpose() * coef.asDiagonal();
        const Matrix grad_L = W * X;
        const Matrix grad_psi = W * G;
        Vector grad(n_params);
        grad.head(d * d) =
            Eigen::Map<const Vector>(Matrix(grad_L.transpose()).data(), d * d);
        grad.tail(basis.free_count()) =
            free_from_weight_gradient(basis, grad_psi);
        return grad;
      };
      OptConfig opt_config;
      opt_config.max_inner = config.inner_step_cap;
      opt_config.max_outer = 10;
      auto [theta, opt_report] = minimize(problem, opt_config);
      const TpsTransform candidate =
          unpack_parameters(theta, anchors, kernel, basis);

      // The squared-hinge subproblem is a surrogate for the hinge
      // objective; accept the half-step only when the tracked objective
      // does not rise and the ball stays feasible.
      const Matrix F_cand = X * candidate.linear.transpose() +
                            G * candidate.weights.transpose();
      const double cand_objective =
          combined_objective(svm, F_cand, y, config.c2, candidate);
      if (ball_violation(F_cand) > 1e-4 || cand_objective > objective + 1e-9)
        break;
      transform = candidate;
      F = F_cand;

      // SVM half-step: exact minimizer of the combined objective in (w, b).
      svm = svm_train(F, y, config.c1);
      const double next = combined_objective(svm, F, y, config.c2, transform);
      report.objective_trace.push_back(next);
      const bool small_change =
          std::abs(objective - next) <= config.outer_tol * (1.0 + std::abs(objective));
      objective = next;
      if (small_change) break;
    }
  }

  report.max_ball_violation = std::max(0.0, ball_violation(F));
  TmlSvmModel::PairModel pair;
  pair.class_a = 1;
  pair.class_b = -1;
  pair.centering = centering;
  pair.transform = transform;
  pair.svm = svm;
  pair.report = report;
  return pair;
}

}  // namespace

TmlSvmModel tml_svm_train(const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& labels,
                          const TmlSvmConfig& config) {
  if (config.c1 <= 0.0 || config.c2 <= 0.0)
    throw std::invalid_argument("tml_svm_train: C1 and C2 must be positive");
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (by_class.size() < 2)
    throw std::invalid_argument("tml_svm_train: need at least 2 classes");

  TmlSvmModel model;
  for (const auto& [cls, _] : by_class) model.classes.push_back(cls);

  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      const int ca = model.classes[a];
      const int cb = model.classes[b];
      const auto& ia = by_class[ca];
      const auto& ib = by_class[cb];
      Matrix Xs(static_cast<Eigen::Index>(ia.size() + ib.size()), X.cols());
      std::vector<int> ys;
      Eigen::Index r = 0;
      for (Eigen::Index idx : ia) { Xs.row(r++) = X.row(idx); ys.push_back(1); }
      for (Eigen::Index idx : ib) { Xs.row(r++) = X.row(idx); ys.push_back(-1); }
      auto pair = train_binary(Xs, ys, config);
      pair.class_a = ca;
      pair.class_b = cb;
      model.pairs.push_back(std::move(pair));
    }
  }
  return model;
}

TmlSvmModel kernel_tml_svm_train(const Eigen::Ref<const Matrix>& X,
                                 const std::vector<int>& labels,
                                 const TmlSvmConfig& config) {
  double sigma = config.kpca_sigma;
  if (sigma <= 0.0) {
    double dmin = compute_dmin(X);
    if (dmin <= 0.0) dmin = 1e-6;
    sigma = (sigma == 0.0 ? 1.0 : -sigma) * dmin;
  }
  const Eigen::Index q = std::min<Eigen::Index>(
      std::max<Eigen::Index>(1, X.rows() - 1), config.kpca_rank);
  KpcaMap map = kpca_fit(X, sigma, q);
  const Matrix mapped = kpca_training_embedding(map);
  TmlSvmModel model = tml_svm_train(mapped, labels, config);
  model.kpca = std::move(map);
  return model;
}

namespace {

double pair_margin(const TmlSvmModel::PairModel& pair,
                   const Eigen::Ref<const Vector>& x) {
  const Vector centered = pair.centering.apply(x);
  const Vector f = apply_transform(pair.transform, centered);
  return pair.svm.w.dot(f) + pair.svm.b;
}

}  // namespace

int tml_svm_predict(const TmlSvmModel& model, const Eigen::Ref<const Vector>& x) {
  if (model.pairs.empty()) throw std::invalid_argument("tml_svm_predict: empty model");
  Vector z = x;
  if (model.kpca) z = kpca_map(*model.kpca, x);

  std::map<int, int> votes;
  for (int cls : model.classes) votes[cls] = 0;
  for (const auto& pair : model.pairs)
    ++votes[pair_margin(pair, z) >= 0.0 ? pair.class_a : pair.class_b];
  int best_class = model.classes.front();
  int best_votes = -1;
  for (const auto& [cls, v] : votes) {
    if (v > best_votes) {
      best_votes = v;
      best_class = cls;
    }
  }
  return best_class;
}

double tml_svm_margin(const TmlSvmModel& model, const Eigen::Ref<const Vector>& x) {
  if (model.pairs.size() != 1)
    throw std::invalid_argument("tml_svm_margin: binary models only");
  Vector z = x;
  if (model.kpca) z = kpca_map(*model.kpca, x);
  return pair_margin(model.pairs.front(), z);
}

}  // namespace tml
