#include "tml/tps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace tml {

double green_function(double r, KernelSpec kernel) {
  if (!(r >= 0.0) || !std::isfinite(r))
    throw std::domain_error("green_function: distance must be finite and nonnegative");
  switch (kernel.family) {
    case KernelFamily::R2LOGR:
      return r == 0.0 ? 0.0 : r * r * std::log(r);
    case KernelFamily::R1:
      return r;
    case KernelFamily::R3:
      return r * r * r;
  }
  throw std::logic_error("green_function: unknown kernel family");
}

Vector kernel_vector(const Eigen::Ref<const Vector>& x, const AnchorSet& anchors,
                     KernelSpec kernel) {
  if (x.size() != anchors.dim())
    throw std::invalid_argument("kernel_vector: dimension mismatch");
  const Eigen::Index p = anchors.count();
  Vector g(p);
  for (Eigen::Index i = 0; i < p; ++i)
    g[i] = green_function((x.transpose() - anchors.points.row(i)).norm(), kernel);
  return g;
}

Matrix kernel_matrix(const Eigen::Ref<const Matrix>& X, const AnchorSet& anchors,
                     KernelSpec kernel) {
  if (X.cols() != anchors.dim())
    throw std::invalid_argument("kernel_matrix: dimension mismatch");
  Matrix G(X.rows(), anchors.count());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < anchors.count(); ++j)
      G(i, j) = green_function((X.row(i) - anchors.points.row(j)).norm(), kernel);
  return G;
}

namespace {

// Squared-distance matrix used by PAM; computed once, n <= a few thousand.
Matrix pairwise_distances(const Eigen::Ref<const Matrix>& X) {
  const Eigen::Index n = X.rows();
  Matrix D(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (X.row(i) - X.row(j)).norm();
      D(i, j) = d;
      D(j, i) = d;
    }
  }
  return D;
}

double pam_cost(const Matrix& D, const std::vector<Eigen::Index>& medoids) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index m : medoids) best = std::min(best, D(i, m));
    cost += best;
  }
  return cost;
}

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n, Eigen::Index p,
                                                     std::uint64_t seed) {
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = 0; i < p; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(p);
  return idx;
}

std::vector<Eigen::Index> pam_medoids(const Matrix& D, Eigen::Index p,
                                      std::uint64_t seed) {
  const Eigen::Index n = D.rows();
  std::vector<Eigen::Index> medoids = sample_without_replacement(n, p, seed);
  std::sort(medoids.begin(), medoids.end());

  double cost = pam_cost(D, medoids);
  constexpr int kMaxPasses = 100;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    bool improved = false;
    for (std::size_t mi = 0; mi < medoids.size(); ++mi) {
      Eigen::Index best_swap = -1;
      double best_cost = cost;
      for (Eigen::Index cand = 0; cand < n; ++cand) {
        if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end())
          continue;
        const Eigen::Index saved = medoids[mi];
        medoids[mi] = cand;
        const double c = pam_cost(D, medoids);
        medoids[mi] = saved;
        // Strict improvement, ties broken by lowest candidate index.
        if (c < best_cost - 1e-15) {
          best_cost = c;
          best_swap = cand;
        }
      }
      if (best_swap >= 0) {
        medoids[mi] = best_swap;
        cost = best_cost;
        improved = true;
      }
    }
    if (!improved) break;
  }
  std::sort(medoids.begin(), medoids.end());
  return medoids;
}

}  // namespace

AnchorSet select_anchors(const Eigen::Ref<const Matrix>& X, Eigen::Index p,
                         AnchorMethod method, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (p < 1 || p > n)
    throw std::invalid_argument("select_anchors: need 1 <= p <= n");

  std::vector<Eigen::Index> chosen;
  if (p == n) {
    chosen.resize(n);
    std::iota(chosen.begin(), chosen.end(), Eigen::Index{0});
  } else if (method == AnchorMethod::RANDOM) {
    chosen = sample_without_replacement(n, p, seed);
    std::sort(chosen.begin(), chosen.end());
  } else {
    chosen = pam_medoids(pairwise_distances(X), p, seed);
  }

  // Duplicate training rows can map to duplicate medoids only through
  // duplicate data; keep the first occurrence of each distinct row.
  AnchorSet anchors;
  anchors.selection_seed = seed;
  anchors.method = method;
  Matrix pts(p, X.cols());
  Eigen::Index kept = 0;
  for (Eigen::Index idx : chosen) {
    bool dup = false;
    for (Eigen::Index j = 0; j < kept && !dup; ++j)
      dup = (pts.row(j) - X.row(idx)).norm() == 0.0;
    if (!dup) pts.row(kept++) = X.row(idx);
  }
  anchors.points = pts.topRows(kept);
  return anchors;
}

TpsTransform TpsTransform::identity(const AnchorSet& anchors, KernelSpec kernel) {
  TpsTransform t;
  const Eigen::Index d = anchors.dim();
  t.linear = Matrix::Identity(d, d);
  t.weights = Matrix::Zero(d, anchors.count());
  t.anchors = anchors;
  t.kernel = kernel;
  return t;
}

double TpsTransform::side_condition_violation() const {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    worst = std::max(worst, std::abs(weights.row(k).sum()));
    worst = std::max(worst,
                     std::abs(weights.row(k).dot(anchors.points.col(k))));
  }
  return worst;
}

Vector apply_transform(const TpsTransform& t, const Eigen::Ref<const Vector>& x) {
  if (x.size() != t.dim())
    throw std::invalid_argument("apply_transform: dimension mismatch");
  return t.linear * x + t.weights * kernel_vector(x, t.anchors, t.kernel);
}

Matrix apply_transform_rows(const TpsTransform& t, const Eigen::Ref<const Matrix>& X) {
  if (X.cols() != t.dim())
    throw std::invalid_argument("apply_transform: dimension mismatch");
  Matrix G = kernel_matrix(X, t.anchors, t.kernel);
  return X * t.linear.transpose() + G * t.weights.transpose();
}

namespace {

// Orthonormal basis for the null space of the rows of C (rows x p), rank
// detected from the singular values.
Matrix null_space_basis(const Matrix& C) {
  Eigen::JacobiSVD<Matrix> svd(C.transpose(), Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double tol = 1e-12 * std::max<double>(1.0, sv.size() ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  return svd.matrixU().rightCols(C.cols() - rank);
}

}  // namespace

SideConditionBasis build_side_basis(const AnchorSet& anchors,
                                    bool full_side_conditions) {
  const Eigen::Index p = anchors.count();
  const Eigen::Index d = anchors.dim();
  if (p < 3)
    throw std::invalid_argument("build_side_basis: need at least 3 anchors");

  SideConditionBasis basis;
  basis.bases.reserve(static_cast<std::size_t>(d));
  if (full_side_conditions) {
    Matrix C(1 + d, p);
    C.row(0).setOnes();
    C.bottomRows(d) = anchors.points.transpose();
    Matrix B = null_space_basis(C);
    for (Eigen::Index k = 0; k < d; ++k) basis.bases.push_back(B);
  } else {
    for (Eigen::Index k = 0; k < d; ++k) {
      Matrix C(2, p);
      C.row(0).setOnes();
      C.row(1) = anchors.points.col(k).transpose();
      basis.bases.push_back(null_space_basis(C));
    }
  }
  return basis;
}

Matrix weights_from_free(const SideConditionBasis& basis,
                         const Eigen::Ref<const Vector>& free_coords) {
  const Eigen::Index d = basis.dim();
  if (d == 0) throw std::invalid_argument("weights_from_free: empty basis");
  const Eigen::Index p = basis.bases.front().rows();
  Matrix psi(d, p);
  Eigen::Index offset = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index w = basis.bases[static_cast<std::size_t>(k)].cols();
    psi.row(k) = (basis.bases[static_cast<std::size_t>(k)] *
                  free_coords.segment(offset, w))
                     .transpose();
    offset += w;
  }
  if (offset != free_coords.size())
    throw std::invalid_argument("weights_from_free: coordinate count mismatch");
  return psi;
}

Vector free_from_weight_gradient(const SideConditionBasis& basis,
                                 const Eigen::Ref<const Matrix>& grad_weights) {
  Vector g(basis.free_count());
  Eigen::Index offset = 0;
  for (Eigen::Index k = 0; k < basis.dim(); ++k) {
    const auto& B = basis.bases[static_cast<std::size_t>(k)];
    g.segment(offset, B.cols()) = B.transpose() * grad_weights.row(k).transpose();
    offset += B.cols();
  }
  return g;
}

}  // namespace tml
