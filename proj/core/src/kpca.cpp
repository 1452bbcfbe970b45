#include "tml/kpca.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tml {

double compute_dmin(const Eigen::Ref<const Matrix>& X) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("compute_dmin: need at least 2 samples");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (X.row(i) - X.row(j)).norm());
    }
    total += best;
  }
  return total / static_cast<double>(n);
}

namespace {

Matrix gaussian_gram(const Eigen::Ref<const Matrix>& A,
                     const Eigen::Ref<const Matrix>& B, double sigma) {
  Matrix K(A.rows(), B.rows());
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      K(i, j) = std::exp(-(A.row(i) - B.row(j)).squaredNorm() * inv);
  return K;
}

}  // namespace

KpcaMap kpca_fit(const Eigen::Ref<const Matrix>& X, double sigma, Eigen::Index q) {
  const Eigen::Index n = X.rows();
  if (sigma <= 0.0) throw std::invalid_argument("kpca_fit: sigma must be positive");
  if (q < 1 || q > n) throw std::invalid_argument("kpca_fit: need 1 <= q <= n");

  const Matrix K = gaussian_gram(X, X, sigma);
  KpcaMap map;
  map.training = X;
  map.sigma = sigma;
  map.row_means = K.rowwise().mean();
  map.grand_mean = K.mean();

  Matrix Kc = K;
  Kc.colwise() -= map.row_means;
  Kc.rowwise() -= map.row_means.transpose();
  Kc.array() += map.grand_mean;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Kc);
  constexpr double kFloor = 1e-10;
  Eigen::Index keep = 0;
  for (Eigen::Index i = n - 1; i >= 0 && eig.eigenvalues()[i] > kFloor; --i)
    ++keep;
  keep = std::min(keep, q);  // truncates silently when q exceeds the rank
  if (keep == 0) {
    map.eigenvalues = Vector(0);
    map.eigenvectors = Matrix(n, 0);
    return map;
  }
  map.eigenvalues = eig.eigenvalues().tail(keep).reverse();
  map.eigenvectors = eig.eigenvectors().rightCols(keep).rowwise().reverse();
  return map;
}

Vector kpca_map(const KpcaMap& map, const Eigen::Ref<const Vector>& x) {
  if (x.size() != map.training.cols())
    throw std::invalid_argument("kpca_map: dimension mismatch");
  return kpca_map_rows(map, Matrix(x.transpose())).row(0);
}

Matrix kpca_map_rows(const KpcaMap& map, const Eigen::Ref<const Matrix>& X) {
  if (X.cols() != map.training.cols())
    throw std::invalid_argument("kpca_map: dimension mismatch");
  if (map.out_dim() == 0) return Matrix::Zero(X.rows(), 0);
  Matrix K = gaussian_gram(X, map.training, map.sigma);
  Vector test_means = K.rowwise().mean();
  K.rowwise() -= map.row_means.transpose();
  K.colwise() -= test_means;
  K.array() += map.grand_mean;
  return K * map.eigenvectors * map.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal();
}

Matrix kpca_training_embedding(const KpcaMap& map) {
  return map.eigenvectors * map.eigenvalues.cwiseSqrt().asDiagonal();
}

}  // namespace tml
