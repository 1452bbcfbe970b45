// Gaussian kernel PCA with out-of-sample projection.
#pragma once

#include <Eigen/Dense>

namespace tml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct KpcaMap {
  Matrix training;      // n x d reference points
  double sigma = 1.0;
  Vector eigenvalues;   // q retained, descending, all > 1e-10
  Matrix eigenvectors;  // n x q, unit columns of the centered Gram
  Vector row_means;     // per-row means of the uncentered Gram
  double grand_mean = 0.0;

  Eigen::Index out_dim() const { return eigenvalues.size(); }
};

// Mean over samples of the distance to the nearest other sample.
double compute_dmin(const Eigen::Ref<const Matrix>& X);

// Gram K_ij = exp(-|xi-xj|^2 / (2 sigma^2)), double-centered, top-q
// eigenpairs above the 1e-10 floor (q truncates when it is exceeded).
KpcaMap kpca_fit(const Eigen::Ref<const Matrix>& X, double sigma, Eigen::Index q);

// Out-of-sample projection; for a training point this reproduces its row
// of the mapped training data.
Vector kpca_map(const KpcaMap& map, const Eigen::Ref<const Vector>& x);

// Row-wise batch variant.
Matrix kpca_map_rows(const KpcaMap& map, const Eigen::Ref<const Matrix>& X);

// Embeddings of the training data: V * diag(sqrt(lambda)).
Matrix kpca_training_embedding(const KpcaMap& map);

}  // namespace tml
