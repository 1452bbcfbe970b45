// Thin-plate-spline transform machinery: radial kernel, anchor selection,
// transform evaluation and the side-condition null-space bases.
#pragma once

#include <cstdint>
#include <Eigen/Dense>
#include <vector>

namespace tml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Radial kernel family. R2LOGR is the classic r^2 ln r plate kernel
// (even-exponent case), R1 and R3 are the odd-exponent polyharmonic ones.
enum class KernelFamily { R2LOGR, R1, R3 };

struct KernelSpec {
  KernelFamily family = KernelFamily::R2LOGR;

  // Parity rule: r^2 ln r for even input dimension, r^3 otherwise.
  static KernelSpec default_for_dim(int d) {
    return {d % 2 == 0 ? KernelFamily::R2LOGR : KernelFamily::R3};
  }
};

enum class AnchorMethod { KMEDOIDS, RANDOM };

// p anchor rows drawn from the training matrix (medoids, never means).
struct AnchorSet {
  Matrix points;  // p x d
  std::uint64_t selection_seed = 0;
  AnchorMethod method = AnchorMethod::KMEDOIDS;

  Eigen::Index count() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

// Per-output-dimension orthonormal bases for the null space of the two
// side conditions sum_i psi_i = 0 and sum_i psi_i * a_i^k = 0, where a^k
// is the anchors' kth coordinate column. Row k of Psi is B[k] * c for some
// free coordinate vector c, so any Psi built through the basis satisfies
// both equalities by construction.
struct SideConditionBasis {
  std::vector<Matrix> bases;  // d entries, each p x (p-2) (p-1 on rank drop)

  Eigen::Index dim() const { return static_cast<Eigen::Index>(bases.size()); }
  Eigen::Index free_count() const {
    Eigen::Index total = 0;
    for (const auto& b : bases) total += b.cols();
    return total;
  }
};

// f(x) = L x + Psi * g(x) with g the vector of kernel values against the
// anchors. Psi = 0, L = I is exactly the identity map.
struct TpsTransform {
  Matrix linear;  // L, d x d
  Matrix weights; // Psi, d x p
  AnchorSet anchors;
  KernelSpec kernel;

  static TpsTransform identity(const AnchorSet& anchors, KernelSpec kernel);

  Eigen::Index dim() const { return linear.rows(); }

  // Largest absolute violation of the two side conditions over all rows.
  double side_condition_violation() const;
};

// G(r): r^2 ln r (with G(0) = 0), r, or r^3. Throws std::domain_error for
// negative or non-finite r.
double green_function(double r, KernelSpec kernel);

// Component i is green_function(|x - anchor_i|, kernel).
Vector kernel_vector(const Eigen::Ref<const Vector>& x, const AnchorSet& anchors,
                     KernelSpec kernel);

// Row i is kernel_vector(X.row(i)); n x p.
Matrix kernel_matrix(const Eigen::Ref<const Matrix>& X, const AnchorSet& anchors,
                     KernelSpec kernel);

// Pick p anchor rows from X. KMEDOIDS runs PAM swap refinement from a
// seeded random init (max 100 passes, ties to the lowest index); RANDOM
// samples rows without replacement. Deterministic for a fixed seed.
AnchorSet select_anchors(const Eigen::Ref<const Matrix>& X, Eigen::Index p,
                         AnchorMethod method, std::uint64_t seed);

Vector apply_transform(const TpsTransform& t, const Eigen::Ref<const Vector>& x);

// Row-wise batch variant.
Matrix apply_transform_rows(const TpsTransform& t, const Eigen::Ref<const Matrix>& X);

// Orthonormal null-space basis per dimension, via QR of the stacked
// [ones; anchor coordinate] rows with rank detection. Requires p >= 3.
// With `full_side_conditions` the basis is shared across dimensions and
// annihilates all anchor coordinates (the classical Psi^T [1 X] = 0 form).
SideConditionBasis build_side_basis(const AnchorSet& anchors,
                                    bool full_side_conditions = false);

// Psi assembled from stacked free coordinates, row k = (bases[k] * c_k)^T.
Matrix weights_from_free(const SideConditionBasis& basis,
                         const Eigen::Ref<const Vector>& free_coords);

// Adjoint of weights_from_free: projects a d x p gradient w.r.t. Psi down
// to the free coordinates.
Vector free_from_weight_gradient(const SideConditionBasis& basis,
                                 const Eigen::Ref<const Matrix>& grad_weights);

}  // namespace tml
