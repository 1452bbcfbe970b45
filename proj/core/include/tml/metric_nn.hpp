// Pairwise constraint sets, the MMC linear baseline and the TPS metric
// learner for nearest-neighbor classification (TML-NN).
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tml/opt.hpp"
#include "tml/tps.hpp"

namespace tml {

// Class-equivalent pairs P and class-nonequivalent pairs N, each (i, j)
// with i < j. Exhaustive when under the caps, seeded subsample otherwise.
struct PairSets {
  std::vector<std::pair<int, int>> equivalent;     // P
  std::vector<std::pair<int, int>> nonequivalent;  // N
};

PairSets build_pairs(const std::vector<int>& labels, std::size_t cap_per_set,
                     std::uint64_t seed);

struct MahalanobisMetric {
  Matrix M;  // d x d, PSD
};

double mahalanobis_distance(const MahalanobisMetric& metric,
                            const Eigen::Ref<const Vector>& xi,
                            const Eigen::Ref<const Vector>& xj);

struct MmcConfig {
  double step = 0.1;
  int max_iter = 500;
};

// Projected gradient descent on sum_P D^2_M subject to M PSD and
// sum_N D^2_M >= 1 (rescaling restores the N constraint).
MahalanobisMetric mmc_train(const Eigen::Ref<const Matrix>& X,
                            const PairSets& pairs, const MmcConfig& config = {});

struct TmlNnConfig {
  double lambda = 1.0;
  double anchor_fraction = 0.30;
  KernelSpec kernel;  // overridden by the dimension parity rule when defaulted
  bool kernel_from_dim = true;
  bool full_side_conditions = false;
  bool freeze_weights = false;  // Psi pinned at 0: pure linear metric
  std::size_t pair_cap = 10000;
  OptConfig optimizer;
  std::uint64_t seed = 0;
};

// J = sum_P |f(xi) - f(xj)|^2 + lambda |Psi|_F^2 with the analytic gradient
// over (L, Psi free coordinates); the free-coordinate layout matches
// pack_parameters below.
std::pair<double, Vector> tml_nn_objective(const TpsTransform& t,
                                           const SideConditionBasis& basis,
                                           const Eigen::Ref<const Matrix>& X,
                                           const PairSets& pairs, double lambda);

TpsTransform tml_nn_train(const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& labels,
                          const TmlNnConfig& config = {});

// Parameter vector layout shared by the TML trainers: vec(L) row-major
// followed by the stacked Psi free coordinates.
Vector pack_parameters(const TpsTransform& t, const SideConditionBasis& basis);
TpsTransform unpack_parameters(const Eigen::Ref<const Vector>& theta,
                               const AnchorSet& anchors, KernelSpec kernel,
                               const SideConditionBasis& basis);

}  // namespace tml
