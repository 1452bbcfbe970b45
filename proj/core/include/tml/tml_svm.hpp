// Alternating optimization of the TPS transform and the SVM under the
// unit-enclosing-ball constraint, plus multiclass and kernelized variants.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tml/kpca.hpp"
#include "tml/opt.hpp"
#include "tml/svm.hpp"
#include "tml/tps.hpp"

namespace tml {

struct TmlSvmConfig {
  double c1 = 1.0;
  double c2 = 1.0;
  double anchor_fraction = 0.30;
  KernelSpec kernel;
  bool kernel_from_dim = true;
  bool full_side_conditions = false;
  bool freeze_transform = false;  // degenerate to plain linear SVM
  int max_outer = 20;
  double outer_tol = 1e-4;
  int inner_step_cap = 50;  // gradient steps per transform half-step
  std::uint64_t seed = 0;
  // Kernelized variant only: KPCA width and rank cap. Non-positive sigma
  // means a multiple of the mean nearest-neighbor distance d_min: 0 is
  // 1 * d_min, a negative value -m is m * d_min.
  double kpca_sigma = 0.0;
  Eigen::Index kpca_rank = 100;
};

// Mean shift and global scale applied before training; maps the training
// data into the closed unit ball.
struct CenteringInfo {
  Vector mean;
  double scale = 1.0;

  Vector apply(const Eigen::Ref<const Vector>& x) const {
    return (x - mean) / scale;
  }
  Matrix apply_rows(const Eigen::Ref<const Matrix>& X) const {
    return (X.rowwise() - mean.transpose()) / scale;
  }
};

// Subtract the mean, then divide by the max row norm (which becomes
// exactly 1). Throws on data that is identically zero after centering.
std::pair<Matrix, CenteringInfo> center_and_scale(const Eigen::Ref<const Matrix>& X);

struct TmlSvmReport {
  int outer_iterations = 0;
  std::vector<double> objective_trace;  // combined objective per outer pass
  double max_ball_violation = 0.0;      // max |f(x'_i)|^2 - 1 over training
};

struct TmlSvmModel {
  // One transform + binary SVM per class pair (one-vs-one); a binary
  // problem is the single-entry case.
  struct PairModel {
    int class_a;
    int class_b;
    CenteringInfo centering;
    TpsTransform transform;
    SvmModel svm;
    TmlSvmReport report;
  };
  std::vector<PairModel> pairs;
  std::vector<int> classes;
  std::optional<KpcaMap> kpca;  // present for the kernelized variant
};

// Squared-hinge transform subproblem: value and gradient in the packed
// (L, Psi-free) layout of metric_nn's pack_parameters.
std::pair<double, Vector> tml_svm_subproblem_objective(
    const TpsTransform& t, const SideConditionBasis& basis,
    const Eigen::Ref<const Matrix>& X, const std::vector<int>& y,
    const Eigen::Ref<const Vector>& w, double b, double c1, double c2);

TmlSvmModel tml_svm_train(const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& labels,
                          const TmlSvmConfig& config = {});

// KPCA-mapped variant: fit the Gaussian KPCA first, then run the same
// alternating trainer in the mapped space.
TmlSvmModel kernel_tml_svm_train(const Eigen::Ref<const Matrix>& X,
                                 const std::vector<int>& labels,
                                 const TmlSvmConfig& config = {});

int tml_svm_predict(const TmlSvmModel& model, const Eigen::Ref<const Vector>& x);

// Binary-model margin (single pair), used by persistence checks.
double tml_svm_margin(const TmlSvmModel& model, const Eigen::Ref<const Vector>& x);

}  // namespace tml
