// Linear soft-margin SVM trained by dual coordinate descent, with a
// one-vs-one multiclass wrapper.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace tml {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SvmModel {
  Vector w;
  double b = 0.0;
  double c1 = 1.0;
  double dual_objective = 0.0;  // value of the dual at the returned point

  // 0.5 (|w|^2 + b^2) + C1 * hinge sum: the augmented-bias primal this
  // solver actually optimizes.
  double primal_objective(const Eigen::Ref<const Matrix>& X,
                          const std::vector<int>& y) const;
};

struct SvmConfig {
  double tol = 1e-6;   // max dual coordinate violation
  int max_epochs = 10000;
};

// L1-hinge binary SVM, labels in {-1, +1}. Bias is carried as an extra
// unit feature, so the dual is a pure box QP. Deterministic cyclic sweeps.
SvmModel svm_train(const Eigen::Ref<const Matrix>& X, const std::vector<int>& y,
                   double c1, const SvmConfig& config = {});

// Sign of w'x + b; a zero margin resolves to +1.
struct SvmPrediction {
  int label;
  double margin;
};
SvmPrediction svm_predict(const SvmModel& model, const Eigen::Ref<const Vector>& x);

struct OvoBank {
  struct Entry {
    int class_a;
    int class_b;
    SvmModel model;  // +1 margin votes class_a
  };
  std::vector<Entry> entries;
  std::vector<int> classes;
};

using BinaryTrainer = std::function<SvmModel(
    const Eigen::Ref<const Matrix>&, const std::vector<int>&)>;

OvoBank ovo_train(const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
                  double c1, const BinaryTrainer& trainer = {});

// Majority vote over all class pairs; ties break to the lowest class id.
int ovo_predict(const OvoBank& bank, const Eigen::Ref<const Vector>& x);

}  // namespace tml
