#include "tml/svm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace tml {

double SvmModel::primal_objective(const Eigen::Ref<const Matrix>& X,
                                  const std::vector<int>& y) const {
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double margin = y[static_cast<std::size_t>(i)] * (w.dot(X.row(i)) + b);
    hinge += std::max(0.0, 1.0 - margin);
  }
  return 0.5 * (w.squaredNorm() + b * b) + c1 * hinge;
}

SvmModel svm_train(const Eigen::Ref<const Matrix>& X, const std::vector<int>& y,
                   double c1, const SvmConfig& config) {
  const Eigen::Index n = X.rows();
  if (static_cast<Eigen::Index>(y.size()) != n)
    throw std::invalid_argument("svm_train: label count mismatch");
  if (c1 <= 0.0) throw std::invalid_argument("svm_train: C1 must be positive");
  bool pos = false, neg = false;
  for (int yi : y) {
    if (yi == 1) pos = true;
    else if (yi == -1) neg = true;
    else throw std::invalid_argument("svm_train: labels must be -1 or +1");
  }
  if (!pos || !neg)
    throw std::runtime_error("svm_train: both labels must be present");

  // Dual coordinate descent on the box QP with the bias folded in as a
  // constant unit feature: Q_ii = |x_i|^2 + 1.
  Vector alpha = Vector::Zero(n);
  Vector qdiag(n);
  for (Eigen::Index i = 0; i < n; ++i) qdiag[i] = X.row(i).squaredNorm() + 1.0;

  SvmModel model;
  model.w = Vector::Zero(X.cols());
  model.b = 0.0;
  model.c1 = c1;

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    double max_violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
      const double grad = yi * (model.w.dot(X.row(i)) + model.b) - 1.0;
      double projected = grad;
      if (alpha[i] <= 0.0) projected = std::min(grad, 0.0);
      else if (alpha[i] >= c1) projected = std::max(grad, 0.0);
      max_violation = std::max(max_violation, std::abs(projected));
      if (projected != 0.0) {
        const double next = std::clamp(alpha[i] - grad / qdiag[i], 0.0, c1);
        const double delta = next - alpha[i];
        if (delta != 0.0) {
          alpha[i] = next;
          model.w += delta * yi * X.row(i).transpose();
          model.b += delta * yi;
        }
      }
    }
    if (max_violation <= config.tol) break;
  }

  model.dual_objective =
      alpha.sum() - 0.5 * (model.w.squaredNorm() + model.b * model.b);
  return model;
}

SvmPrediction svm_predict(const SvmModel& model,
                          const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.w.size())
    throw std::invalid_argument("svm_predict: dimension mismatch");
  const double margin = model.w.dot(x) + model.b;
  return {margin >= 0.0 ? 1 : -1, margin};
}

OvoBank ovo_train(const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
                  double c1, const BinaryTrainer& trainer) {
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (by_class.size() < 2)
    throw std::invalid_argument("ovo_train: need at least 2 classes");

  BinaryTrainer train = trainer;
  if (!train)
    train = [c1](const Eigen::Ref<const Matrix>& Xs, const std::vector<int>& ys) {
      return svm_train(Xs, ys, c1);
    };

  OvoBank bank;
  for (const auto& [cls, _] : by_class) bank.classes.push_back(cls);

  for (std::size_t a = 0; a < bank.classes.size(); ++a) {
    for (std::size_t bidx = a + 1; bidx < bank.classes.size(); ++bidx) {
      const int ca = bank.classes[a];
      const int cb = bank.classes[bidx];
      const auto& ia = by_class[ca];
      const auto& ib = by_class[cb];
      Matrix Xs(static_cast<Eigen::Index>(ia.size() + ib.size()), X.cols());
      std::vector<int> ys;
      ys.reserve(ia.size() + ib.size());
      Eigen::Index r = 0;
      for (Eigen::Index idx : ia) { Xs.row(r++) = X.row(idx); ys.push_back(1); }
      for (Eigen::Index idx : ib) { Xs.row(r++) = X.row(idx); ys.push_back(-1); }
      bank.entries.push_back({ca, cb, train(Xs, ys)});
    }
  }
  return bank;
}

int ovo_predict(const OvoBank& bank, const Eigen::Ref<const Vector>& x) {
  std::map<int, int> votes;
  for (int cls : bank.classes) votes[cls] = 0;
  for (const auto& entry : bank.entries) {
    const auto pred = svm_predict(entry.model, x);
    ++votes[pred.label == 1 ? entry.class_a : entry.class_b];
  }
  int best_class = bank.classes.front();
  int best_votes = -1;
  for (const auto& [cls, v] : votes) {
    if (v > best_votes) {  // map iterates ascending: ties keep lowest id
      best_votes = v;
      best_class = cls;
    }
  }
  return best_class;
}

}  // namespace tml
