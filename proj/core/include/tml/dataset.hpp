#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace tml {

// Feature matrix with dense integer class ids; label_names maps an id back
// to the original label text (first-seen order).
struct Dataset {
  Eigen::MatrixXd X;
  std::vector<int> labels;
  std::vector<std::string> label_names;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

}  // namespace tml
