// kNN, synthetic generators and the repeated-split evaluation protocol:
// stratified splits, CV grid search, paired t-tests and the points table.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tml/dataset.hpp"
#include "tml/tps.hpp"

namespace tml {

// Majority vote over the k nearest neighbors after the optional transform.
// Distance ties keep the lower training index, vote ties the lowest class.
int knn_predict(const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
                const Eigen::Ref<const Vector>& query, int k,
                const TpsTransform* transform = nullptr);

enum class SyntheticGenerator { CONCENTRIC_CIRCLES, BLOBS };

struct SyntheticSpec {
  SyntheticGenerator generator = SyntheticGenerator::CONCENTRIC_CIRCLES;
  std::vector<double> radii = {1.0, 2.0};  // circles
  Matrix centers;                          // blobs: one row per class
  int samples_per_class = 100;
  double noise = 0.05;
  std::uint64_t seed = 0;
};

// Angle-uniform points per circle with Gaussian radial noise.
Dataset make_circles(const SyntheticSpec& spec);
// Isotropic Gaussian clusters around the given centers.
Dataset make_blobs(const SyntheticSpec& spec);
Dataset make_synthetic(const SyntheticSpec& spec);

struct SplitPlan {
  int runs = 10;
  int folds = 3;
  std::uint64_t master_seed = 0;
  bool stratified = true;
};

// Index partition for one run; fold 0 is the test fold.
std::vector<std::vector<Eigen::Index>> make_folds(const std::vector<int>& labels,
                                                  int folds, std::uint64_t seed,
                                                  bool stratified);

enum class TtestOutcome { A_WINS, B_WINS, TIE };

// Two-sided paired t-test on the differences at level alpha. Identical
// samples tie; a zero-variance nonzero shift wins by its sign.
TtestOutcome ttest_paired(const std::vector<double>& a,
                          const std::vector<double>& b, double alpha);

// Student's t CDF via the regularized incomplete beta function.
double student_t_cdf(double t, double dof);

using Predictor = std::function<int(const Vector&)>;

// A benchmarked method: trains on (X, labels) with a per-run seed; any
// internal hyperparameter search happens inside.
struct MethodSpec {
  std::string name;
  std::function<Predictor(const Matrix&, const std::vector<int>&, std::uint64_t)>
      train;
};

// Inner stratified CV: mean validation accuracy of each candidate trainer,
// best index with ties to the lowest.
std::size_t select_by_cv(
    const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
    const std::vector<std::function<Predictor(const Matrix&, const std::vector<int>&,
                                              std::uint64_t)>>& candidates,
    int folds, std::uint64_t seed);

struct ScoreBoard {
  std::vector<std::string> method_names;
  // accuracies[m][r]: empty optional marks a failed run (excluded pairwise).
  std::vector<std::vector<std::optional<double>>> accuracies;
  std::vector<double> points;
  std::vector<std::string> footnotes;

  double mean(std::size_t method) const;
  double stddev(std::size_t method) const;
};

// Per run: stratified split, min-max normalization fitted on the training
// folds, train every method, test-fold accuracy. Afterwards every method
// pair is compared by a paired two-sided t-test at p = 0.05.
ScoreBoard run_protocol(const Dataset& dataset,
                        const std::vector<MethodSpec>& methods,
                        const SplitPlan& plan, int threads = 1);

}  // namespace tml
