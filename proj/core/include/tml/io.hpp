// Dataset ingestion (CSV and LIBSVM sparse), run configuration, model
// serialization and report emission.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tml/bench.hpp"
#include "tml/dataset.hpp"
#include "tml/metric_nn.hpp"
#include "tml/tml_svm.hpp"

namespace tml {

// Parse failure with position information for CLI diagnostics.
struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line, int column)
      : std::runtime_error(msg + " at line " + std::to_string(line) +
                           ", column " + std::to_string(column)),
        line(line),
        column(column) {}
  int line;
  int column;
};

// CSV with optional header; numeric features, final column = label. Labels
// map to dense ids in first-seen order. Rejects ragged rows and NaN/Inf.
Dataset load_csv(const std::string& path);

// LIBSVM sparse rows: "<label> idx:val idx:val ...", 1-based indices.
Dataset load_libsvm(const std::string& path);

void save_csv(const Dataset& ds, const std::string& path);

enum class ModelKind { MMC, TML_NN, TML_SVM, KERNEL_TML_SVM };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

// On-disk model: one of the four kinds plus whatever it needs to predict.
// The NN kinds carry their training data (1NN happens at predict time).
struct PersistedModel {
  ModelKind kind = ModelKind::TML_NN;
  std::vector<std::string> label_names;

  // MMC and TML_NN
  Matrix train_X;            // empty for the SVM kinds
  std::vector<int> train_labels;
  std::optional<MahalanobisMetric> metric;      // MMC
  std::optional<TpsTransform> transform;        // TML_NN
  std::optional<TmlSvmModel> svm;               // TML_SVM / KERNEL_TML_SVM

  int predict(const Eigen::Ref<const Vector>& x) const;
};

// Versioned text format, floats at 17 significant digits; load -> save is
// byte-identical.
void save_model(const PersistedModel& model, const std::string& path);
PersistedModel load_model(const std::string& path);
void write_model(const PersistedModel& model, std::ostream& os);
PersistedModel read_model(std::istream& is);

// Flat key=value configuration with section prefixes (tml_svm.c1=8).
// Unknown keys are rejected. Every field has a default.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  int knn_k = 1;

  double mmc_step = 0.1;
  int mmc_max_iter = 500;

  double tml_nn_lambda = 1.0;
  double tml_nn_anchor_fraction = 0.30;
  std::size_t tml_nn_pair_cap = 10000;
  std::string tml_nn_kernel = "auto";  // auto | r2logr | r1 | r3
  bool tml_nn_full_side_conditions = false;

  double svm_c1 = 1.0;

  double tml_svm_c1 = 1.0;
  double tml_svm_c2 = 1.0;
  double tml_svm_anchor_fraction = 0.30;
  int tml_svm_max_outer = 20;
  int tml_svm_inner_step_cap = 50;
  std::string tml_svm_kernel = "auto";

  double ktml_svm_sigma = 0.0;  // 0 = d_min heuristic
  int ktml_svm_rank = 100;

  int bench_runs = 10;
  int bench_folds = 3;
  int bench_grid_points = 7;       // points per single-parameter grid
  int bench_pair_grid_points = 3;  // per axis when two parameters are searched
  int bench_max_outer = 5;         // TML-SVM outer cap inside the protocol
  int bench_inner_step_cap = 50;
  int bench_kpca_rank = 30;

  static RunConfig from_file(const std::string& path);
  void apply_line(const std::string& key, const std::string& value);
};

KernelSpec kernel_from_name(const std::string& name, int dim, bool* from_dim);

// Table 1/2-style scoreboard emission.
std::string scoreboard_csv(const std::vector<std::string>& dataset_names,
                           const std::vector<ScoreBoard>& boards);
std::string scoreboard_text(const std::vector<std::string>& dataset_names,
                            const std::vector<ScoreBoard>& boards);

// 2-D deformation of a coordinate grid under a transform, as SVG polylines.
void write_deformation_grid_svg(const TpsTransform& transform,
                                const std::string& path, int lines = 21,
                                int samples_per_line = 60, double extent = 2.5);

// 17 significant digits, parse/print stable.
std::string format_double(double v);

}  // namespace tml
