// tpsml command line: train / predict / bench / synth / plot-grid.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "tml/bench.hpp"
#include "tml/io.hpp"
#include "tml/kpca.hpp"
#include "tml/methods.hpp"
#include "tml/metric_nn.hpp"
#include "tml/tml_svm.hpp"

using namespace tml;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDegenerate = 3;

RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return RunConfig::from_file(path);
}

int run_train(const std::string& data_path, const std::string& method,
              const std::string& config_path, const std::string& out_path) {
  RunConfig rc = load_config(config_path);
  Dataset ds = load_csv(data_path);
  const int d = static_cast<int>(ds.X.cols());

  PersistedModel model;
  model.label_names = ds.label_names;

  auto t0 = std::chrono::steady_clock::now();
  double objective = 0.0;
  int iterations = 0;

  if (method == "mmc") {
    model.kind = ModelKind::MMC;
    model.train_X = ds.X;
    model.train_labels = ds.labels;
    PairSets pairs = build_pairs(ds.labels, rc.tml_nn_pair_cap, rc.seed);
    model.metric = mmc_train(ds.X, pairs, {rc.mmc_step, rc.mmc_max_iter});
    for (auto [i, j] : pairs.equivalent) {
      Vector diff = ds.X.row(i) - ds.X.row(j);
      objective += diff.dot(model.metric->M * diff);
    }
    iterations = rc.mmc_max_iter;
  } else if (method == "tml-nn") {
    model.kind = ModelKind::TML_NN;
    model.train_X = ds.X;
    model.train_labels = ds.labels;
    TmlNnConfig cfg;
    cfg.lambda = rc.tml_nn_lambda;
    cfg.anchor_fraction = rc.tml_nn_anchor_fraction;
    cfg.pair_cap = rc.tml_nn_pair_cap;
    cfg.kernel = kernel_from_name(rc.tml_nn_kernel, d, &cfg.kernel_from_dim);
    cfg.full_side_conditions = rc.tml_nn_full_side_conditions;
    cfg.seed = rc.seed;
    model.transform = tml_nn_train(ds.X, ds.labels, cfg);
    PairSets pairs = build_pairs(ds.labels, cfg.pair_cap, cfg.seed);
    SideConditionBasis basis =
        build_side_basis(model.transform->anchors, cfg.full_side_conditions);
    objective =
        tml_nn_objective(*model.transform, basis, ds.X, pairs, cfg.lambda).first;
  } else if (method == "tml-svm" || method == "ktml-svm") {
    model.kind =
        method == "tml-svm" ? ModelKind::TML_SVM : ModelKind::KERNEL_TML_SVM;
    TmlSvmConfig cfg;
    cfg.c1 = rc.tml_svm_c1;
    cfg.c2 = rc.tml_svm_c2;
    cfg.anchor_fraction = rc.tml_svm_anchor_fraction;
    cfg.max_outer = rc.tml_svm_max_outer;
    cfg.inner_step_cap = rc.tml_svm_inner_step_cap;
    cfg.kernel = kernel_from_name(rc.tml_svm_kernel, d, &cfg.kernel_from_dim);
    cfg.seed = rc.seed;
    cfg.kpca_sigma = rc.ktml_svm_sigma;
    cfg.kpca_rank = rc.ktml_svm_rank;
    model.svm = model.kind == ModelKind::TML_SVM
                    ? tml_svm_train(ds.X, ds.labels, cfg)
                    : kernel_tml_svm_train(ds.X, ds.labels, cfg);
    for (const auto& pm : model.svm->pairs) {
      if (!pm.report.objective_trace.empty())
        objective += pm.report.objective_trace.back();
      iterations += pm.report.outer_iterations;
    }
  } else {
    std::cerr << "unknown method '" << method
              << "' (expected mmc | tml-nn | tml-svm | ktml-svm)\n";
    return kExitUsage;
  }

  save_model(model, out_path);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                              t0)
                    .count();
  std::printf("trained %s: objective %.6g, iterations %d, %.2f s -> %s\n",
              method.c_str(), objective, iterations, secs, out_path.c_str());
  return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
  PersistedModel model = load_model(model_path);
  Dataset ds = load_csv(data_path);

  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot write " + out_path);
  os << "prediction\n";
  int correct = 0;
  bool labeled = !ds.label_names.empty();
  for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
    int pred = model.predict(Vector(ds.X.row(i)));
    const std::string& name = pred < static_cast<int>(model.label_names.size())
                                  ? model.label_names[pred]
                                  : std::to_string(pred);
    os << name << "\n";
    if (labeled && ds.label_names[ds.labels[i]] == name) ++correct;
  }
  std::printf("wrote %lld predictions -> %s\n",
              static_cast<long long>(ds.X.rows()), out_path.c_str());
  if (labeled)
    std::printf("accuracy %.4f\n",
                static_cast<double>(correct) / static_cast<double>(ds.X.rows()));
  return 0;
}

int run_bench(const std::vector<std::string>& data_paths,
              const std::vector<std::string>& method_names,
              const std::string& config_path, int runs, std::uint64_t seed,
              int threads, const std::string& out_table) {
  RunConfig rc = load_config(config_path);
  if (runs > 0) rc.bench_runs = runs;
  std::vector<MethodSpec> methods;
  for (const auto& name : method_names) methods.push_back(make_method(name, rc));

  SplitPlan plan;
  plan.runs = rc.bench_runs;
  plan.folds = rc.bench_folds;
  plan.master_seed = seed;

  std::vector<std::string> names;
  std::vector<ScoreBoard> boards;
  for (const auto& path : data_paths) {
    Dataset ds = load_csv(path);
    std::string name = path;
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    names.push_back(name);
    boards.push_back(run_protocol(ds, methods, plan, threads));
  }

  std::string text = scoreboard_text(names, boards);
  std::cout << text;
  if (!out_table.empty()) {
    std::ofstream os(out_table);
    os << scoreboard_csv(names, boards);
    std::printf("wrote %s\n", out_table.c_str());
  }
  return 0;
}

int run_synth(const std::string& generator, int n, double noise,
              std::uint64_t seed, const std::string& out_path) {
  SyntheticSpec spec;
  if (generator == "circles") {
    spec.generator = SyntheticGenerator::CONCENTRIC_CIRCLES;
  } else if (generator == "blobs") {
    spec.generator = SyntheticGenerator::BLOBS;
    spec.centers = Matrix(2, 2);
    spec.centers << 0, 0, 4, 4;
  } else {
    std::cerr << "unknown generator '" << generator << "'\n";
    return kExitUsage;
  }
  spec.samples_per_class = n / 2;
  spec.noise = noise;
  spec.seed = seed;
  Dataset ds = make_synthetic(spec);
  save_csv(ds, out_path);
  std::printf("wrote %lld samples -> %s\n", static_cast<long long>(ds.X.rows()),
              out_path.c_str());
  return 0;
}

int run_plot_grid(const std::string& model_path, const std::string& out_svg) {
  PersistedModel model = load_model(model_path);
  const TpsTransform* t = nullptr;
  if (model.transform) t = &*model.transform;
  if (!t && model.svm && !model.svm->pairs.empty())
    t = &model.svm->pairs.front().transform;
  if (!t) {
    std::cerr << "model carries no transform to plot\n";
    return kExitUsage;
  }
  if (t->dim() != 2) {
    std::cerr << "plot-grid requires a 2-dimensional transform, got d="
              << t->dim() << "\n";
    return kExitUsage;
  }
  write_deformation_grid_svg(*t, out_svg);
  std::printf("wrote %s\n", out_svg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thin-plate-spline metric learning toolkit"};
  app.require_subcommand(1);

  std::string data_path, method, config_path, out_path, model_path;
  std::vector<std::string> data_paths, method_names;
  std::string generator = "circles";
  int n = 200, runs = 0, threads = 1;
  double noise = 0.05;
  std::uint64_t seed = 0;
  std::string out_table, out_svg;

  auto* train = app.add_subcommand("train", "train a model");
  train->add_option("--data", data_path)->required();
  train->add_option("--method", method)->required();
  train->add_option("--config", config_path);
  train->add_option("--out", out_path)->required();

  auto* predict = app.add_subcommand("predict", "predict with a saved model");
  predict->add_option("--model", model_path)->required();
  predict->add_option("--data", data_path)->required();
  predict->add_option("--out", out_path)->required();

  auto* bench = app.add_subcommand("bench", "run the evaluation protocol");
  bench->add_option("--data", data_paths)->required();
  bench->add_option("--methods", method_names)->required();
  bench->add_option("--config", config_path);
  bench->add_option("--runs", runs);
  bench->add_option("--seed", seed);
  bench->add_option("--threads", threads);
  bench->add_option("--out-table", out_table);

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--generator", generator);
  synth->add_option("--n", n);
  synth->add_option("--noise", noise);
  synth->add_option("--seed", seed);
  synth->add_option("--out", out_path)->required();

  auto* plot = app.add_subcommand("plot-grid", "render a deformation grid");
  plot->add_option("--model", model_path)->required();
  plot->add_option("--out-svg", out_svg)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitUsage : 0;
  }

  try {
    if (*train) return run_train(data_path, method, config_path, out_path);
    if (*predict) return run_predict(model_path, data_path, out_path);
    if (*bench)
      return run_bench(data_paths, method_names, config_path, runs, seed,
                       threads, out_table);
    if (*synth) return run_synth(generator, n, noise, seed, out_path);
    if (*plot) return run_plot_grid(model_path, out_svg);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "training error: " << e.what() << "\n";
    return kExitDegenerate;
  }
  return kExitUsage;
}
