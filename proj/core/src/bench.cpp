#include "tml/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

namespace tml {

int knn_predict(const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
                const Eigen::Ref<const Vector>& query, int k,
                const TpsTransform* transform) {
  const Eigen::Index n = X.rows();
  if (n == 0) throw std::invalid_argument("knn_predict: empty training set");
  if (k < 1 || k > n) throw std::invalid_argument("knn_predict: need 1 <= k <= n");

  Matrix Xt = transform ? apply_transform_rows(*transform, X) : Matrix(X);
  Vector q = transform ? apply_transform(*transform, query) : Vector(query);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    dist[static_cast<std::size_t>(i)] = (Xt.row(i) - q.transpose()).norm();
  // Stable sort on strictly-less keeps lower indices first on distance ties.
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
  });

  std::map<int, int> votes;
  for (int i = 0; i < k; ++i)
    ++votes[labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]];
  int best_class = 0, best_votes = -1;
  for (const auto& [cls, v] : votes) {
    if (v > best_votes) {
      best_votes = v;
      best_class = cls;
    }
  }
  return best_class;
}

Dataset make_circles(const SyntheticSpec& spec) {
  for (double r : spec.radii)
    if (r <= 0.0) throw std::invalid_argument("make_circles: radii must be positive");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  const int classes = static_cast<int>(spec.radii.size());
  ds.X.resize(classes * spec.samples_per_class, 2);
  Eigen::Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < spec.samples_per_class; ++i) {
      const double angle = 2.0 * M_PI * i / spec.samples_per_class;
      const double r = spec.radii[static_cast<std::size_t>(c)] +
                       spec.noise * gauss(rng);
      ds.X(row, 0) = r * std::cos(angle);
      ds.X(row, 1) = r * std::sin(angle);
      ds.labels.push_back(c);
      ++row;
    }
  }
  for (int c = 0; c < classes; ++c) ds.label_names.push_back(std::to_string(c));
  return ds;
}

Dataset make_blobs(const SyntheticSpec& spec) {
  if (spec.centers.rows() < 1)
    throw std::invalid_argument("make_blobs: need at least one center");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Dataset ds;
  const int classes = static_cast<int>(spec.centers.rows());
  ds.X.resize(classes * spec.samples_per_class, spec.centers.cols());
  Eigen::Index row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < spec.samples_per_class; ++i) {
      for (Eigen::Index j = 0; j < spec.centers.cols(); ++j)
        ds.X(row, j) = spec.centers(c, j) + spec.noise * gauss(rng);
      ds.labels.push_back(c);
      ++row;
    }
  }
  for (int c = 0; c < classes; ++c) ds.label_names.push_back(std::to_string(c));
  return ds;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  return spec.generator == SyntheticGenerator::CONCENTRIC_CIRCLES
             ? make_circles(spec)
             : make_blobs(spec);
}

std::vector<std::vector<Eigen::Index>> make_folds(const std::vector<int>& labels,
                                                  int folds, std::uint64_t seed,
                                                  bool stratified) {
  if (folds < 2) throw std::invalid_argument("make_folds: need at least 2 folds");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(folds));

  if (stratified) {
    std::map<int, std::vector<Eigen::Index>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i)
      by_class[labels[i]].push_back(static_cast<Eigen::Index>(i));
    int next_fold = 0;
    for (auto& [cls, idx] : by_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      for (Eigen::Index i : idx) {
        out[static_cast<std::size_t>(next_fold)].push_back(i);
        next_fold = (next_fold + 1) % folds;
      }
    }
  } else {
    std::vector<Eigen::Index> idx(labels.size());
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i)
      out[i % static_cast<std::size_t>(folds)].push_back(idx[i]);
  }
  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

namespace {

// Regularized incomplete beta function by continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_cdf(double t, double dof) {
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

TtestOutcome ttest_paired(const std::vector<double>& a,
                          const std::vector<double>& b, double alpha) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("ttest_paired: need equal lengths >= 2");
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);

  if (var == 0.0) {
    if (mean == 0.0) return TtestOutcome::TIE;
    return mean > 0.0 ? TtestOutcome::A_WINS : TtestOutcome::B_WINS;
  }
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  const double p = 2.0 * (1.0 - student_t_cdf(std::abs(t), static_cast<double>(n - 1)));
  if (p >= alpha) return TtestOutcome::TIE;
  return mean > 0.0 ? TtestOutcome::A_WINS : TtestOutcome::B_WINS;
}

double ScoreBoard::mean(std::size_t method) const {
  double total = 0.0;
  int count = 0;
  for (const auto& acc : accuracies[method])
    if (acc) {
      total += *acc;
      ++count;
    }
  return count ? total / count : 0.0;
}

double ScoreBoard::stddev(std::size_t method) const {
  const double m = mean(method);
  double total = 0.0;
  int count = 0;
  for (const auto& acc : accuracies[method])
    if (acc) {
      total += (*acc - m) * (*acc - m);
      ++count;
    }
  return count > 1 ? std::sqrt(total / (count - 1)) : 0.0;
}

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 step over master + index
  std::uint64_t z = master + index * 0x9e3779b97f4a7c15ULL + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct MinMaxScaler {
  Vector lo, range;
  void fit(const Eigen::Ref<const Matrix>& X) {
    lo = X.colwise().minCoeff();
    range = (X.colwise().maxCoeff().transpose() - lo).cwiseMax(1e-12);
  }
  Matrix apply(const Eigen::Ref<const Matrix>& X) const {
    return (X.rowwise() - lo.transpose()).array().rowwise() /
           range.transpose().array();
  }
};

}  // namespace

std::size_t select_by_cv(
    const Eigen::Ref<const Matrix>& X, const std::vector<int>& labels,
    const std::vector<std::function<Predictor(const Matrix&, const std::vector<int>&,
                                              std::uint64_t)>>& candidates,
    int folds, std::uint64_t seed) {
  if (candidates.empty())
    throw std::invalid_argument("select_by_cv: no candidates");
  if (candidates.size() == 1) return 0;
  const auto fold_idx = make_folds(labels, folds, seed, true);

  std::size_t best = 0;
  double best_acc = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    int correct = 0, total = 0;
    for (std::size_t f = 0; f < fold_idx.size(); ++f) {
      std::vector<Eigen::Index> train_rows;
      for (std::size_t g = 0; g < fold_idx.size(); ++g)
        if (g != f)
          train_rows.insert(train_rows.end(), fold_idx[g].begin(), fold_idx[g].end());
      Matrix Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
      std::vector<int> ytr;
      for (std::size_t i = 0; i < train_rows.size(); ++i) {
        Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
        ytr.push_back(labels[static_cast<std::size_t>(train_rows[i])]);
      }
      // A candidate that needs both classes may fail on a tiny fold;
      // count those validation points as misses.
      try {
        Predictor predict = candidates[c](Xtr, ytr, derive_seed(seed, c));
        for (Eigen::Index i : fold_idx[f]) {
          ++total;
          if (predict(X.row(i)) == labels[static_cast<std::size_t>(i)]) ++correct;
        }
      } catch (const std::exception&) {
        total += static_cast<int>(fold_idx[f].size());
      }
    }
    const double acc = total ? static_cast<double>(correct) / total : 0.0;
    if (acc > best_acc + 1e-12) {
      best_acc = acc;
      best = c;
    }
  }
  return best;
}

ScoreBoard run_protocol(const Dataset& dataset,
                        const std::vector<MethodSpec>& methods,
                        const SplitPlan& plan, int threads) {
  if (methods.empty()) throw std::invalid_argument("run_protocol: no methods");
  ScoreBoard board;
  for (const auto& m : methods) board.method_names.push_back(m.name);
  board.accuracies.assign(methods.size(),
                          std::vector<std::optional<double>>(
                              static_cast<std::size_t>(plan.runs)));
  board.points.assign(methods.size(), 0.0);
  std::vector<std::vector<std::string>> run_notes(
      static_cast<std::size_t>(plan.runs));

  auto run_one = [&](int r) {
    const std::uint64_t run_seed =
        derive_seed(plan.master_seed, static_cast<std::uint64_t>(r));
    const auto folds =
        make_folds(dataset.labels, plan.folds, run_seed, plan.stratified);
    // Fold 0 tests, the rest train.
    std::vector<Eigen::Index> train_rows;
    for (std::size_t f = 1; f < folds.size(); ++f)
      train_rows.insert(train_rows.end(), folds[f].begin(), folds[f].end());
    const auto& test_rows = folds[0];

    Matrix Xtr(static_cast<Eigen::Index>(train_rows.size()), dataset.X.cols());
    std::vector<int> ytr;
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      Xtr.row(static_cast<Eigen::Index>(i)) = dataset.X.row(train_rows[i]);
      ytr.push_back(dataset.labels[static_cast<std::size_t>(train_rows[i])]);
    }
    MinMaxScaler scaler;
    scaler.fit(Xtr);
    const Matrix Xtr_n = scaler.apply(Xtr);

    Matrix Xte(static_cast<Eigen::Index>(test_rows.size()), dataset.X.cols());
    for (std::size_t i = 0; i < test_rows.size(); ++i)
      Xte.row(static_cast<Eigen::Index>(i)) = dataset.X.row(test_rows[i]);
    const Matrix Xte_n = scaler.apply(Xte);

    for (std::size_t m = 0; m < methods.size(); ++m) {
      try {
        Predictor predict = methods[m].train(Xtr_n, ytr, run_seed);
        int correct = 0;
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
          const int truth = dataset.labels[static_cast<std::size_t>(test_rows[i])];
          if (predict(Xte_n.row(static_cast<Eigen::Index>(i))) == truth) ++correct;
        }
        board.accuracies[m][static_cast<std::size_t>(r)] =
            test_rows.empty() ? 0.0
                              : static_cast<double>(correct) / test_rows.size();
      } catch (const std::exception& e) {
        run_notes[static_cast<std::size_t>(r)].push_back(
            methods[m].name + " failed on run " + std::to_string(r) + ": " +
            e.what());
      }
    }
  };

  if (threads <= 1 || plan.runs <= 1) {
    for (int r = 0; r < plan.runs; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, plan.runs);
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int r = next.fetch_add(1); r < plan.runs; r = next.fetch_add(1))
          run_one(r);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& notes : run_notes)
    board.footnotes.insert(board.footnotes.end(), notes.begin(), notes.end());

  // Pairwise scoring: 1 point for a significant win, 0.5 for a tie. A
  // single run cannot support a t-test; every pair ties with a footnote.
  for (std::size_t a = 0; a < methods.size(); ++a) {
    for (std::size_t b = a + 1; b < methods.size(); ++b) {
      std::vector<double> sa, sb;
      for (int r = 0; r < plan.runs; ++r) {
        const auto& va = board.accuracies[a][static_cast<std::size_t>(r)];
        const auto& vb = board.accuracies[b][static_cast<std::size_t>(r)];
        if (va && vb) {
          sa.push_back(*va);
          sb.push_back(*vb);
        }
      }
      TtestOutcome outcome = TtestOutcome::TIE;
      if (sa.size() >= 2) {
        outcome = ttest_paired(sa, sb, 0.05);
      } else {
        board.footnotes.push_back("insufficient paired samples for " +
                                  methods[a].name + " vs " + methods[b].name +
                                  "; scored as tie");
      }
      switch (outcome) {
        case TtestOutcome::A_WINS: board.points[a] += 1.0; break;
        case TtestOutcome::B_WINS: board.points[b] += 1.0; break;
        case TtestOutcome::TIE:
          board.points[a] += 0.5;
          board.points[b] += 0.5;
          break;
      }
    }
  }
  return board;
}

}  // namespace tml
