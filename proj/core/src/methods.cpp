#include "tml/methods.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "tml/kpca.hpp"
#include "tml/metric_nn.hpp"
#include "tml/svm.hpp"
#include "tml/tml_svm.hpp"

namespace tml {
namespace {

using Candidate =
    std::function<Predictor(const Matrix&, const std::vector<int>&, std::uint64_t)>;

std::vector<double> log_grid(double base, double lo_exp, double hi_exp, int points) {
  std::vector<double> out;
  if (points <= 1) {
    out.push_back(std::pow(base, 0.5 * (lo_exp + hi_exp)));
    return out;
  }
  for (int i = 0; i < points; ++i) {
    double e = lo_exp + (hi_exp - lo_exp) * i / (points - 1);
    out.push_back(std::pow(base, e));
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  std::vector<double> out;
  if (points <= 1) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  for (int i = 0; i < points; ++i)
    out.push_back(lo + (hi - lo) * i / (points - 1));
  return out;
}

Predictor knn_on(const Matrix& X, const std::vector<int>& labels, int k) {
  auto Xc = std::make_shared<Matrix>(X);
  auto yc = std::make_shared<std::vector<int>>(labels);
  return [Xc, yc, k](const Vector& q) { return knn_predict(*Xc, *yc, q, k); };
}

Predictor cv_then_train(const std::vector<Candidate>& candidates, const Matrix& X,
                        const std::vector<int>& labels, std::uint64_t seed) {
  std::size_t best = 0;
  if (candidates.size() > 1)
    best = select_by_cv(X, labels, candidates, 3, seed);
  return candidates[best](X, labels, seed);
}

TmlSvmConfig tml_svm_base(const RunConfig& rc) {
  TmlSvmConfig cfg;
  cfg.anchor_fraction = rc.tml_svm_anchor_fraction;
  cfg.max_outer = rc.bench_max_outer;
  cfg.inner_step_cap = rc.bench_inner_step_cap;
  cfg.kpca_rank = rc.bench_kpca_rank;
  return cfg;
}

}  // namespace

std::vector<std::string> known_methods() {
  return {"knn", "mmc-nn", "tml-nn", "l-svm", "r-svm", "tml-svm", "ktml-svm"};
}

MethodSpec make_method(const std::string& name, const RunConfig& rc) {
  const int k = rc.knn_k;

  if (name == "knn") {
    return {name, [k](const Matrix& X, const std::vector<int>& y, std::uint64_t) {
              return knn_on(X, y, k);
            }};
  }

  if (name == "mmc-nn") {
    MmcConfig mc{rc.mmc_step, rc.mmc_max_iter};
    std::size_t cap = rc.tml_nn_pair_cap;
    return {name,
            [k, mc, cap](const Matrix& X, const std::vector<int>& y, std::uint64_t seed) {
              PairSets pairs = build_pairs(y, cap, seed);
              MahalanobisMetric metric = mmc_train(X, pairs, mc);
              Eigen::SelfAdjointEigenSolver<Matrix> es(metric.M);
              Matrix L = es.operatorSqrt();
              auto Xt = std::make_shared<Matrix>(X * L.transpose());
              auto yc = std::make_shared<std::vector<int>>(y);
              auto Lp = std::make_shared<Matrix>(L);
              return Predictor([Xt, yc, Lp, k](const Vector& q) {
                return knn_predict(*Xt, *yc, *Lp * q, k);
              });
            }};
  }

  if (name == "tml-nn") {
    std::vector<Candidate> cands;
    for (double lambda : log_grid(5.0, -5, 25, rc.bench_grid_points)) {
      TmlNnConfig cfg;
      cfg.lambda = lambda;
      cfg.anchor_fraction = rc.tml_nn_anchor_fraction;
      cfg.pair_cap = rc.tml_nn_pair_cap;
      cfg.optimizer.max_outer = rc.bench_max_outer;
      cfg.optimizer.max_inner = 2 * rc.bench_inner_step_cap;
      int k2 = k;
      cands.push_back([cfg, k2](const Matrix& X, const std::vector<int>& y,
                                std::uint64_t seed) mutable {
        cfg.seed = seed;
        auto t = std::make_shared<TpsTransform>(tml_nn_train(X, y, cfg));
        auto Xt = std::make_shared<Matrix>(apply_transform_rows(*t, X));
        auto yc = std::make_shared<std::vector<int>>(y);
        return Predictor([t, Xt, yc, k2](const Vector& q) {
          return knn_predict(*Xt, *yc, apply_transform(*t, q), k2);
        });
      });
    }
    return {name, [cands](const Matrix& X, const std::vector<int>& y,
                          std::uint64_t seed) {
              return cv_then_train(cands, X, y, seed);
            }};
  }

  if (name == "l-svm") {
    std::vector<Candidate> cands;
    for (double c1 : log_grid(2.0, -5, 15, rc.bench_grid_points)) {
      cands.push_back([c1](const Matrix& X, const std::vector<int>& y, std::uint64_t) {
        auto bank = std::make_shared<OvoBank>(ovo_train(X, y, c1));
        return Predictor([bank](const Vector& q) { return ovo_predict(*bank, q); });
      });
    }
    return {name, [cands](const Matrix& X, const std::vector<int>& y,
                          std::uint64_t seed) {
              return cv_then_train(cands, X, y, seed);
            }};
  }

  if (name == "r-svm") {
    std::vector<Candidate> cands;
    Eigen::Index rank = rc.bench_kpca_rank;
    for (double mult : linear_grid(1, 20, rc.bench_pair_grid_points))
      for (double c1 : log_grid(2.0, -5, 15, rc.bench_pair_grid_points)) {
        cands.push_back([mult, c1, rank](const Matrix& X, const std::vector<int>& y,
                                         std::uint64_t) {
          double dmin = compute_dmin(X);
          if (dmin <= 0) dmin = 1e-6;
          auto map = std::make_shared<KpcaMap>(
              kpca_fit(X, mult * dmin, std::min<Eigen::Index>(rank, X.rows() - 1)));
          Matrix emb = kpca_training_embedding(*map);
          auto bank = std::make_shared<OvoBank>(ovo_train(emb, y, c1));
          return Predictor([map, bank](const Vector& q) {
            return ovo_predict(*bank, kpca_map(*map, q));
          });
        });
      }
    return {name, [cands](const Matrix& X, const std::vector<int>& y,
                          std::uint64_t seed) {
              return cv_then_train(cands, X, y, seed);
            }};
  }

  if (name == "tml-svm" || name == "ktml-svm") {
    bool kernelized = name == "ktml-svm";
    std::vector<Candidate> cands;
    auto add = [&](TmlSvmConfig cfg) {
      cands.push_back([cfg, kernelized](const Matrix& X, const std::vector<int>& y,
                                        std::uint64_t seed) mutable {
        cfg.seed = seed;
        auto model = std::make_shared<TmlSvmModel>(
            kernelized ? kernel_tml_svm_train(X, y, cfg) : tml_svm_train(X, y, cfg));
        return Predictor([model](const Vector& q) { return tml_svm_predict(*model, q); });
      });
    };
    if (kernelized) {
      for (double mult : linear_grid(1, 20, rc.bench_pair_grid_points))
        for (double c1 : log_grid(2.0, -5, 15, rc.bench_pair_grid_points)) {
          TmlSvmConfig cfg = tml_svm_base(rc);
          cfg.c1 = c1;
          cfg.c2 = 1.0;
          cfg.kpca_sigma = -mult;  // multiplier of d_min, resolved at fit time
          add(cfg);
        }
    } else {
      for (double c1 : log_grid(2.0, -5, 15, rc.bench_pair_grid_points))
        for (double c2 : log_grid(5.0, -5, 25, rc.bench_pair_grid_points)) {
          TmlSvmConfig cfg = tml_svm_base(rc);
          cfg.c1 = c1;
          cfg.c2 = c2;
          add(cfg);
        }
    }
    return {name, [cands](const Matrix& X, const std::vector<int>& y,
                          std::uint64_t seed) {
              return cv_then_train(cands, X, y, seed);
            }};
  }

  throw std::invalid_argument("unknown method: " + name);
}

}  // namespace tml
