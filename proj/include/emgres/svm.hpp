#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <vector>

#include "emgres/common.hpp"

namespace emgres {

struct SvmParams {
  double C = 1.0;
  double gamma = 0.0;  // <= 0 means 1 / n_features
  double tol = 1e-3;   // KKT tolerance
  std::size_t max_iter = 20'000'000;
  std::size_t cache_rows = 4096;  // bounded kernel row cache

  double effective_gamma(Eigen::Index n_features) const {
    return gamma > 0 ? gamma : 1.0 / static_cast<double>(n_features);
  }
};

// RBF kernel rows computed on demand with a bounded FIFO row cache.
// Reservoir feature matrices reach 2048 columns and tens of thousands of
// rows, so full Gram precomputation is not always affordable.
class RbfKernelCache {
 public:
  RbfKernelCache(const Eigen::MatrixXd& X, double gamma, std::size_t max_rows)
      : X_(X), gamma_(gamma), max_rows_(std::max<std::size_t>(2, max_rows)) {
    sq_norms_ = X.rowwise().squaredNorm();
  }

  const Eigen::VectorXd& row(Eigen::Index i) {
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second;
    Eigen::VectorXd r =
        (-(gamma_ *
           (sq_norms_.array() + sq_norms_(i) - 2.0 * (X_ * X_.row(i).transpose()).array())))
            .exp();
    if (cache_.size() >= max_rows_) {
      cache_.erase(order_.front());
      order_.pop_front();
    }
    order_.push_back(i);
    return cache_.emplace(i, std::move(r)).first->second;
  }

  double gamma() const { return gamma_; }

 private:
  const Eigen::MatrixXd& X_;
  double gamma_;
  std::size_t max_rows_;
  Eigen::VectorXd sq_norms_;
  std::unordered_map<Eigen::Index, Eigen::VectorXd> cache_;
  std::deque<Eigen::Index> order_;
};

inline double rbf_kernel(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                         double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

// One binary subproblem trained by SMO with maximal-violating-pair working
// set selection. Labels are +1 / -1; the decision value is
// f(x) = sum_i coef_i k(sv_i, x) - bias.
struct BinarySvm {
  int class_pos = 0;  // label +1
  int class_neg = 0;  // label -1
  Eigen::MatrixXd support_vectors;
  Eigen::VectorXd coef;  // alpha_i * y_i, in (0, C] * y
  double bias = 0.0;
  double kkt_violation = 0.0;  // at termination
  std::size_t iterations = 0;

  double decision(const Eigen::RowVectorXd& x, double gamma) const {
    double f = -bias;
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
      f += coef(i) * rbf_kernel(support_vectors.row(i), x, gamma);
    return f;
  }
};

// SMO on a +1/-1 problem over the rows of X. F_i caches f(x_i) - y_i
// without the bias term; optimality is reached when the maximal KKT
// violating pair satisfies b_low <= b_up + 2 tol.
inline BinarySvm train_binary_svm(const Eigen::MatrixXd& X,
                                  const std::vector<double>& y,
                                  const SvmParams& p) {
  const auto n = X.rows();
  require(n >= 2, "binary SVM needs at least 2 rows");
  require(X.allFinite(), "SVM features must be finite");
  const double gamma = p.effective_gamma(X.cols());
  const double C = p.C;
  RbfKernelCache kernel(X, gamma, p.cache_rows);

  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  Eigen::VectorXd F(n);
  for (Eigen::Index i = 0; i < n; ++i) F(i) = -y[static_cast<std::size_t>(i)];

  // alphas within snap of a bound count as at the bound; otherwise a value
  // like C - 1e-16 passes the set test but leaves no room to move and the
  // maximal pair stalls
  const double snap = 1e-12 * C;
  const auto in_up = [&](Eigen::Index i) {
    const double yi = y[static_cast<std::size_t>(i)];
    const double a = alpha[static_cast<std::size_t>(i)];
    return (yi > 0 && a < C - snap) || (yi < 0 && a > snap);
  };
  const auto in_low = [&](Eigen::Index i) {
    const double yi = y[static_cast<std::size_t>(i)];
    const double a = alpha[static_cast<std::size_t>(i)];
    return (yi > 0 && a > snap) || (yi < 0 && a < C - snap);
  };

  double b_up = 0, b_low = 0;
  std::size_t iter = 0;
  for (; iter < p.max_iter; ++iter) {
    Eigen::Index i_up = -1, i_low = -1;
    b_up = std::numeric_limits<double>::infinity();
    b_low = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_up(i) && F(i) < b_up) {
        b_up = F(i);
        i_up = i;
      }
      if (in_low(i) && F(i) > b_low) {
        b_low = F(i);
        i_low = i;
      }
    }
    if (i_up < 0 || i_low < 0 || b_low - b_up <= 2.0 * p.tol) break;

    const Eigen::Index i1 = i_low, i2 = i_up;
    const double y1 = y[static_cast<std::size_t>(i1)];
    const double y2 = y[static_cast<std::size_t>(i2)];
    const double a1_old = alpha[static_cast<std::size_t>(i1)];
    const double a2_old = alpha[static_cast<std::size_t>(i2)];
    const double s = y1 * y2;
    double L, H;
    if (s < 0) {
      L = std::max(0.0, a2_old - a1_old);
      H = std::min(C, C + a2_old - a1_old);
    } else {
      L = std::max(0.0, a1_old + a2_old - C);
      H = std::min(C, a1_old + a2_old);
    }
    if (H <= L) break;  // degenerate pair; maximal pair means no progress possible

    const Eigen::VectorXd& K1 = kernel.row(i1);
    const double k11 = K1(i1), k12 = K1(i2);
    const Eigen::VectorXd& K2 = kernel.row(i2);
    const double k22 = K2(i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > 1e-15) {
      a2_new = a2_old + y2 * (F(i1) - F(i2)) / eta;
      a2_new = std::clamp(a2_new, L, H);
    } else {
      // flat direction: move to the bound that lowers the objective
      a2_new = (y2 * (F(i1) - F(i2)) > 0) ? H : L;
    }
    if (std::abs(a2_new - a2_old) < 1e-14) break;
    if (a2_new < snap) a2_new = 0.0;
    if (a2_new > C - snap) a2_new = C;
    double a1_new = a1_old + s * (a2_old - a2_new);
    if (a1_new < snap) a1_new = 0.0;
    if (a1_new > C - snap) a1_new = C;
    alpha[static_cast<std::size_t>(i1)] = a1_new;
    alpha[static_cast<std::size_t>(i2)] = a2_new;
    // two statements: a row fetch may evict the other row from the cache
    F += y1 * (a1_new - a1_old) * kernel.row(i1);
    F += y2 * (a2_new - a2_old) * kernel.row(i2);
  }

  BinarySvm model;
  model.iterations = iter;
  model.kkt_violation = std::max(0.0, (b_low - b_up) / 2.0);
  model.bias = (b_up + b_low) / 2.0;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (alpha[static_cast<std::size_t>(i)] > 0) sv.push_back(i);
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  model.coef.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k = 0; k < sv.size(); ++k) {
    model.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
    model.coef(static_cast<Eigen::Index>(k)) =
        alpha[static_cast<std::size_t>(sv[k])] * y[static_cast<std::size_t>(sv[k])];
  }
  return model;
}

// One-vs-one multiclass RBF SVM. Prediction is by vote (ties -> lowest
// class index); per-class scores aggregate signed decision values
// one-vs-rest for ROC curves.
struct SvmModel {
  int n_classes = 0;
  double gamma = 0.0;
  std::vector<BinarySvm> binaries;

  double max_kkt_violation() const {
    double v = 0.0;
    for (const auto& b : binaries) v = std::max(v, b.kkt_violation);
    return v;
  }
};

inline SvmModel train_svm(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          int n_classes, const SvmParams& p = {}) {
  require(X.rows() == static_cast<Eigen::Index>(y.size()), "label count mismatch");
  require(n_classes >= 2, "SVM needs at least 2 classes");
  require(X.allFinite(), "SVM features must be finite");
  SvmModel model;
  model.n_classes = n_classes;
  model.gamma = p.effective_gamma(X.cols());
  for (int a = 0; a < n_classes; ++a)
    for (int b = a + 1; b < n_classes; ++b) {
      std::vector<Eigen::Index> rows;
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (y[static_cast<std::size_t>(i)] == a || y[static_cast<std::size_t>(i)] == b)
          rows.push_back(i);
      if (rows.empty()) continue;
      bool has_a = false, has_b = false;
      Eigen::MatrixXd Xs(static_cast<Eigen::Index>(rows.size()), X.cols());
      std::vector<double> ys(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        Xs.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
        const bool is_a = y[static_cast<std::size_t>(rows[k])] == a;
        ys[k] = is_a ? 1.0 : -1.0;
        (is_a ? has_a : has_b) = true;
      }
      if (!has_a || !has_b) continue;
      SvmParams pb = p;
      pb.gamma = model.gamma;  // gamma from the full feature count
      BinarySvm bin = train_binary_svm(Xs, ys, pb);
      bin.class_pos = a;
      bin.class_neg = b;
      model.binaries.push_back(std::move(bin));
    }
  if (model.binaries.empty())
    throw NumericError("SVM training data has a single class");
  return model;
}

struct SvmPrediction {
  std::vector<int> labels;
  Eigen::MatrixXd scores;  // n x K, one-vs-rest aggregated decision values
};

inline SvmPrediction predict_svm(const SvmModel& m, const Eigen::MatrixXd& X) {
  require(X.allFinite(), "SVM features must be finite");
  const auto n = X.rows();
  SvmPrediction out;
  out.scores.setZero(n, m.n_classes);
  Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(n, m.n_classes);
  for (const auto& bin : m.binaries) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = bin.decision(X.row(i), m.gamma);
      out.scores(i, bin.class_pos) += d;
      out.scores(i, bin.class_neg) -= d;
      ++votes(i, d >= 0 ? bin.class_pos : bin.class_neg);
    }
  }
  out.labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    for (int k = 1; k < m.n_classes; ++k)
      if (votes(i, k) > votes(i, best)) best = k;
    out.labels[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace emgres
