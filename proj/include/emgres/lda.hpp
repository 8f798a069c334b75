#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "emgres/common.hpp"

namespace emgres {

// Linear discriminant analysis with a shared within-class covariance.
// The covariance is regularized by adding eps * mean(diag) to the diagonal
// so it is always invertible; scores are the class log-discriminants.
struct LdaModel {
  Eigen::MatrixXd means;     // K x d
  Eigen::MatrixXd cov_inv;   // d x d
  Eigen::VectorXd log_priors;
  int n_classes = 0;
};

inline LdaModel train_lda(const Eigen::MatrixXd& X, const std::vector<int>& y,
                          int n_classes, double eps = 1e-6) {
  const auto n = X.rows();
  const auto d = X.cols();
  require(n == static_cast<Eigen::Index>(y.size()), "label count mismatch");
  require(n_classes >= 2, "LDA needs at least 2 classes");
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(n_classes), 0);
  for (int c : y) {
    require(c >= 0 && c < n_classes, "label out of range");
    ++counts[static_cast<std::size_t>(c)];
  }
  int present = 0;
  for (auto c : counts) present += c > 0;
  if (present < 2) throw NumericError("LDA training data has a single class");

  LdaModel m;
  m.n_classes = n_classes;
  m.means.setZero(n_classes, d);
  for (Eigen::Index i = 0; i < n; ++i)
    m.means.row(y[static_cast<std::size_t>(i)]) += X.row(i);
  for (int k = 0; k < n_classes; ++k)
    if (counts[static_cast<std::size_t>(k)] > 0)
      m.means.row(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd r = X.row(i) - m.means.row(y[static_cast<std::size_t>(i)]);
    cov.noalias() += r.transpose() * r;
  }
  cov /= static_cast<double>(std::max<Eigen::Index>(1, n - present));
  const double ridge = eps * std::max(cov.diagonal().mean(), 1e-300);
  cov.diagonal().array() += ridge;
  m.cov_inv = cov.llt().solve(Eigen::MatrixXd::Identity(d, d));

  m.log_priors.setConstant(n_classes, -1e18);  // absent classes never win
  for (int k = 0; k < n_classes; ++k)
    if (counts[static_cast<std::size_t>(k)] > 0)
      m.log_priors(k) = std::log(static_cast<double>(counts[static_cast<std::size_t>(k)]) /
                                 static_cast<double>(n));
  return m;
}

// Per-class log-discriminants: x' S^-1 mu_k - mu_k' S^-1 mu_k / 2 + log pi_k.
inline Eigen::MatrixXd lda_scores(const LdaModel& m, const Eigen::MatrixXd& X) {
  const Eigen::MatrixXd w = m.cov_inv * m.means.transpose();  // d x K
  Eigen::MatrixXd scores = X * w;                             // n x K
  for (int k = 0; k < m.n_classes; ++k) {
    const double offset = -0.5 * m.means.row(k) * w.col(k) + m.log_priors(k);
    scores.col(k).array() += offset;
  }
  return scores;
}

inline std::vector<int> predict_from_scores(const Eigen::MatrixXd& scores) {
  std::vector<int> labels(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < scores.cols(); ++k)
      if (scores(i, k) > scores(i, best)) best = k;  // ties -> lowest index
    labels[static_cast<std::size_t>(i)] = best;
  }
  return labels;
}

inline std::vector<int> predict_lda(const LdaModel& m, const Eigen::MatrixXd& X) {
  return predict_from_scores(lda_scores(m, X));
}

}  // namespace emgres
