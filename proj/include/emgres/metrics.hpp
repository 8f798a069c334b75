#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "emgres/common.hpp"

namespace emgres {

inline std::vector<std::vector<int>> confusion_matrix(
    const std::vector<int>& y_true, const std::vector<int>& y_pred,
    int n_classes) {
  require(y_true.size() == y_pred.size(), "prediction count mismatch");
  std::vector<std::vector<int>> cm(static_cast<std::size_t>(n_classes),
                                   std::vector<int>(static_cast<std::size_t>(n_classes), 0));
  for (std::size_t i = 0; i < y_true.size(); ++i)
    ++cm[static_cast<std::size_t>(y_true[i])][static_cast<std::size_t>(y_pred[i])];
  return cm;
}

inline double accuracy(const std::vector<int>& y_true,
                       const std::vector<int>& y_pred) {
  require(!y_true.empty() && y_true.size() == y_pred.size(),
          "prediction count mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

// Binary AUC by the rank statistic with midranks for tied scores.
// Equals P(score_pos > score_neg) + P(tie)/2.
inline double binary_auc(const std::vector<double>& scores,
                         const std::vector<int>& positive) {
  require(scores.size() == positive.size(), "AUC input size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  double r = 1.0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
    const double mid = 0.5 * (r + r + static_cast<double>(j - i));
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    r += static_cast<double>(j - i) + 1.0;
    i = j + 1;
  }
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (positive[k]) {
      rank_sum += rank[k];
      ++n_pos;
    }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw NumericError("AUC undefined: need at least one positive and one negative");
  return (rank_sum - 0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0)) /
         (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// ROC curve points (fpr, tpr) for one class, sorted by descending
// threshold. For plotting; the AUC itself uses the rank statistic.
inline std::vector<std::pair<double, double>> roc_points(
    const std::vector<double>& scores, const std::vector<int>& positive) {
  require(scores.size() == positive.size(), "ROC input size mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double n_pos = 0, n_neg = 0;
  for (int p : positive) (p ? n_pos : n_neg) += 1.0;
  if (n_pos == 0 || n_neg == 0)
    throw NumericError("ROC undefined: need at least one positive and one negative");
  std::vector<std::pair<double, double>> pts{{0.0, 0.0}};
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    (positive[idx[k]] ? tp : fp) += 1.0;
    const bool tie_next =
        k + 1 < idx.size() && scores[idx[k + 1]] == scores[idx[k]];
    if (!tie_next) pts.emplace_back(fp / n_neg, tp / n_pos);
  }
  return pts;
}

struct AucReport {
  std::vector<std::optional<double>> per_class;  // nullopt when undefined
  double macro = 0.0;
  double micro = 0.0;
  std::vector<int> skipped_classes;
};

// One-vs-rest AUC per class; macro = unweighted mean over defined classes,
// micro = AUC over the pooled (score, indicator) pairs.
inline AucReport roc_auc(const Eigen::MatrixXd& scores,
                         const std::vector<int>& labels) {
  const int K = static_cast<int>(scores.cols());
  require(scores.rows() == static_cast<Eigen::Index>(labels.size()),
          "AUC label count mismatch");
  AucReport rep;
  rep.per_class.resize(static_cast<std::size_t>(K));
  std::vector<double> pooled_scores;
  std::vector<int> pooled_pos;
  double macro_sum = 0.0;
  int macro_n = 0;
  for (int k = 0; k < K; ++k) {
    std::vector<double> s(labels.size());
    std::vector<int> pos(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = scores(static_cast<Eigen::Index>(i), k);
      pos[i] = labels[i] == k;
      pooled_scores.push_back(s[i]);
      pooled_pos.push_back(pos[i]);
    }
    try {
      const double a = binary_auc(s, pos);
      rep.per_class[static_cast<std::size_t>(k)] = a;
      macro_sum += a;
      ++macro_n;
    } catch (const NumericError&) {
      rep.skipped_classes.push_back(k);
    }
  }
  if (macro_n == 0) throw NumericError("AUC undefined for every class");
  rep.macro = macro_sum / macro_n;
  rep.micro = binary_auc(pooled_scores, pooled_pos);
  return rep;
}

}  // namespace emgres
