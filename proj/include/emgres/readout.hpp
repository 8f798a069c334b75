#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "emgres/common.hpp"
#include "emgres/dataio.hpp"
#include "emgres/lda.hpp"
#include "emgres/metrics.hpp"
#include "emgres/svm.hpp"

namespace emgres {

enum class ClassifierKind { Lda, Svm };

inline ClassifierKind classifier_from_string(const std::string& s) {
  if (s == "lda") return ClassifierKind::Lda;
  if (s == "svm") return ClassifierKind::Svm;
  throw ConfigError("unknown classifier: " + s + " (want lda or svm)");
}

// Windowed firing-rate rows with labels and (trial, session) groups.
struct FeatureMatrix {
  Eigen::MatrixXd X;  // n_windows x n_features, Hz
  std::vector<int> labels;
  std::vector<int> trial_ids;
  std::vector<int> sessions;

  Eigen::Index n_rows() const { return X.rows(); }

  void append_rows(const std::vector<std::vector<double>>& rows, int label,
                   int trial_id, int session) {
    if (rows.empty()) return;
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    const auto old_n = X.rows();
    if (old_n == 0)
      X.resize(static_cast<Eigen::Index>(rows.size()), d);
    else {
      require(X.cols() == d, "feature width mismatch");
      X.conservativeResize(old_n + static_cast<Eigen::Index>(rows.size()), d);
    }
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        X(old_n + static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    for (std::size_t r = 0; r < rows.size(); ++r) {
      labels.push_back(label);
      trial_ids.push_back(trial_id);
      sessions.push_back(session);
    }
  }

  FeatureMatrix select(const std::vector<Eigen::Index>& idx) const {
    FeatureMatrix out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      out.X.row(static_cast<Eigen::Index>(k)) = X.row(idx[k]);
      out.labels.push_back(labels[static_cast<std::size_t>(idx[k])]);
      out.trial_ids.push_back(trial_ids[static_cast<std::size_t>(idx[k])]);
      out.sessions.push_back(sessions[static_cast<std::size_t>(idx[k])]);
    }
    return out;
  }
};

// Non-overlapping consecutive windows; rate = count / window. The trailing
// partial window is discarded.
inline std::vector<std::vector<double>> extract_rate_vectors(
    const SpikeTrains& trains, double window_ms = 200.0) {
  require(window_ms > 0, "window must be positive");
  const double window_s = window_ms / 1000.0;
  const auto n_windows = static_cast<std::size_t>(
      std::floor(trains.duration_s / window_s + 1e-9));
  if (n_windows == 0)
    throw DataError("stream shorter than one readout window");
  std::vector<std::vector<double>> rows(
      n_windows, std::vector<double>(trains.n_channels(), 0.0));
  for (std::size_t c = 0; c < trains.n_channels(); ++c)
    for (double t : trains.channels[c]) {
      const auto w = static_cast<std::size_t>(std::floor(t / window_s));
      if (w < n_windows) rows[w][c] += 1.0;
    }
  for (auto& row : rows)
    for (double& v : row) v /= window_s;
  return rows;
}

struct FoldResult {
  double window_accuracy = 0.0;
  double trial_accuracy = 0.0;  // majority vote per trial, ties -> lowest class
  std::vector<int> y_true, y_pred;  // window level
  std::vector<int> trial_ids, sessions;
  Eigen::MatrixXd scores;  // window level, n x K
};

// Trains on one feature matrix, evaluates on another. Features are
// z-scored with training statistics: rate vectors live on wildly
// different scales (tens to hundreds of Hz) and the RBF kernel needs
// unit-ish coordinates to resolve anything.
inline FoldResult evaluate_fold(const FeatureMatrix& train,
                                const FeatureMatrix& test, int n_classes,
                                ClassifierKind kind,
                                const SvmParams& svm_params = {}) {
  require(train.n_rows() > 0, "empty training partition");
  if (test.n_rows() == 0) throw DataError("empty test partition in fold");
  const Eigen::RowVectorXd mu = train.X.colwise().mean();
  Eigen::RowVectorXd sigma =
      ((train.X.rowwise() - mu).array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < sigma.size(); ++c)
    if (sigma(c) < 1e-12) sigma(c) = 1.0;  // constant feature: center only
  const Eigen::MatrixXd Xtr =
      (train.X.rowwise() - mu).array().rowwise() / sigma.array();
  const Eigen::MatrixXd Xte =
      (test.X.rowwise() - mu).array().rowwise() / sigma.array();
  FoldResult res;
  if (kind == ClassifierKind::Lda) {
    const LdaModel m = train_lda(Xtr, train.labels, n_classes);
    res.scores = lda_scores(m, Xte);
    res.y_pred = predict_from_scores(res.scores);
  } else {
    const SvmModel m = train_svm(Xtr, train.labels, n_classes, svm_params);
    SvmPrediction p = predict_svm(m, Xte);
    res.scores = std::move(p.scores);
    res.y_pred = std::move(p.labels);
  }
  res.y_true = test.labels;
  res.trial_ids = test.trial_ids;
  res.sessions = test.sessions;
  res.window_accuracy = accuracy(res.y_true, res.y_pred);

  // per-trial majority vote
  std::map<std::pair<int, int>, std::pair<int, std::vector<int>>> by_trial;
  for (std::size_t i = 0; i < res.y_true.size(); ++i) {
    auto& entry = by_trial[{res.sessions[i], res.trial_ids[i]}];
    entry.first = res.y_true[i];
    entry.second.resize(static_cast<std::size_t>(n_classes), 0);
    ++entry.second[static_cast<std::size_t>(res.y_pred[i])];
  }
  std::size_t hits = 0;
  for (const auto& [key, entry] : by_trial) {
    int best = 0;
    for (int k = 1; k < n_classes; ++k)
      if (entry.second[static_cast<std::size_t>(k)] >
          entry.second[static_cast<std::size_t>(best)])
        best = k;
    hits += best == entry.first;
  }
  res.trial_accuracy = static_cast<double>(hits) / static_cast<double>(by_trial.size());
  return res;
}

struct EvalReport {
  std::vector<double> fold_accuracies;  // window level
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // population std over the fold accuracies
  std::vector<double> trial_fold_accuracies;
  double trial_mean_accuracy = 0.0;
  double trial_std_accuracy = 0.0;
  std::vector<std::vector<int>> confusion;  // pooled over folds
  std::vector<double> per_class_auc;        // -1 when undefined
  double macro_auc = 0.0;
  double micro_auc = 0.0;
  // pooled per-window predictions: (fold, session, trial, true, pred)
  std::vector<std::array<int, 5>> predictions;
};

inline std::pair<double, double> mean_population_std(const std::vector<double>& v) {
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

// Aggregates per-fold results into a report: mean +/- population std of
// fold accuracies, pooled confusion matrix, AUCs from pooled scores.
inline EvalReport aggregate_folds(const std::vector<FoldResult>& folds,
                                  int n_classes) {
  require(!folds.empty(), "no folds to aggregate");
  EvalReport rep;
  std::vector<int> all_true, all_pred;
  std::vector<Eigen::Index> score_rows;
  Eigen::MatrixXd all_scores(0, n_classes);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& r = folds[f];
    rep.fold_accuracies.push_back(r.window_accuracy);
    rep.trial_fold_accuracies.push_back(r.trial_accuracy);
    const auto old_n = all_scores.rows();
    all_scores.conservativeResize(old_n + r.scores.rows(), n_classes);
    all_scores.bottomRows(r.scores.rows()) = r.scores;
    for (std::size_t i = 0; i < r.y_true.size(); ++i) {
      all_true.push_back(r.y_true[i]);
      all_pred.push_back(r.y_pred[i]);
      rep.predictions.push_back({static_cast<int>(f), r.sessions[i],
                                 r.trial_ids[i], r.y_true[i], r.y_pred[i]});
    }
  }
  std::tie(rep.mean_accuracy, rep.std_accuracy) =
      mean_population_std(rep.fold_accuracies);
  std::tie(rep.trial_mean_accuracy, rep.trial_std_accuracy) =
      mean_population_std(rep.trial_fold_accuracies);
  rep.confusion = confusion_matrix(all_true, all_pred, n_classes);
  const AucReport auc = roc_auc(all_scores, all_true);
  for (const auto& a : auc.per_class)
    rep.per_class_auc.push_back(a ? *a : -1.0);
  rep.macro_auc = auc.macro;
  rep.micro_auc = auc.micro;
  return rep;
}

// Session-wise cross-validation over a single feature matrix. Fold f
// trains on rows whose session is in the fold's train set and tests on
// the held-out session's rows.
inline EvalReport cross_validate(const FeatureMatrix& fm, const FoldPlan& plan,
                                 int n_classes, ClassifierKind kind,
                                 const SvmParams& svm_params = {}) {
  std::vector<FoldResult> results;
  for (const auto& fold : plan.folds) {
    std::vector<Eigen::Index> train_idx, test_idx;
    for (std::size_t i = 0; i < fm.sessions.size(); ++i) {
      if (fm.sessions[i] == fold.test_session)
        test_idx.push_back(static_cast<Eigen::Index>(i));
      else if (std::find(fold.train_sessions.begin(), fold.train_sessions.end(),
                         fm.sessions[i]) != fold.train_sessions.end())
        train_idx.push_back(static_cast<Eigen::Index>(i));
    }
    if (test_idx.empty()) throw DataError("fold has an empty test partition");
    results.push_back(evaluate_fold(fm.select(train_idx), fm.select(test_idx),
                                    n_classes, kind, svm_params));
  }
  return aggregate_folds(results, n_classes);
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["fold_accuracies"] = r.fold_accuracies;
  j["mean_accuracy"] = r.mean_accuracy;
  j["std_accuracy"] = r.std_accuracy;
  j["trial_fold_accuracies"] = r.trial_fold_accuracies;
  j["trial_mean_accuracy"] = r.trial_mean_accuracy;
  j["trial_std_accuracy"] = r.trial_std_accuracy;
  j["confusion"] = r.confusion;
  j["per_class_auc"] = r.per_class_auc;
  j["macro_auc"] = r.macro_auc;
  j["micro_auc"] = r.micro_auc;
  return j;
}

}  // namespace emgres
