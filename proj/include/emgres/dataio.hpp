#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "emgres/common.hpp"

namespace emgres {

inline constexpr int kEmgChannels = 8;
inline constexpr double kEmgSampleRateHz = 200.0;

// One multichannel recording: rows are samples, columns are channels.
struct Trial {
  Eigen::MatrixXd samples;  // n_samples x n_channels, volts
  double sample_rate_hz = kEmgSampleRateHz;
  int gesture = 0;
  int subject_id = 0;
  int session_id = 0;
  int trial_id = 0;

  double duration_s() const {
    return static_cast<double>(samples.rows()) / sample_rate_hz;
  }

  void validate() const {
    require(samples.rows() >= 2, "trial needs at least 2 samples");
    require(samples.allFinite(), "trial contains non-finite samples");
    require(sample_rate_hz > 0, "sample rate must be positive");
  }
};

struct TrialSet {
  std::vector<Trial> trials;
  std::vector<std::string> class_names;
  std::string dataset_tag;  // roshambo | sensorfusion | synthetic

  void validate() const {
    for (const auto& t : trials) {
      t.validate();
      require(t.gesture >= 0 &&
                  t.gesture < static_cast<int>(class_names.size()),
              "gesture index out of range of class names");
    }
    if (dataset_tag == "roshambo")
      require(class_names.size() == 3, "roshambo has 3 classes");
    if (dataset_tag == "sensorfusion")
      require(class_names.size() == 5, "sensorfusion has 5 classes");
  }
};

// Session-wise cross-validation plan: each fold tests on one session.
struct FoldPlan {
  struct Fold {
    std::vector<int> train_sessions;
    int test_session;
  };
  std::vector<Fold> folds;
};

namespace detail {

inline std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    out.push_back(std::stod(cell));
  }
  return out;
}

}  // namespace detail

// Reads one canonical trial file: CSV, header row ch0..chN, one row per
// sample. Values are divided by `scale` to map to volts in [-1, 1].
inline Eigen::MatrixXd read_trial_csv(const std::filesystem::path& file,
                                      double scale) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open trial file: " + file.string());
  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty trial file: " + file.string());
  // header row
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    rows.push_back(detail::parse_csv_row(line));
    if (rows.back().size() != rows.front().size())
      throw DataError("ragged rows in trial file: " + file.string());
  }
  if (rows.empty()) throw DataError("trial file has no samples: " + file.string());
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          rows[r][c] / scale;
  return m;
}

inline void write_trial_csv(const std::filesystem::path& file,
                            const Eigen::MatrixXd& samples) {
  std::ofstream out(file);
  if (!out) throw DataError("cannot write trial file: " + file.string());
  out.precision(17);
  for (int c = 0; c < samples.cols(); ++c)
    out << (c ? "," : "") << "ch" << c;
  out << "\n";
  for (Eigen::Index r = 0; r < samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c)
      out << (c ? "," : "") << samples(r, c);
    out << "\n";
  }
}

// Loads a canonical dataset directory: index.json plus one CSV per trial.
// Trials come back ordered lexicographically by (subject, session, trial).
inline TrialSet load_trials(const std::filesystem::path& dir,
                            const std::string& dataset_tag) {
  namespace fs = std::filesystem;
  if (!fs::exists(dir)) throw DataError("dataset path does not exist: " + dir.string());
  fs::path index = dir / "index.json";
  if (!fs::exists(index))
    throw DataError("missing index.json in dataset directory: " + dir.string());
  nlohmann::json j;
  {
    std::ifstream in(index);
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw DataError("corrupt index.json: " + std::string(e.what()));
    }
  }
  TrialSet ts;
  ts.dataset_tag = dataset_tag;
  for (const auto& name : j.at("class_names")) ts.class_names.push_back(name);
  if (j.at("trials").empty()) throw DataError("dataset has no trials: " + dir.string());
  for (const auto& e : j.at("trials")) {
    Trial t;
    t.subject_id = e.at("subject");
    t.session_id = e.at("session");
    t.trial_id = e.at("trial");
    t.gesture = e.at("gesture");
    t.sample_rate_hz = e.at("sample_rate_hz");
    double scale = e.value("scale", 1.0);
    fs::path file = dir / e.at("file").get<std::string>();
    t.samples = read_trial_csv(file, scale);
    if (t.samples.cols() != kEmgChannels)
      throw DataError("channel-count mismatch (want 8) in " + file.string());
    ts.trials.push_back(std::move(t));
  }
  std::sort(ts.trials.begin(), ts.trials.end(), [](const Trial& a, const Trial& b) {
    return std::tie(a.subject_id, a.session_id, a.trial_id, a.gesture) <
           std::tie(b.subject_id, b.session_id, b.trial_id, b.gesture);
  });
  ts.validate();
  return ts;
}

// Writes a TrialSet in the canonical layout. Returns the index JSON.
inline nlohmann::json save_trials(const TrialSet& ts,
                                  const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["class_names"] = ts.class_names;
  j["dataset_tag"] = ts.dataset_tag;
  j["trials"] = nlohmann::json::array();
  for (const auto& t : ts.trials) {
    char name[64];
    std::snprintf(name, sizeof(name), "s%02d_sess%d_g%d_t%03d.csv",
                  t.subject_id, t.session_id, t.gesture, t.trial_id);
    write_trial_csv(dir / name, t.samples);
    j["trials"].push_back({{"file", name},
                           {"subject", t.subject_id},
                           {"session", t.session_id},
                           {"trial", t.trial_id},
                           {"gesture", t.gesture},
                           {"sample_rate_hz", t.sample_rate_hz},
                           {"scale", 1.0}});
  }
  std::ofstream out(dir / "index.json");
  out << j.dump(2) << "\n";
  return j;
}

// Drops head_ms from the front and tail_ms from the back of a trial.
inline Trial trim_trial(const Trial& t, double head_ms, double tail_ms) {
  require(head_ms >= 0 && tail_ms >= 0, "trim durations must be nonnegative");
  const auto head =
      static_cast<Eigen::Index>(std::lround(head_ms * t.sample_rate_hz / 1000.0));
  const auto tail =
      static_cast<Eigen::Index>(std::lround(tail_ms * t.sample_rate_hz / 1000.0));
  if (head + tail >= t.samples.rows())
    throw std::invalid_argument("trim exceeds trial duration");
  Trial out = t;
  out.samples = t.samples.middleRows(head, t.samples.rows() - head - tail).eval();
  return out;
}

// One fold per session, training on the remaining two.
inline FoldPlan session_folds(const TrialSet& ts) {
  std::vector<int> sessions;
  for (const auto& t : ts.trials)
    if (std::find(sessions.begin(), sessions.end(), t.session_id) == sessions.end())
      sessions.push_back(t.session_id);
  std::sort(sessions.begin(), sessions.end());
  if (sessions.size() != 3)
    throw DataError("session-wise folds need exactly 3 sessions, got " +
                    std::to_string(sessions.size()));
  FoldPlan plan;
  for (int test : sessions) {
    FoldPlan::Fold f;
    f.test_session = test;
    for (int s : sessions)
      if (s != test) f.train_sessions.push_back(s);
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

// Synthetic labeled trials for dataset-free testing. Class k drives a
// distinct subset of channels with high-amplitude alternating-sign bursts,
// so channel-wise RMS linearly separates the classes. 8 channels, 200 Hz,
// 2 s per trial. Pure function of its arguments.
inline TrialSet synth_trials(int n_classes, int n_sessions,
                             int trials_per_class_per_session,
                             std::uint64_t seed) {
  require(n_classes >= 2, "need at least 2 classes");
  require(n_sessions >= 1 && trials_per_class_per_session >= 1,
          "need at least one session and one trial per class");
  const int n_samples = 400;
  TrialSet ts;
  ts.dataset_tag = "synthetic";
  for (int k = 0; k < n_classes; ++k)
    ts.class_names.push_back("class" + std::to_string(k));
  Rng root(seed);
  int trial_counter = 0;
  for (int sess = 0; sess < n_sessions; ++sess) {
    const double session_gain = 1.0 + 0.04 * sess;  // mild session drift
    for (int k = 0; k < n_classes; ++k) {
      for (int r = 0; r < trials_per_class_per_session; ++r) {
        Rng rng = root.derive(static_cast<std::uint64_t>(trial_counter));
        Trial t;
        t.samples.setZero(n_samples, kEmgChannels);
        t.sample_rate_hz = kEmgSampleRateHz;
        t.gesture = k;
        t.subject_id = 0;
        t.session_id = sess;
        t.trial_id = trial_counter++;
        const int burst_period = 100;  // 500 ms on/off envelope
        const int phase = static_cast<int>(rng.uniform_index(burst_period));
        for (int c = 0; c < kEmgChannels; ++c) {
          const bool active = (c % n_classes) == k;
          const double amp = session_gain * (active ? 0.85 : 0.06);
          for (int s = 0; s < n_samples; ++s) {
            const bool burst = ((s + phase) / burst_period) % 2 == 0;
            const double envelope = burst ? 1.0 : 0.1;
            const double sign = (s % 2 == 0) ? 1.0 : -1.0;
            t.samples(s, c) = amp * envelope * sign * rng.uniform(0.6, 1.0);
          }
        }
        ts.trials.push_back(std::move(t));
      }
    }
  }
  ts.validate();
  return ts;
}

}  // namespace emgres
