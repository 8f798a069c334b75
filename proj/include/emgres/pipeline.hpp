#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "emgres/common.hpp"
#include "emgres/dataio.hpp"
#include "emgres/encoding.hpp"
#include "emgres/neuron.hpp"
#include "emgres/plasticity.hpp"
#include "emgres/readout.hpp"
#include "emgres/reservoir.hpp"
#include "emgres/topology.hpp"

namespace emgres {

inline constexpr double kDefaultWindowMs = 200.0;
inline constexpr double kRoshamboTrimMs = 600.0;

struct PipelineConfig {
  EncoderParams encoder;
  ReservoirSpec reservoir;
  NeuronParams neuron_template;
  CriticalParams critical;
  SimulationConfig sim;
  ClassifierKind classifier = ClassifierKind::Svm;
  SvmParams svm;
  double window_ms = kDefaultWindowMs;
  // trim override; nullopt means "600 ms both ends for roshambo, none else"
  std::optional<double> trim_head_ms;
  std::optional<double> trim_tail_ms;
  std::uint64_t seed = 0;
};

inline double trim_head_for(const PipelineConfig& cfg, const TrialSet& ts) {
  if (cfg.trim_head_ms) return *cfg.trim_head_ms;
  return ts.dataset_tag == "roshambo" ? kRoshamboTrimMs : 0.0;
}

inline double trim_tail_for(const PipelineConfig& cfg, const TrialSet& ts) {
  if (cfg.trim_tail_ms) return *cfg.trim_tail_ms;
  return ts.dataset_tag == "roshambo" ? kRoshamboTrimMs : 0.0;
}

inline TrialSet trimmed(const TrialSet& ts, const PipelineConfig& cfg) {
  const double head = trim_head_for(cfg, ts);
  const double tail = trim_tail_for(cfg, ts);
  if (head == 0.0 && tail == 0.0) return ts;
  TrialSet out = ts;
  for (auto& t : out.trials) t = trim_trial(t, head, tail);
  return out;
}

// Encoded 16-channel rate vectors for the whole set.
inline FeatureMatrix baseline_features(const TrialSet& ts,
                                       const EncoderParams& enc,
                                       double window_ms) {
  FeatureMatrix fm;
  for (const auto& t : ts.trials) {
    const EventStream es = encode_trial(t, enc);
    fm.append_rows(extract_rate_vectors(es, window_ms), t.gesture, t.trial_id,
                   t.session_id);
  }
  return fm;
}

// Spike-encoding evaluation baseline: encode, window into rate vectors,
// session-wise 3-fold cross-validation.
inline EvalReport run_baseline(const TrialSet& ts, const PipelineConfig& cfg) {
  const TrialSet prepared = trimmed(ts, cfg);
  const FeatureMatrix fm =
      baseline_features(prepared, cfg.encoder, cfg.window_ms);
  return cross_validate(fm, session_folds(prepared),
                        static_cast<int>(ts.class_names.size()),
                        cfg.classifier, cfg.svm);
}

inline FeatureMatrix features_from_rasters(const std::vector<TrialRaster>& rs,
                                           double window_ms) {
  FeatureMatrix fm;
  for (const auto& r : rs)
    fm.append_rows(extract_rate_vectors(r.raster, window_ms), r.label,
                   r.trial_id, r.session);
  return fm;
}

// Optional observers for raster and weight-trajectory dumps.
struct ReservoirRunHooks {
  std::function<void(int fold, bool is_train, const TrialRaster&)> on_raster;
  std::function<void(int fold, double t_ms, const std::vector<double>& weights)>
      on_weights;
};

// Reservoir pipeline. Each fold gets a fresh engine seeded from the same
// wiring; plastic weights adapt over the training pass (and stay plastic
// during test, unless plasticity is disabled) while membrane state resets
// between trials.
inline EvalReport run_reservoir(const TrialSet& ts, const PipelineConfig& cfg,
                                const ReservoirRunHooks* hooks = nullptr) {
  const TrialSet prepared = trimmed(ts, cfg);
  const FoldPlan plan = session_folds(prepared);
  const int n_classes = static_cast<int>(ts.class_names.size());

  ReservoirSpec spec = cfg.reservoir;
  spec.seed = cfg.seed;
  const Wiring wiring = build_wiring(spec);
  const auto neuron_params = draw_population(
      static_cast<std::size_t>(wiring.n_neurons()), cfg.neuron_template,
      cfg.seed ^ 0xA5A5A5A5ULL);

  std::vector<FoldResult> results;
  for (const auto& fold : plan.folds) {
    TrialSet train_set, test_set;
    train_set.class_names = test_set.class_names = prepared.class_names;
    train_set.dataset_tag = test_set.dataset_tag = prepared.dataset_tag;
    for (const auto& t : prepared.trials)
      (t.session_id == fold.test_session ? test_set : train_set)
          .trials.push_back(t);

    Engine engine(wiring, neuron_params, cfg.critical, cfg.sim);
    const int fold_idx = static_cast<int>(results.size());
    double sim_clock_ms = 0.0;
    bool in_train_pass = true;
    const auto on_trial = [&](const TrialRaster& r, const Engine& eng) {
      sim_clock_ms += r.raster.duration_s * 1000.0;
      if (!hooks) return;
      if (hooks->on_raster) hooks->on_raster(fold_idx, in_train_pass, r);
      if (hooks->on_weights)
        hooks->on_weights(fold_idx, sim_clock_ms, eng.recurrent_weights());
    };
    const auto train_rasters =
        run_dataset(train_set, cfg.encoder, engine, cfg.sim, on_trial);
    in_train_pass = false;
    const auto test_rasters =
        run_dataset(test_set, cfg.encoder, engine, cfg.sim, on_trial);
    results.push_back(
        evaluate_fold(features_from_rasters(train_rasters, cfg.window_ms),
                      features_from_rasters(test_rasters, cfg.window_ms),
                      n_classes, cfg.classifier, cfg.svm));
  }
  return aggregate_folds(results, n_classes);
}

struct GridCell {
  double vthp;
  double vthn;
  double mean_accuracy;
  double std_accuracy;
};

struct GridSearchResult {
  EncoderParams best;
  double best_accuracy = 0.0;
  std::vector<GridCell> surface;
};

// Threshold grid search over the baseline pipeline. Ties break toward the
// larger vthp, then the larger |vthn| (sparser encoding preferred).
inline GridSearchResult grid_search_thresholds(
    const TrialSet& ts, const std::vector<double>& grid_p,
    const std::vector<double>& grid_n, const PipelineConfig& cfg) {
  require(!grid_p.empty() && !grid_n.empty(), "threshold grids must be nonempty");
  GridSearchResult res;
  bool first = true;
  for (double vp : grid_p)
    for (double vn : grid_n) {
      PipelineConfig c = cfg;
      c.encoder.vthp = vp;
      c.encoder.vthn = vn;
      const EvalReport rep = run_baseline(ts, c);
      res.surface.push_back({vp, vn, rep.mean_accuracy, rep.std_accuracy});
      const auto better = [&] {
        if (first) return true;
        if (rep.mean_accuracy != res.best_accuracy)
          return rep.mean_accuracy > res.best_accuracy;
        if (vp != res.best.vthp) return vp > res.best.vthp;
        return std::abs(vn) > std::abs(res.best.vthn);
      };
      if (better()) {
        res.best = c.encoder;
        res.best_accuracy = rep.mean_accuracy;
        first = false;
      }
    }
  return res;
}

// Macrocolumn shape for a target neuron count: the factor triple of
// n / prod(mini_shape) closest to balanced, arranged (mid, max, min) to
// follow the [2,5,1] base pattern.
inline std::array<int, 3> macro_shape_for(int n_neurons,
                                          const std::array<int, 3>& mini_shape) {
  const int per_column = mini_shape[0] * mini_shape[1] * mini_shape[2];
  require(per_column > 0, "mini shape must be nonempty");
  if (n_neurons % per_column != 0)
    throw ConfigError("neuron count " + std::to_string(n_neurons) +
                      " is not a multiple of the minicolumn size " +
                      std::to_string(per_column));
  const int cells = n_neurons / per_column;
  std::array<int, 3> best{1, 1, cells};
  int best_spread = cells;
  for (int a = 1; a * a * a <= cells; ++a) {
    if (cells % a) continue;
    const int rest = cells / a;
    for (int b = a; b * b <= rest; ++b) {
      if (rest % b) continue;
      const int c = rest / b;  // a <= b <= c
      if (c - a < best_spread) {
        best_spread = c - a;
        best = {a, b, c};
      }
    }
  }
  return {best[1], best[2], best[0]};  // (mid, max, min)
}

// Scales a reservoir spec to a new neuron count: macro shape regrown,
// recurrent target scaled with n(n-1) so pairwise density is preserved.
inline ReservoirSpec scaled_spec(const ReservoirSpec& base, int n_neurons) {
  ReservoirSpec spec = base;
  spec.macro_shape = macro_shape_for(n_neurons, base.mini_shape);
  const double base_pairs =
      static_cast<double>(base.n_neurons()) * (base.n_neurons() - 1);
  const double new_pairs = static_cast<double>(n_neurons) * (n_neurons - 1);
  spec.target_recurrent = static_cast<int>(
      std::lround(base.target_recurrent * new_pairs / base_pairs));
  return spec;
}

struct SweepRow {
  int n_neurons;
  std::string classifier;
  bool plasticity;
  double mean_accuracy;
  double std_accuracy;
};

// Neuron-count sweep of the reservoir pipeline; rows sorted by count.
inline std::vector<SweepRow> run_sweep(const TrialSet& ts,
                                       const PipelineConfig& cfg,
                                       std::vector<int> neuron_counts) {
  require(!neuron_counts.empty(), "sweep needs at least one neuron count");
  std::sort(neuron_counts.begin(), neuron_counts.end());
  std::vector<SweepRow> rows;
  for (int n : neuron_counts) {
    PipelineConfig c = cfg;
    c.reservoir = scaled_spec(cfg.reservoir, n);
    const EvalReport rep = run_reservoir(ts, c);
    rows.push_back({n,
                    cfg.classifier == ClassifierKind::Svm ? "svm" : "lda",
                    cfg.sim.plasticity_enabled, rep.mean_accuracy,
                    rep.std_accuracy});
  }
  return rows;
}

}  // namespace emgres
