// emgres: spike-encoding and plastic-reservoir pipelines for EMG gesture
// classification. See README.md for the canonical dataset layout and the
// report formats each subcommand writes.

#include <CLI11.hpp>
#include <emgres/emgres.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// Write-then-rename so a report file is never observed half-written.
void write_text(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw emgres::DataError("cannot write " + path.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct CommonOpts {
  std::string data_dir;
  std::string tag = "synthetic";
  std::string out_dir = "out";
  std::string classifier = "svm";
  // encoder
  double vthp = 0.5;
  double vthn = -0.5;
  int interp = 5;
  double refractory_ms = 0.0;
  double window_ms = 200.0;
  // synthetic generation
  int synth_classes = 3;
  int synth_sessions = 3;
  int synth_trials = 5;
  // reservoir
  int neurons = 320;
  bool no_plasticity = false;
  std::uint64_t seed = 1;
  double trim_head_ms = -1.0;  // <0 means dataset default
  double trim_tail_ms = -1.0;
  bool dump_raster = false;
  bool dump_weights = false;
};

void add_dataset_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--data", o.data_dir,
                  "canonical dataset directory (omit for synthetic)");
  cmd->add_option("--tag", o.tag, "dataset tag: roshambo|sensorfusion|synthetic");
  cmd->add_option("--classes", o.synth_classes, "synthetic: number of classes");
  cmd->add_option("--sessions", o.synth_sessions, "synthetic: number of sessions");
  cmd->add_option("--trials-per-class", o.synth_trials,
                  "synthetic: trials per class per session");
}

void add_encoder_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--vthp", o.vthp, "positive encoder threshold (V)");
  cmd->add_option("--vthn", o.vthn, "negative encoder threshold (V)");
  cmd->add_option("--interp", o.interp, "encoder interpolation factor");
  cmd->add_option("--refractory-ms", o.refractory_ms, "encoder refractory (ms)");
  cmd->add_option("--window-ms", o.window_ms, "readout window (ms)");
  cmd->add_option("--trim-head-ms", o.trim_head_ms, "trim head override (ms)");
  cmd->add_option("--trim-tail-ms", o.trim_tail_ms, "trim tail override (ms)");
}

emgres::TrialSet load_dataset(const CommonOpts& o) {
  if (o.tag == "synthetic" && o.data_dir.empty())
    return emgres::synth_trials(o.synth_classes, o.synth_sessions,
                                o.synth_trials, o.seed);
  if (o.data_dir.empty())
    throw emgres::ConfigError("--data is required for tag " + o.tag);
  return emgres::load_trials(o.data_dir, o.tag);
}

emgres::PipelineConfig make_config(const CommonOpts& o) {
  emgres::PipelineConfig cfg;
  cfg.encoder.vthp = o.vthp;
  cfg.encoder.vthn = o.vthn;
  cfg.encoder.interp_factor = o.interp;
  cfg.encoder.refractory_ms = o.refractory_ms;
  cfg.encoder.validate();
  cfg.window_ms = o.window_ms;
  cfg.classifier = emgres::classifier_from_string(o.classifier);
  cfg.reservoir = emgres::scaled_spec(emgres::ReservoirSpec{}, o.neurons);
  cfg.sim.plasticity_enabled = !o.no_plasticity;
  cfg.seed = o.seed;
  if (o.trim_head_ms >= 0) cfg.trim_head_ms = o.trim_head_ms;
  if (o.trim_tail_ms >= 0) cfg.trim_tail_ms = o.trim_tail_ms;
  return cfg;
}

json config_json(const CommonOpts& o, const std::string& command) {
  return json{{"command", command},
              {"tag", o.tag},
              {"data", o.data_dir},
              {"classifier", o.classifier},
              {"vthp", o.vthp},
              {"vthn", o.vthn},
              {"interp", o.interp},
              {"refractory_ms", o.refractory_ms},
              {"window_ms", o.window_ms},
              {"neurons", o.neurons},
              {"plasticity", !o.no_plasticity},
              {"seed", o.seed},
              {"synth_classes", o.synth_classes},
              {"synth_sessions", o.synth_sessions},
              {"synth_trials", o.synth_trials},
              {"trim_head_ms", o.trim_head_ms},
              {"trim_tail_ms", o.trim_tail_ms}};
}

// Every run writes a manifest sufficient to reproduce it bit-exactly.
void write_manifest(const CommonOpts& o, const std::string& command) {
  json cfg = config_json(o, command);
  json m{{"version", kVersion},
         {"config", cfg},
         {"config_hash", to_hex(emgres::fnv1a(cfg.dump()))},
         {"seed", o.seed}};
  write_text(fs::path(o.out_dir) / "manifest.json", m.dump(2) + "\n");
}

void write_report_files(const CommonOpts& o, const emgres::EvalReport& rep,
                        int n_classes) {
  write_text(fs::path(o.out_dir) / "report.json",
             emgres::report_to_json(rep).dump(2) + "\n");
  std::ostringstream pred;
  pred << "fold,session,trial,true,pred\n";
  for (const auto& p : rep.predictions)
    pred << p[0] << ',' << p[1] << ',' << p[2] << ',' << p[3] << ',' << p[4]
         << "\n";
  write_text(fs::path(o.out_dir) / "predictions.csv", pred.str());
  (void)n_classes;
}

void write_roc_csv(const CommonOpts& o, const Eigen::MatrixXd& scores,
                   const std::vector<int>& labels) {
  std::ostringstream out;
  out << "class,fpr,tpr\n";
  out.precision(10);
  for (int k = 0; k < scores.cols(); ++k) {
    std::vector<double> s(labels.size());
    std::vector<int> pos(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      s[i] = scores(static_cast<Eigen::Index>(i), k);
      pos[i] = labels[i] == k;
    }
    try {
      for (const auto& [fpr, tpr] : emgres::roc_points(s, pos))
        out << k << ',' << fpr << ',' << tpr << "\n";
    } catch (const emgres::NumericError&) {
      // class absent from the pooled test rows; skip its curve
    }
  }
  write_text(fs::path(o.out_dir) / "roc.csv", out.str());
}

void print_summary(const emgres::EvalReport& rep) {
  std::cout.precision(4);
  std::cout << "window accuracy: " << 100.0 * rep.mean_accuracy << " +/- "
            << 100.0 * rep.std_accuracy << " %\n"
            << "trial accuracy (majority vote): "
            << 100.0 * rep.trial_mean_accuracy << " +/- "
            << 100.0 * rep.trial_std_accuracy << " %\n"
            << "micro AUC: " << rep.micro_auc << "  macro AUC: " << rep.macro_auc
            << "\n";
}

// ---------------------------------------------------------------- import

// Accepts either an already-canonical directory (index.json present) or a
// flat tree of per-trial CSVs named s<subject>_sess<session>_g<gesture>_
// t<trial>.csv. Raw integer units are divided by --scale.
int cmd_import(const std::string& raw, CommonOpts& o, double scale) {
  emgres::TrialSet ts;
  if (o.tag == "synthetic") {
    ts = emgres::synth_trials(o.synth_classes, o.synth_sessions, o.synth_trials,
                              o.seed);
  } else if (fs::exists(fs::path(raw) / "index.json")) {
    ts = emgres::load_trials(raw, o.tag);
  } else {
    if (!fs::exists(raw))
      throw emgres::DataError("raw path does not exist: " + raw);
    const std::regex name_re(
        R"(s(\d+)_sess(\d+)_g(\d+)_t(\d+)\.csv)");
    ts.dataset_tag = o.tag;
    int max_gesture = -1;
    for (const auto& entry : fs::recursive_directory_iterator(raw)) {
      if (!entry.is_regular_file()) continue;
      std::smatch m;
      const std::string name = entry.path().filename().string();
      if (!std::regex_match(name, m, name_re)) continue;
      emgres::Trial t;
      t.subject_id = std::stoi(m[1]);
      t.session_id = std::stoi(m[2]);
      t.gesture = std::stoi(m[3]);
      t.trial_id = std::stoi(m[4]);
      t.samples = emgres::read_trial_csv(entry.path(), scale);
      if (t.samples.cols() != emgres::kEmgChannels)
        throw emgres::DataError("channel-count mismatch in " +
                                entry.path().string());
      max_gesture = std::max(max_gesture, t.gesture);
      ts.trials.push_back(std::move(t));
    }
    if (ts.trials.empty())
      throw emgres::DataError("no trial files recognized under " + raw);
    static const std::vector<std::string> roshambo_names{"rock", "paper",
                                                         "scissor"};
    static const std::vector<std::string> fusion_names{"pinky", "elle", "yo",
                                                       "index", "thumb"};
    if (o.tag == "roshambo")
      ts.class_names = roshambo_names;
    else if (o.tag == "sensorfusion")
      ts.class_names = fusion_names;
    else
      for (int k = 0; k <= max_gesture; ++k)
        ts.class_names.push_back("class" + std::to_string(k));
    std::sort(ts.trials.begin(), ts.trials.end(),
              [](const emgres::Trial& a, const emgres::Trial& b) {
                return std::tie(a.subject_id, a.session_id, a.trial_id) <
                       std::tie(b.subject_id, b.session_id, b.trial_id);
              });
    ts.validate();
  }
  emgres::save_trials(ts, o.out_dir);
  // checksum manifest over the written files, deterministic ordering
  std::map<std::string, std::string> sums;
  for (const auto& entry : fs::directory_iterator(o.out_dir)) {
    if (entry.path().filename() == "manifest.json") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    sums[entry.path().filename().string()] =
        to_hex(emgres::fnv1a(buf.str()));
  }
  json m{{"version", kVersion}, {"tag", o.tag}, {"files", sums}};
  write_text(fs::path(o.out_dir) / "manifest.json", m.dump(2) + "\n");
  std::cout << "imported " << ts.trials.size() << " trials into " << o.out_dir
            << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- selftest

int cmd_selftest() {
  int failures = 0;
  const auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "\n";
    failures += !ok;
  };

  // membrane decay against the closed form
  {
    emgres::NeuronParams p;
    emgres::Population pop({p});
    std::vector<std::uint8_t> spiked;
    // vth0 = 1.0, so inject just below threshold then decay
    std::vector<double> inj{0.999};
    pop.step(inj, 1.0, spiked);
    const double v0 = pop.v()[0];
    for (int i = 0; i < 20; ++i) pop.step(std::vector<double>{0.0}, 1.0, spiked);
    check("neuron-exponential-decay",
          std::abs(pop.v()[0] - v0 * std::exp(-20.0 / 20.0)) < 1e-12);
  }
  // staircase reconstruction exactness
  {
    emgres::EncoderParams ep;
    ep.vthp = 0.5;
    ep.vthn = -0.5;
    ep.interp_factor = 1;
    std::vector<double> stair{0, 0.5, 1.0, 0.5, 0.5, 1.0};
    auto [up, dn] = emgres::encode_channel(stair, 1000.0, ep);
    auto rec = emgres::reconstruct(up, dn, ep, 0.005, 1000.0);
    bool ok = rec.size() == stair.size();
    for (std::size_t i = 0; ok && i < stair.size(); ++i)
      ok = std::abs(rec[i] - stair[i]) < 1e-12;
    check("encoder-staircase-reconstruction", ok);
  }
  // synthetic generator RMS separability via LDA
  {
    const auto ts = emgres::synth_trials(3, 3, 5, 11);
    Eigen::MatrixXd X(ts.trials.size(), emgres::kEmgChannels);
    std::vector<int> y;
    for (std::size_t i = 0; i < ts.trials.size(); ++i) {
      for (int c = 0; c < emgres::kEmgChannels; ++c)
        X(static_cast<Eigen::Index>(i), c) =
            std::sqrt(ts.trials[i].samples.col(c).array().square().mean());
      y.push_back(ts.trials[i].gesture);
    }
    const auto model = emgres::train_lda(X, y, 3);
    const auto pred = emgres::predict_lda(model, X);
    check("synthetic-rms-lda-separable", emgres::accuracy(y, pred) >= 0.99);
  }
  // RBF SVM on XOR
  {
    emgres::Rng rng(3);
    Eigen::MatrixXd X(200, 2);
    std::vector<int> y;
    for (int i = 0; i < 200; ++i) {
      const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
      X(i, 0) = a;
      X(i, 1) = b;
      y.push_back((a > 0) != (b > 0));
    }
    emgres::SvmParams sp;
    sp.gamma = 2.0;
    const auto model = emgres::train_svm(X, y, 2, sp);
    const auto pred = emgres::predict_svm(model, X);
    check("svm-xor", emgres::accuracy(y, pred.labels) > 0.9);
    check("svm-kkt", model.max_kkt_violation() <= sp.tol);
  }
  std::cout << (failures ? "selftest FAILED\n" : "selftest OK\n");
  return failures ? 1 : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EMG gesture classification with spike encoding and a plastic "
               "spiking reservoir"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "read options from an INI-style config file");
  app.require_subcommand(1);

  CommonOpts o;

  // import
  auto* imp = app.add_subcommand("import", "convert a raw dataset to the canonical layout");
  std::string raw_path;
  double import_scale = 1.0;
  imp->add_option("--raw", raw_path, "raw dataset directory");
  imp->add_option("--scale", import_scale, "divide raw amplitudes by this full-scale value");
  imp->add_option("--out", o.out_dir, "output directory")->required();
  add_dataset_options(imp, o);
  imp->add_option("--seed", o.seed, "seed for synthetic generation");

  // baseline
  auto* base = app.add_subcommand("baseline", "spike-encoding evaluation baseline");
  add_dataset_options(base, o);
  add_encoder_options(base, o);
  base->add_option("--classifier", o.classifier, "svm|lda");
  base->add_option("--seed", o.seed, "run seed");
  base->add_option("--out", o.out_dir, "output directory");

  // reservoir
  auto* resv = app.add_subcommand("reservoir", "plastic reservoir pipeline");
  add_dataset_options(resv, o);
  add_encoder_options(resv, o);
  resv->add_option("--classifier", o.classifier, "svm|lda");
  resv->add_option("--neurons", o.neurons, "reservoir size (multiple of 32)");
  resv->add_flag("--no-plasticity", o.no_plasticity, "freeze recurrent weights");
  resv->add_option("--seed", o.seed, "run seed");
  resv->add_option("--out", o.out_dir, "output directory");
  resv->add_flag("--dump-raster", o.dump_raster, "write per-trial raster CSVs");
  resv->add_flag("--dump-weights", o.dump_weights,
                 "write the recurrent weight trajectory CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "reservoir-size sweep");
  std::vector<int> counts;
  add_dataset_options(sweep, o);
  add_encoder_options(sweep, o);
  sweep->add_option("--counts", counts, "neuron counts (multiples of 32)")->required();
  sweep->add_option("--classifier", o.classifier, "svm|lda");
  sweep->add_flag("--no-plasticity", o.no_plasticity, "freeze recurrent weights");
  sweep->add_option("--seed", o.seed, "run seed");
  sweep->add_option("--out", o.out_dir, "output directory");

  // gridsearch
  auto* grid = app.add_subcommand("gridsearch", "encoder threshold grid search");
  std::vector<double> grid_p, grid_n;
  add_dataset_options(grid, o);
  add_encoder_options(grid, o);
  grid->add_option("--grid-p", grid_p, "positive thresholds (default 0.1..0.9)");
  grid->add_option("--grid-n", grid_n, "negative thresholds (default -0.9..-0.1)");
  grid->add_option("--classifier", o.classifier, "svm|lda");
  grid->add_option("--seed", o.seed, "run seed");
  grid->add_option("--out", o.out_dir, "output directory");

  // encode
  auto* enc = app.add_subcommand("encode", "dump per-trial event streams as CSV");
  add_dataset_options(enc, o);
  add_encoder_options(enc, o);
  enc->add_option("--seed", o.seed, "seed (synthetic data)");
  enc->add_option("--out", o.out_dir, "output directory")->required();

  auto* self = app.add_subcommand("selftest", "run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (imp->parsed()) return cmd_import(raw_path, o, import_scale);
    if (self->parsed()) return cmd_selftest();

    const emgres::TrialSet ts = load_dataset(o);
    const emgres::PipelineConfig cfg = make_config(o);
    const int n_classes = static_cast<int>(ts.class_names.size());

    if (base->parsed()) {
      write_manifest(o, "baseline");
      const auto rep = emgres::run_baseline(ts, cfg);
      write_report_files(o, rep, n_classes);
      print_summary(rep);
      return kExitOk;
    }
    if (resv->parsed()) {
      write_manifest(o, "reservoir");
      std::ostringstream weights_csv;
      weights_csv << "time_ms,synapse_id,weight\n";
      emgres::ReservoirRunHooks hooks;
      if (o.dump_raster)
        hooks.on_raster = [&](int fold, bool is_train,
                              const emgres::TrialRaster& r) {
          std::ostringstream csv;
          csv << "neuron_id,spike_time_s\n";
          csv.precision(10);
          for (std::size_t nrn = 0; nrn < r.raster.channels.size(); ++nrn)
            for (double t : r.raster.channels[nrn])
              csv << nrn << ',' << t << "\n";
          char name[96];
          std::snprintf(name, sizeof(name), "raster/fold%d_%s_sess%d_t%03d.csv",
                        fold, is_train ? "train" : "test", r.session, r.trial_id);
          write_text(fs::path(o.out_dir) / name, csv.str());
        };
      if (o.dump_weights)
        hooks.on_weights = [&](int fold, double t_ms,
                               const std::vector<double>& w) {
          if (fold != 0) return;  // trajectory of the first fold
          for (std::size_t s = 0; s < w.size(); ++s)
            weights_csv << t_ms << ',' << s << ',' << w[s] << "\n";
        };
      const auto rep = emgres::run_reservoir(ts, cfg, &hooks);
      if (o.dump_weights)
        write_text(fs::path(o.out_dir) / "weights.csv", weights_csv.str());
      write_report_files(o, rep, n_classes);
      print_summary(rep);
      return kExitOk;
    }
    if (sweep->parsed()) {
      write_manifest(o, "sweep");
      const auto rows = emgres::run_sweep(ts, cfg, counts);
      std::ostringstream csv;
      csv << "n_neurons,classifier,plasticity,mean_accuracy,std_accuracy\n";
      csv.precision(10);
      for (const auto& r : rows)
        csv << r.n_neurons << ',' << r.classifier << ',' << (r.plasticity ? 1 : 0)
            << ',' << r.mean_accuracy << ',' << r.std_accuracy << "\n";
      write_text(fs::path(o.out_dir) / "sweep.csv", csv.str());
      std::cout << csv.str();
      return kExitOk;
    }
    if (grid->parsed()) {
      write_manifest(o, "gridsearch");
      if (grid_p.empty())
        for (int i = 1; i <= 9; ++i) grid_p.push_back(0.1 * i);
      if (grid_n.empty())
        for (int i = 1; i <= 9; ++i) grid_n.push_back(-0.1 * i);
      const auto res = emgres::grid_search_thresholds(ts, grid_p, grid_n, cfg);
      std::ostringstream csv;
      csv << "vthp,vthn,mean_accuracy,std_accuracy\n";
      csv.precision(10);
      for (const auto& c : res.surface)
        csv << c.vthp << ',' << c.vthn << ',' << c.mean_accuracy << ','
            << c.std_accuracy << "\n";
      write_text(fs::path(o.out_dir) / "surface.csv", csv.str());
      // best params as a reusable config fragment
      std::ostringstream frag;
      frag << "vthp=" << res.best.vthp << "\nvthn=" << res.best.vthn
           << "\ninterp=" << res.best.interp_factor
           << "\nrefractory-ms=" << res.best.refractory_ms << "\n";
      write_text(fs::path(o.out_dir) / "best_encoder.ini", frag.str());
      std::cout << "best vthp=" << res.best.vthp << " vthn=" << res.best.vthn
                << " accuracy=" << 100.0 * res.best_accuracy << " %\n";
      return kExitOk;
    }
    if (enc->parsed()) {
      write_manifest(o, "encode");
      const emgres::TrialSet prepared = emgres::trimmed(ts, cfg);
      for (const auto& t : prepared.trials) {
        const auto es = emgres::encode_trial(t, cfg.encoder);
        std::ostringstream csv;
        csv << "channel_index,spike_time_s\n";
        csv.precision(10);
        for (std::size_t ch = 0; ch < es.channels.size(); ++ch)
          for (double ts_ : es.channels[ch]) csv << ch << ',' << ts_ << "\n";
        char name[96];
        std::snprintf(name, sizeof(name), "events/s%02d_sess%d_g%d_t%03d.csv",
                      t.subject_id, t.session_id, t.gesture, t.trial_id);
        write_text(fs::path(o.out_dir) / name, csv.str());
      }
      std::cout << "encoded " << prepared.trials.size() << " trials\n";
      return kExitOk;
    }
  } catch (const emgres::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const emgres::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const emgres::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
