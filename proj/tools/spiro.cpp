// spiro: command-line front end for the forced and tidal pipelines.
//
// Every option lives on the root command so a key=value config file
// (--config) can supply any of them; subcommands pass unknown options up.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spiro/spiro.hpp"

using namespace spiro;
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using features::TargetVariant;

namespace {

struct Options {
  std::string manifest, input, model, out, format = "json";
  std::uint64_t seed = 1;
  int rate = 0;

  // forced
  std::string estimator = "rf";
  std::vector<std::string> estimators = {"linear", "rf", "svr"};
  std::size_t max_features = 8;
  bool no_sfs = false;
  bool global_sfs = false;

  // tidal
  bool force = false;
  bool no_search = false;
  int folds = 6;
  std::vector<int> rates = tidal::study_rates();

  // battery
  app::BatteryModel battery;

  // synth
  std::string kind = "dataset";
  double bpm = 15.0;
  double duration_s = 20.0;
  double snr_db = 30.0;
  int subjects = 6;
  int per_subject = 3;
  std::size_t per_class = 6;
  std::vector<std::string> positions = {"L1"};
  std::string mask = "n95";
};

// ---------------------------------------------------------------------------
// Output helpers: everything written goes under --out.
// ---------------------------------------------------------------------------

fs::path out_dir(const Options& o) {
  require(!o.out.empty(), ErrorKind::InvalidInput, "--out is required for this command");
  return fs::path(o.out);
}

bool csv(const Options& o) { return o.format == "csv"; }

std::string cell(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

/// Scalar fields of an object as key,value rows.
std::string flat_csv(const ojson& j) {
  std::string s = "key,value\n";
  for (const auto& [k, v] : j.items())
    if (!v.is_structured()) s += k + "," + cell(v) + "\n";
  return s;
}

/// Array of flat objects as a table; the first object's keys are the columns.
std::string table_csv(const ojson& rows) {
  if (rows.empty()) return "";
  std::string s;
  std::vector<std::string> cols;
  for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  s += "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + (r.contains(cols[i]) ? cell(r[cols[i]]) : "");
    s += "\n";
  }
  return s;
}

void emit(const Options& o, const std::string& stem, const ojson& j, const std::string& csv_text) {
  const auto dir = out_dir(o);
  if (csv(o))
    io::write_text(dir / (stem + ".csv"), csv_text);
  else
    io::write_json(dir / (stem + ".json"), j);
}

signal::AudioRecording load_input(const Options& o) {
  require(!o.input.empty(), ErrorKind::InvalidInput, "--input is required for this command");
  auto rec = io::load_wav(o.input);
  rec.source_id = fs::path(o.input).filename().string();
  if (o.rate > 0 && o.rate != rec.sample_rate_hz) rec = signal::decimate(rec, o.rate);
  return rec;
}

io::Manifest load_manifest(const Options& o) {
  require(!o.manifest.empty(), ErrorKind::InvalidInput, "--manifest is required for this command");
  return io::load_manifest(o.manifest);
}

// ---------------------------------------------------------------------------
// forced
// ---------------------------------------------------------------------------

const char* model_file(TargetVariant v) {
  switch (v) {
    case TargetVariant::PEF: return "pef.json";
    case TargetVariant::FEV1: return "fev1.json";
    case TargetVariant::FVC: return "fvc.json";
    case TargetVariant::Generic: break;
  }
  return "generic.json";
}

int forced_analyze(const Options& o) {
  require(!o.model.empty(), ErrorKind::InvalidInput, "--model (directory written by 'forced train') is required");
  std::map<TargetVariant, learn::TrainedEstimator> models;
  for (auto v : app::forced_targets()) models[v] = learn::model_from_json(io::read_json(fs::path(o.model) / model_file(v)));
  const auto rec = load_input(o);
  const auto est = app::estimate_forced(rec, models);

  ojson j;
  j["source"] = rec.source_id;
  j["shape_verdict"] = est.analysis.verdict.accepted ? "accepted" : "rejected";
  j["shape_reasons"] = est.analysis.verdict.reasons;
  for (const auto& [v, value] : est.values) j[std::string(features::to_string(v)) + "_estimate"] = value;
  emit(o, "analysis", j, flat_csv(j));
  io::write_text(out_dir(o) / "fv_curve.csv", io::to_text([&](std::ostream& os) { flow::write_csv(os, est.analysis.curve); }));
  std::cout << io::json_text(j);
  if (!est.analysis.verdict.accepted) {
    std::string why;
    for (const auto& r : est.analysis.verdict.reasons) why += (why.empty() ? "" : ", ") + r;
    fail(ErrorKind::RejectedManeuver, "flow-volume curve failed the shape rules (" + why + ")");
  }
  return 0;
}

int forced_train(const Options& o) {
  const auto m = load_manifest(o);
  const auto kind = learn::parse_model(o.estimator);
  const auto data = app::build_forced_data(m.of("forced"));
  app::ForcedTrainOptions opt;
  opt.use_sfs = !o.no_sfs;
  opt.sfs.max_features = o.max_features;
  opt.seed = o.seed;

  ojson report;
  report["report"] = "spiro-forced-train/1";
  report["model"] = learn::to_string(kind);
  report["seed"] = o.seed;
  report["rejected"] = app::rejections_json(data.rejected);
  auto rows = ojson::array();
  for (const auto& [target, set] : data.sets) {
    const auto model = app::train_forced(set, kind, opt);
    io::write_json(out_dir(o) / model_file(target), learn::model_to_json(model));
    ojson row;
    row["target"] = features::to_string(target);
    row["rows"] = set.rows.size();
    row["subjects"] = model.training_subjects.size();
    row["selected_features"] = model.selected_features.size();
    row["hyper"] = learn::hyper_json(kind, model.hyper).dump();
    rows.push_back(row);
  }
  report["targets"] = rows;
  emit(o, "train", report, table_csv(rows));
  std::cout << "trained " << learn::to_string(kind) << " models for " << rows.size() << " targets in " << o.out << "\n";
  return 0;
}

int forced_eval(const Options& o) {
  const auto m = load_manifest(o);
  const auto data = app::build_forced_data(m.of("forced"));
  app::ForcedEvalOptions opt;
  opt.kinds.clear();
  for (const auto& e : o.estimators) opt.kinds.push_back(learn::parse_model(e));
  opt.use_sfs = !o.no_sfs;
  opt.global_sfs = o.global_sfs;
  opt.max_features = o.max_features;
  opt.seed = o.seed;
  const auto ev = app::evaluate_forced(data, opt);
  const auto j = app::to_json(ev, opt);

  auto summary = ojson::array();
  for (const auto& [target, by_kind] : ev.reports)
    for (const auto& [kind, rep] : by_kind) {
      const std::string stem = std::string(features::to_string(target)) + "_" + learn::to_string(kind);
      io::write_text(out_dir(o) / ("subjects_" + stem + ".csv"),
                     io::to_text([&](std::ostream& os) { learn::write_subject_csv(os, rep); }));
      io::write_text(out_dir(o) / ("bland_altman_" + stem + ".csv"),
                     io::to_text([&](std::ostream& os) { learn::write_bland_altman_csv(os, rep); }));
      ojson row;
      row["target"] = features::to_string(target);
      row["model"] = learn::to_string(kind);
      row["subjects"] = rep.per_subject_percent_error.size();
      row["mpe"] = rep.mpe;
      row["ats_gate"] = rep.ats_gate_pass ? "pass" : "fail";
      summary.push_back(row);
      char line[160];
      std::snprintf(line, sizeof line, "%-5s %-14s MPE %6.2f %%  ATS 7 %% gate: %s\n", features::to_string(target),
                    learn::to_string(kind), rep.mpe, rep.ats_gate_pass ? "pass" : "FAIL");
      std::cout << line;
    }
  emit(o, "eval", j, table_csv(summary));
  if (!ev.rejected.empty()) std::cout << ev.rejected.size() << " maneuver(s) rejected by the shape rules\n";
  return 0;
}

// ---------------------------------------------------------------------------
// tidal
// ---------------------------------------------------------------------------

tidal::CnnModel load_cnn(const Options& o) {
  require(!o.model.empty(), ErrorKind::InvalidInput, "--model (file written by 'tidal train') is required");
  return tidal::cnn_from_json(io::read_json(o.model));
}

std::vector<tidal::LabeledRecording> corpus_at_rate(std::vector<tidal::LabeledRecording> c, int rate) {
  return rate > 0 ? tidal::decimate_all(c, rate) : c;
}

int tidal_classify(const Options& o) {
  const auto model = load_cnn(o);
  if (!o.input.empty()) {
    const auto d = tidal::classify(model, load_input(o));
    const auto j = tidal::to_json(d);
    emit(o, "decision", j, flat_csv(j));
    std::cout << io::json_text(j);
    return 0;
  }
  const auto corpus = corpus_at_rate(app::tidal_corpus(load_manifest(o)), o.rate);
  auto rows = ojson::array();
  std::size_t correct = 0;
  for (const auto& r : corpus) {
    const auto d = tidal::classify(model, r.rec);
    correct += d.voted_label == r.label;
    auto j = tidal::to_json(d);
    j["truth"] = tidal::label_name(r.label);
    j.erase("window_labels");
    rows.push_back(j);
  }
  ojson report;
  report["report"] = "spiro-tidal-classify/1";
  report["recordings"] = corpus.size();
  report["vote_accuracy"] = static_cast<double>(correct) / static_cast<double>(corpus.size());
  report["decisions"] = rows;
  emit(o, "decisions", report, table_csv(rows));
  std::cout << "classified " << corpus.size() << " recordings, vote accuracy " << report["vote_accuracy"].get<double>()
            << "\n";
  return 0;
}

ojson rate_json(const tidal::RespirationResult& r, const std::string& source) {
  ojson j;
  j["source"] = source;
  j["rejected"] = r.rejected;
  j["reason"] = r.reason;
  j["rate_bpm"] = r.rejected ? ojson(nullptr) : ojson(r.rate_bpm);
  j["mean_peak_to_peak_s"] = r.rejected ? ojson(nullptr) : ojson(r.peak_set.mean_peak_to_peak_s);
  j["peaks"] = r.peak_set.indices.size();
  j["duration_s"] = r.duration_s;
  j["cycles_in_window"] = r.cycles_in_window();
  return j;
}

int tidal_rate(const Options& o) {
  if (!o.manifest.empty()) {
    const auto breaths = app::breathing_only(corpus_at_rate(app::tidal_corpus(load_manifest(o)), o.rate));
    require(!breaths.empty(), ErrorKind::InvalidDataset, "manifest has no tidal recordings with a reference rate");
    auto rows = ojson::array();
    for (const auto& b : breaths) {
      auto j = rate_json(tidal::respiration_rate(b.rec), b.rec.source_id);
      j["reference_bpm"] = b.bpm;
      rows.push_back(j);
    }
    const auto [mae, rejected] = tidal::respiration_mae(breaths);
    ojson report;
    report["report"] = "spiro-tidal-rate/1";
    report["recordings"] = breaths.size();
    report["rejected"] = rejected;
    report["mae_bpm"] = mae;
    report["rates"] = rows;
    emit(o, "rates", report, table_csv(rows));
    std::cout << "respiration rate MAE " << mae << " bpm over " << breaths.size() - rejected << " recordings\n";
    return 0;
  }

  const auto rec = load_input(o);
  ojson j;
  if (!o.force) {
    require(!o.model.empty(), ErrorKind::InvalidInput,
            "rate needs --model to confirm tidal breathing, or --force to skip the check");
    const auto d = tidal::classify(load_cnn(o), rec);
    require(d.voted_label != tidal::kUncertain, ErrorKind::UncertainInput,
            "window votes are inconclusive (top class holds " + std::to_string(d.vote_fraction) + "); use --force");
    require(d.voted_label == 0, ErrorKind::InvalidInput,
            "input classified as " + tidal::label_name(d.voted_label) + ", not tidal breathing; use --force");
  }
  const auto r = tidal::respiration_rate(rec);
  j = rate_json(r, rec.source_id);
  j["classifier_check"] = o.force ? "skipped" : "tidal";
  emit(o, "rate", j, flat_csv(j));
  std::cout << io::json_text(j);
  if (r.rejected) fail(ErrorKind::InsufficientPeaks, r.reason);
  return 0;
}

int tidal_train(const Options& o) {
  const auto corpus = corpus_at_rate(app::tidal_corpus(load_manifest(o)), o.rate);
  const tidal::CnnConfig cfg;
  tidal::TidalHyper best;
  ojson report;
  report["report"] = "spiro-tidal-train/1";
  report["seed"] = o.seed;
  report["recordings"] = corpus.size();
  auto rows = ojson::array();
  if (!o.no_search) {
    const auto sel = tidal::select_hyper(corpus, tidal::tidal_grid(), o.folds, cfg, o.seed);
    for (const auto& e : sel.entries)
      rows.push_back({{"window_s", e.hyper.window_s},
                      {"offset_fraction", e.hyper.offset_fraction},
                      {"fft_length", e.hyper.fft_length},
                      {"window_accuracy", e.cv.window_accuracy},
                      {"vote_accuracy", e.cv.vote_accuracy}});
    best = sel.entries[sel.best].hyper;
  } else {
    const auto cv = tidal::cross_validate(corpus, best, o.folds, cfg, o.seed);
    rows.push_back({{"window_s", best.window_s},
                    {"offset_fraction", best.offset_fraction},
                    {"fft_length", best.fft_length},
                    {"window_accuracy", cv.window_accuracy},
                    {"vote_accuracy", cv.vote_accuracy}});
  }
  report["grid"] = rows;
  report["selected"] = {{"window_s", best.window_s}, {"offset_fraction", best.offset_fraction},
                        {"fft_length", best.fft_length}};
  const auto model = tidal::train_classifier(corpus, best, cfg, o.seed);
  io::write_json(out_dir(o) / "cnn.json", tidal::cnn_to_json(model));
  emit(o, "train", report, table_csv(rows));
  std::cout << "trained classifier (window " << best.window_s << " s, offset " << best.offset_fraction
            << ", fft " << best.fft_length << ") -> " << (out_dir(o) / "cnn.json").string() << "\n";
  return 0;
}

int tidal_study(const Options& o) {
  const auto corpus = app::tidal_corpus(load_manifest(o));
  const auto breaths = app::breathing_only(corpus);
  const auto rows = tidal::sampling_rate_study(corpus, breaths, o.rates, {}, o.folds, {}, o.seed);
  auto arr = ojson::array();
  for (const auto& r : rows)
    arr.push_back({{"rate_hz", r.rate_hz}, {"accuracy", r.accuracy}, {"rate_mae_bpm", r.rate_mae},
                   {"rejected", r.rejected}});
  ojson report;
  report["report"] = "spiro-tidal-study/1";
  report["seed"] = o.seed;
  report["recordings"] = corpus.size();
  report["breath_recordings"] = breaths.size();
  report["rows"] = arr;
  emit(o, "study", report, table_csv(arr));
  for (const auto& r : rows) {
    char line[120];
    std::snprintf(line, sizeof line, "%6d Hz  accuracy %.3f  rate MAE %.3f bpm  rejected %zu\n", r.rate_hz,
                  r.accuracy, r.rate_mae, r.rejected);
    std::cout << line;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// battery, positions, synth
// ---------------------------------------------------------------------------

int battery(const Options& o) {
  const auto e = app::estimate_battery(o.battery);
  ojson j;
  j["avg_mA"] = e.avg_mA;
  j["active_hours"] = e.active_hours;
  j["days"] = e.days;
  j["sampling_s"] = o.battery.sampling_s;
  j["classify_s"] = o.battery.classify_s;
  j["measurements_per_min"] = o.battery.measurements_per_min;
  j["active_h_per_day"] = o.battery.active_h_per_day;
  j["capacity_mAh"] = o.battery.capacity_mAh;
  j["idle_day_drain"] = o.battery.idle_day_drain;
  if (!o.out.empty()) emit(o, "battery", j, flat_csv(j));
  std::cout << io::json_text(j);
  return 0;
}

int positions(const Options& o) {
  const auto m = load_manifest(o);
  app::ForcedTrainOptions opt;
  opt.use_sfs = !o.no_sfs;
  opt.sfs.max_features = o.max_features;
  opt.seed = o.seed;
  const auto t = app::position_study(m, learn::parse_model(o.estimator), opt);
  const auto j = app::to_json(t);
  auto rows = ojson::array();
  for (const auto& r : j["positions"]) {
    ojson row;
    row["position"] = r["position"];
    for (const auto& [k, v] : r["forced_mpe"].items()) row[k + "_mpe"] = v;
    row["tidal_mae_bpm"] = r["tidal_mae_bpm"];
    row["over_gate"] = r["over_gate"];
    rows.push_back(row);
  }
  emit(o, "positions", j, table_csv(rows));
  for (const auto& w : t.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << table_csv(rows);
  return 0;
}

int synth(const Options& o) {
  const auto dir = out_dir(o);
  if (o.kind == "dataset") {
    app::SynthDataOptions d;
    d.subjects = o.subjects;
    d.per_subject = o.per_subject;
    d.tidal_per_class = o.per_class;
    d.tidal_duration_s = o.duration_s;
    d.positions = o.positions;
    d.mask_type = o.mask;
    d.seed = o.seed;
    if (o.rate > 0) d.sample_rate_hz = o.rate;
    std::cout << app::write_synthetic_dataset(dir, d).string() << "\n";
    return 0;
  }
  signal::SynthParams p;
  const std::map<std::string, signal::SynthKind> kinds = {{"am", signal::SynthKind::Am},
                                                          {"breath", signal::SynthKind::Breath},
                                                          {"forced", signal::SynthKind::Forced},
                                                          {"noise", signal::SynthKind::Noise},
                                                          {"speech", signal::SynthKind::Speech}};
  const auto it = kinds.find(o.kind);
  require(it != kinds.end(), ErrorKind::InvalidInput, "unknown synth kind: " + o.kind);
  p.kind = it->second;
  p.seed = o.seed;
  p.bpm = o.bpm;
  p.duration_s = p.kind == signal::SynthKind::Forced ? 8.0 : o.duration_s;
  if (p.kind == signal::SynthKind::Breath) p.snr_db = o.snr_db;
  if (o.rate > 0) p.sample_rate_hz = o.rate;
  const auto path = dir / (o.kind + ".wav");
  fs::create_directories(dir);
  io::save_wav(path.string(), signal::synth(p));
  std::cout << path.string() << "\n";
  if (p.kind == signal::SynthKind::Breath) {
    const auto accel = dir / "breath_accel.csv";
    io::save_accel_csv(accel.string(), io::synth_accel(o.bpm, p.duration_s, o.seed));
    std::cout << accel.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acoustic spirometry from mask-microphone audio"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "key=value file supplying any option");
  Options o;

  app.add_option("--manifest", o.manifest, "dataset manifest (JSON or CSV)");
  app.add_option("--input", o.input, "input WAV (16-bit PCM mono)");
  app.add_option("--model", o.model, "trained model: directory (forced) or file (tidal)");
  app.add_option("--out", o.out, "output directory; nothing is written elsewhere");
  app.add_option("--seed", o.seed, "root seed")->capture_default_str();
  app.add_option("--rate", o.rate, "resample inputs to this rate in Hz (synth: output rate)");
  app.add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

  app.add_option("--estimator", o.estimator, "forced model for train/positions: linear|rf|svr")->capture_default_str();
  app.add_option("--estimators", o.estimators, "forced models for eval")->delimiter(',')->capture_default_str();
  app.add_option("--max-features", o.max_features, "feature-selection limit")->capture_default_str();
  app.add_flag("--no-sfs", o.no_sfs, "use every feature instead of forward selection");
  app.add_flag("--global-sfs", o.global_sfs, "select features once on all subjects (leaks; comparison only)");

  app.add_flag("--force", o.force, "rate: skip the tidal classifier check");
  app.add_flag("--no-search", o.no_search, "tidal train: skip the window/offset/FFT grid search");
  app.add_option("--folds", o.folds, "tidal cross-validation folds")->capture_default_str();
  app.add_option("--rates", o.rates, "tidal study sampling rates in Hz")->delimiter(',')->capture_default_str();

  auto& b = o.battery;
  app.add_option("--idle-ma", b.idle_mA)->capture_default_str();
  app.add_option("--sampling-ma", b.sampling_mA)->capture_default_str();
  app.add_option("--classify-ma", b.classify_mA)->capture_default_str();
  app.add_option("--per-min", b.measurements_per_min, "measurements per minute")->capture_default_str();
  app.add_option("--sampling-s", b.sampling_s, "audio sampling per measurement")->capture_default_str();
  app.add_option("--classify-s", b.classify_s, "classification per measurement (back-solved default)")
      ->capture_default_str();
  app.add_option("--active-hours", b.active_h_per_day)->capture_default_str();
  app.add_option("--capacity-mah", b.capacity_mAh)->capture_default_str();
  app.add_flag("--idle-day-drain", b.idle_day_drain, "also drain idle current outside the active hours");

  app.add_option("--kind", o.kind, "synth: dataset|forced|breath|am|noise|speech")->capture_default_str();
  app.add_option("--bpm", o.bpm)->capture_default_str();
  app.add_option("--duration", o.duration_s, "seconds")->capture_default_str();
  app.add_option("--snr", o.snr_db, "breath SNR in dB")->capture_default_str();
  app.add_option("--subjects", o.subjects)->capture_default_str();
  app.add_option("--per-subject", o.per_subject, "forced maneuvers per subject")->capture_default_str();
  app.add_option("--per-class", o.per_class, "tidal recordings per class")->capture_default_str();
  app.add_option("--positions", o.positions, "sensor positions")->delimiter(',')->capture_default_str();
  app.add_option("--mask", o.mask)->check(CLI::IsMember({"n95", "cloth"}))->capture_default_str();

  std::function<int()> run;
  auto sub = [&](CLI::App* parent, const std::string& name, const std::string& help, std::function<int()> f) {
    auto* c = parent->add_subcommand(name, help)->fallthrough();
    c->callback([&run, f] { run = f; });
    return c;
  };
  auto* forced = app.add_subcommand("forced", "forced-exhalation spirometry")->fallthrough()->require_subcommand(1);
  sub(forced, "analyze", "PEF/FEV1/FVC and shape verdict for one WAV", [&] { return forced_analyze(o); });
  sub(forced, "train", "fit per-target estimators on a manifest", [&] { return forced_train(o); });
  sub(forced, "eval", "nested leave-one-subject-out evaluation", [&] { return forced_eval(o); });
  auto* tidal = app.add_subcommand("tidal", "tidal breathing")->fallthrough()->require_subcommand(1);
  sub(tidal, "classify", "tidal/speech/noise decision", [&] { return tidal_classify(o); });
  sub(tidal, "rate", "respiration rate in breaths per minute", [&] { return tidal_rate(o); });
  sub(tidal, "train", "train the window classifier", [&] { return tidal_train(o); });
  sub(tidal, "study", "accuracy and rate error versus sampling rate", [&] { return tidal_study(o); });
  sub(&app, "battery", "battery-life estimate", [&] { return battery(o); });
  sub(&app, "positions", "error per sensor position (trained on L1)", [&] { return positions(o); });
  sub(&app, "synth", "write synthetic recordings or a synthetic dataset", [&] { return synth(o); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return run();
  } catch (const Error& e) {
    std::cerr << "spiro: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "spiro: " << e.what() << "\n";
    return exit_code(ErrorKind::IoError);
  }
}
