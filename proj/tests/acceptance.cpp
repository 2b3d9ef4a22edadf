// Acceptance run: one PASS/FAIL/SKIP line per criterion; exit status 1 if any FAIL.
//
// usage: acceptance [path-to-spiro-cli]
// The CLI path is used for the determinism criterion; without it the library
// pipeline is run twice instead.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spiro/spiro.hpp"

using namespace spiro;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Outcome verdict(bool ok, std::string detail) { return {ok ? Status::Pass : Status::Fail, std::move(detail)}; }

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spiro_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome am_envelope() {
  signal::SynthParams p;
  p.kind = signal::SynthKind::Am;
  p.duration_s = 4.0;
  p.seed = 13;
  const auto rec = signal::synth(p);
  std::vector<double> message(rec.size());
  for (std::size_t i = 0; i < message.size(); ++i)
    message[i] = signal::am_message(p, static_cast<double>(i) / rec.sample_rate_hz);
  const auto raw = signal::hilbert_envelope(rec);
  const auto smooth = signal::smooth_fir(raw, signal::design_kaiser_fir(rec.sample_rate_hz));
  const double r = oracle::pearson(smooth.values, message);
  const double r_raw = oracle::pearson(raw.values, message);
  return verdict(r > 0.99 && r_raw < r, fmt("r=%.4f raw r=%.4f", r, r_raw));
}

Outcome fir_attenuation() {
  std::string detail;
  bool ok = true;
  for (int fs : {12000, 16000}) {
    const auto spec = signal::design_kaiser_fir(fs);
    const double f = spec.stopband_edge_hz();
    const std::size_t n = 4 * static_cast<std::size_t>(fs);
    auto tone = oracle::sine(f, fs, n);
    for (double& v : tone) v += 2.0;
    const auto out = signal::smooth_fir(signal::Envelope{tone, fs}, spec);
    const auto guard = static_cast<std::size_t>(fs);
    const double att = -oracle::db(oracle::tone_amplitude(out.values, f, fs, guard, n - guard) /
                                   oracle::tone_amplitude(tone, f, fs, guard, n - guard));
    ok = ok && att >= 10.0;
    detail += fmt("%.0f Hz: order %.0f, %.1f dB at %.1f Hz; ", fs, spec.order, att, f);
  }
  return verdict(ok, detail);
}

Outcome respiration_oracle() {
  std::string detail;
  bool ok = true;
  for (double bpm : {8.0, 12.0, 15.0, 20.0, 30.0}) {
    signal::SynthParams p;
    p.kind = signal::SynthKind::Breath;
    p.bpm = bpm;
    p.duration_s = 20.0;
    p.seed = derive_seed(3, "acceptance-breath", static_cast<std::uint64_t>(bpm));
    const auto r = tidal::respiration_rate(signal::synth(p));
    const bool hit = !r.rejected && std::abs(r.rate_bpm - bpm) <= 0.5;
    ok = ok && hit;
    detail += fmt("%.0f->%.2f ", bpm, r.rejected ? -1.0 : r.rate_bpm);
  }
  const auto noisy = tidal::synth_breath_set(50, 20.0, 10.0, 77);
  const auto [mae, rejected] = tidal::respiration_mae(noisy);
  ok = ok && rejected == 0 && mae <= 0.68;
  return verdict(ok, detail + fmt("| SNR 10 dB: MAE %.3f bpm over 50 trials, %.0f rejected", mae,
                                  static_cast<double>(rejected)));
}

Outcome metronome() {
  const double theoretical = tidal::metronome_cycles(40.0, 20.0);
  const double gap_cycles = 20.0 / 3.2;
  const double rate = tidal::rate_from_gap(3.2);
  const bool ok = std::floor(theoretical * 100.0) / 100.0 == 6.66 && gap_cycles == 6.25 && rate == 18.75;
  return verdict(ok, fmt("40 BPM x 20 s -> %.4f cycles; 3.2 s gap -> %.2f cycles, %.2f bpm", theoretical, gap_cycles,
                         rate));
}

Outcome vote_table() {
  std::size_t checked = 0, agree = 0;
  for (int n = 1; n <= 12; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b) {
        const int counts[3] = {a, b, n - a - b};
        std::vector<int> labels;
        for (int k = 0; k < 3; ++k) labels.insert(labels.end(), static_cast<std::size_t>(counts[k]), k);
        int expected = tidal::kUncertain;
        for (int k = 0; k < 3; ++k)
          if (counts[k] * 10 >= n * 9) expected = k;
        agree += tidal::vote(labels).voted_label == expected;
        ++checked;
      }
  // the empty window list is uncertain
  const bool empty_ok = tidal::vote({}).voted_label == tidal::kUncertain;
  return verdict(agree == checked && empty_ok,
                 fmt("%.0f / %.0f multisets agree", static_cast<double>(agree), static_cast<double>(checked)));
}

// Shared seeded corpus for the classifier criteria.
const std::vector<tidal::LabeledRecording>& tidal_corpus() {
  static const auto c = tidal::synth_tidal_corpus(12, 8.0, 2024);
  return c;
}

Outcome classifier() {
  const auto& corpus = tidal_corpus();
  const tidal::CnnConfig cfg;
  const tidal::TidalHyper h;
  const auto cv = tidal::cross_validate(corpus, h, 6, cfg, 1);

  auto shuffled = corpus;
  std::vector<int> labels = tidal::labels_of(corpus);
  Rng rng(derive_seed(1, "label-shuffle"));
  for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[rng.index(i)]);
  for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i].label = labels[i];
  const auto control = tidal::cross_validate(shuffled, h, 6, cfg, 1);

  const bool ok = cv.window_accuracy >= 0.9 && std::abs(control.window_accuracy - 1.0 / 3.0) <= 0.10;
  return verdict(ok, fmt("6-fold window accuracy %.3f (vote %.3f); shuffled-label control %.3f", cv.window_accuracy,
                         cv.vote_accuracy, control.window_accuracy));
}

Outcome sampling_study() {
  const auto breaths = tidal::synth_breath_set(20, 20.0, 10.0, 91);
  const std::vector<int> rates = {16000, 1000};
  const auto rows = tidal::sampling_rate_study(tidal_corpus(), breaths, rates, {}, 6, {}, 1);
  const auto& hi = rows[0];
  const auto& lo = rows[1];
  const bool ok = lo.accuracy >= 0.8 * hi.accuracy && lo.rate_mae >= hi.rate_mae;
  return verdict(ok, fmt("accuracy 16k %.3f 1k %.3f; rate MAE 16k %.3f 1k %.3f bpm", hi.accuracy, lo.accuracy,
                         hi.rate_mae, lo.rate_mae));
}

// Five subjects, four maneuvers each, target depending nonlinearly on two features.
learn::Dataset five_subjects() {
  learn::Dataset d;
  Rng rng(derive_seed(5, "acceptance-nested"));
  for (int s = 0; s < 5; ++s)
    for (int r = 0; r < 4; ++r) {
      learn::DatasetRow row;
      row.subject_id = "P" + std::to_string(s);
      row.features.names = {"f0", "f1", "f2"};
      row.features.values = {rng.uniform(), rng.uniform(), rng.uniform()};
      row.target = 1.0 + 2.0 * row.features.values[0] * row.features.values[1] + 0.3 * rng.uniform();
      d.rows.push_back(row);
    }
  return d;
}

// Independent enumeration: every outer split, every grid entry scored on every
// inner split, the winner refit on the outer training set.
std::map<std::string, double> brute_force(const learn::Dataset& d, learn::ModelKind kind,
                                          const std::vector<learn::Hyper>& grid, std::uint64_t seed) {
  std::vector<std::string> subjects;
  for (const auto& r : d.rows)
    if (std::find(subjects.begin(), subjects.end(), r.subject_id) == subjects.end()) subjects.push_back(r.subject_id);
  auto rows_where = [&](const learn::Dataset& src, auto pred) {
    learn::Dataset out;
    for (const auto& r : src.rows)
      if (pred(r.subject_id)) out.rows.push_back(r);
    return out;
  };
  auto subject_error = [&](const learn::TrainedEstimator& m, const learn::Dataset& test) {
    double s = 0.0;
    for (const auto& r : test.rows) s += std::abs(learn::predict(m, r.features) - r.target) / r.target * 100.0;
    return s / static_cast<double>(test.rows.size());
  };
  std::map<std::string, double> out;
  for (const auto& outer : subjects) {
    const auto train = rows_where(d, [&](const std::string& s) { return s != outer; });
    const auto test = rows_where(d, [&](const std::string& s) { return s == outer; });
    std::size_t best = 0;
    double best_score = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double total = 0.0;
      int count = 0;
      for (const auto& inner : subjects) {
        if (inner == outer) continue;
        const auto m = learn::fit(kind, rows_where(train, [&](const std::string& s) { return s != inner; }), grid[g],
                                  seed);
        total += subject_error(m, rows_where(train, [&](const std::string& s) { return s == inner; }));
        ++count;
      }
      const double score = total / count;
      if (g == 0 || score < best_score) {
        best = g;
        best_score = score;
      }
    }
    out[outer] = subject_error(learn::fit(kind, train, grid[best], seed), test);
  }
  return out;
}

Outcome nested_oracle() {
  const auto d = five_subjects();
  learn::NestedOptions opt;
  opt.use_sfs = false;
  opt.seed = 21;
  std::vector<learn::Hyper> forest(3);
  forest[0].trees = 5;
  forest[1].trees = 15;
  forest[2].trees = 25;
  std::vector<learn::Hyper> svr;
  for (auto k : {learn::SvrKernel::Linear, learn::SvrKernel::Rbf, learn::SvrKernel::Polynomial}) {
    learn::Hyper h;
    h.svr.kernel = k;
    h.svr.c = k == learn::SvrKernel::Rbf ? 10.0 : 1.0;
    svr.push_back(h);
  }
  std::size_t compared = 0, equal = 0;
  double worst = 0.0;
  for (const auto& [kind, grid] : {std::pair{learn::ModelKind::Linear, std::vector<learn::Hyper>{learn::Hyper{}}},
                                   std::pair{learn::ModelKind::RandomForest, forest},
                                   std::pair{learn::ModelKind::Svr, svr}}) {
    const auto rep = learn::nested_loocv(d, kind, grid, opt);
    for (const auto& [s, e] : brute_force(d, kind, grid, opt.seed)) {
      ++compared;
      const double diff = std::abs(rep.per_subject_percent_error.at(s) - e);
      worst = std::max(worst, diff);
      equal += diff <= 1e-9 * std::max(1.0, e);
    }
  }
  return verdict(equal == compared && compared == 15,
                 fmt("%.0f / %.0f subject errors match (max diff %.2e)", static_cast<double>(equal),
                     static_cast<double>(compared), worst));
}

Outcome battery() {
  const auto e = app::estimate_battery({});
  return verdict(std::abs(e.avg_mA - 1.64) <= 0.01 && e.days >= 12.5 && e.days <= 13.5,
                 fmt("avg %.4f mA, %.2f active hours, %.2f days", e.avg_mA, e.active_hours, e.days));
}

Outcome determinism(const std::string& cli) {
  const auto dir = scratch("determinism");
  app::SynthDataOptions opt;
  opt.subjects = 5;
  opt.per_subject = 2;
  opt.tidal = false;
  const auto manifest = app::write_synthetic_dataset(dir / "data", opt);

  std::string a, b, how;
  if (!cli.empty()) {
    for (const char* run : {"run1", "run2"}) {
      const std::string cmd = "\"" + cli + "\" forced eval --manifest \"" + manifest.string() + "\" --out \"" +
                              (dir / run).string() + "\" --seed 7 --max-features 4 > /dev/null";
      if (std::system(cmd.c_str()) != 0) return {Status::Fail, "spiro forced eval exited nonzero"};
    }
    a = slurp(dir / "run1" / "eval.json");
    b = slurp(dir / "run2" / "eval.json");
    how = "CLI";
  } else {
    const auto m = io::load_manifest(manifest.string());
    app::ForcedEvalOptions eo;
    eo.seed = 7;
    eo.max_features = 4;
    a = io::json_text(app::to_json(app::evaluate_forced(app::build_forced_data(m.of("forced")), eo), eo));
    b = io::json_text(app::to_json(app::evaluate_forced(app::build_forced_data(m.of("forced")), eo), eo));
    how = "library";
  }
  const bool same = !a.empty() && a == b;

  std::size_t accepted = 0, total = 0, noise_rejected = 0;
  for (const auto& m : flow::synth_forced_corpus(10, 3, 99)) {
    accepted += flow::analyze_maneuver(signal::synth(m.params)).verdict.accepted;
    ++total;
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    signal::SynthParams p;
    p.kind = signal::SynthKind::Noise;
    p.duration_s = 8.0;
    p.seed = seed;
    noise_rejected += !flow::analyze_maneuver(signal::synth(p)).verdict.accepted;
  }
  const bool ok = same && accepted == total && noise_rejected == 20;
  return verdict(ok, how + (same ? " reports byte-identical (" : " reports DIFFER (") + std::to_string(a.size()) +
                         " bytes); synthetic accepted " + std::to_string(accepted) + "/" + std::to_string(total) +
                         "; white noise rejected " + std::to_string(noise_rejected) + "/20");
}

Outcome dataset_reproduction() {
  const char* path = std::getenv("SPIRO_DATASET_MANIFEST");
  if (!path || !*path) return {Status::Skip, "SPIRO_DATASET_MANIFEST not set (released dataset absent)"};
  const auto m = io::load_manifest(path);
  struct Target {
    const char* mask;
    double pef, fev1, fvc, tidal_mae;
  };
  const Target targets[] = {{"n95", 6.30, 5.82, 5.98, 0.49}, {"cloth", 6.71, 5.25, 5.67, 0.68}};
  bool ok = true;
  std::string detail;
  for (const auto& t : targets) {
    std::vector<const io::ManifestEntry*> forced;
    for (const auto* e : m.of("forced"))
      if (e->mask_type == t.mask) forced.push_back(e);
    if (forced.empty()) {
      ok = false;
      detail += std::string(t.mask) + ": no forced entries; ";
      continue;
    }
    app::ForcedEvalOptions eo;
    eo.kinds = {learn::ModelKind::RandomForest};
    const auto ev = app::evaluate_forced(app::build_forced_data(forced), eo);
    const double expected[] = {t.pef, t.fev1, t.fvc};
    std::size_t i = 0;
    for (auto v : app::forced_targets()) {
      const double mpe = ev.reports.at(v).at(learn::ModelKind::RandomForest).mpe;
      ok = ok && std::abs(mpe - expected[i]) <= 2.0 && mpe < learn::kAtsGatePercent;
      detail += std::string(t.mask) + " " + features::to_string(v) +
                fmt(" %.2f%% (target %.2f); ", mpe, expected[i]);
      ++i;
    }
    std::vector<double> errs;
    for (const auto* e : m.of("tidal")) {
      if (e->mask_type != t.mask || e->label != "tidal") continue;
      const double ref = app::reference_rate(*e);
      const auto r = tidal::respiration_rate(io::load_wav(e->audio_path));
      if (ref > 0.0 && !r.rejected) errs.push_back(std::abs(r.rate_bpm - ref));
    }
    if (errs.empty()) {
      ok = false;
      detail += std::string(t.mask) + " tidal: no usable recordings; ";
    } else {
      const double mae = learn::mean(errs);
      ok = ok && std::abs(mae - t.tidal_mae) <= 0.2;
      detail += std::string(t.mask) + fmt(" tidal MAE %.3f (target %.2f); ", mae, t.tidal_mae);
    }
  }
  return verdict(ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "AM-envelope recovery", 1.0, am_envelope},
      {2, "FIR stopband attenuation", 1.0, fir_attenuation},
      {3, "respiration-rate oracle", 30.0, respiration_oracle},
      {4, "metronome arithmetic", 0.0, metronome},
      {5, "vote-threshold truth table", 0.0, vote_table},
      {6, "synthetic 3-class classifier", 300.0, classifier},
      {7, "sampling-rate study shape", 0.0, sampling_study},
      {8, "nested LOOCV oracle", 0.0, nested_oracle},
      {9, "battery estimator", 0.0, battery},
      {10, "forced pipeline determinism", 0.0, [&] { return determinism(cli); }},
      {11, "dataset reproduction", 0.0, dataset_reproduction},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (o.status == Status::Pass && c.budget_s > 0.0 && secs >= c.budget_s) {
      o.status = Status::Fail;
      o.detail += fmt(" [over the %.0f s budget]", c.budget_s);
    }
    const char* tag = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    failures += o.status == Status::Fail;
    std::printf("%s  %2d  %-30s %s (%.2f s)\n", tag, c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
