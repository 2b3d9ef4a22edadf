#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "spiro/signal/fft.hpp"
#include "spiro/signal/synth.hpp"
#include "spiro/tidal/classify.hpp"
#include "spiro/tidal/respiration.hpp"
#include "spiro/tidal/study.hpp"

using namespace spiro;
using namespace spiro::tidal;
using Catch::Approx;

namespace {

signal::AudioRecording tone_free(std::size_t n, int fs = 16000) {
  signal::AudioRecording r;
  r.sample_rate_hz = fs;
  r.samples = signal::white_noise(n, 3, 0.3);
  return r;
}

// Share of the signal energy above `hz`, from the one-sided spectrum.
double energy_above(const signal::AudioRecording& r, double hz) {
  const auto spec = signal::rfft(r.samples);
  double above = 0.0, total = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double e = std::norm(spec[k]);
    total += e;
    if (static_cast<double>(k) * r.sample_rate_hz / static_cast<double>(r.samples.size()) > hz) above += e;
  }
  return above / total;
}

double band_energy(const signal::AudioRecording& r, double lo, double hi) {
  const auto spec = signal::rfft(r.samples);
  double e = 0.0;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double f = static_cast<double>(k) * r.sample_rate_hz / static_cast<double>(r.samples.size());
    if (f >= lo && f <= hi) e += std::norm(spec[k]);
  }
  return 2.0 * e / static_cast<double>(r.samples.size()) / static_cast<double>(r.samples.size());
}

signal::AudioRecording breath(double bpm, std::uint64_t seed = 1, double snr = INFINITY) {
  signal::SynthParams p;
  p.kind = signal::SynthKind::Breath;
  p.bpm = bpm;
  p.seed = seed;
  p.snr_db = snr;
  return signal::synth(p);
}

}  // namespace

TEST_CASE("window slicing arithmetic") {
  const auto rec = tone_free(20 * 16000);
  CHECK(window_count(20 * 16000, 2 * 16000, 16000) == 19);
  CHECK(slice_windows(rec, 2.0, 1.0, 256).windows.size() == 19);
  CHECK(slice_windows(rec, 20.0, 20.0, 256).windows.size() == 1);
  CHECK(slice_windows(rec, 3.0, 3.0, 256).windows.size() == 6);  // floor(20 / 3)
  CHECK(slice_windows(rec, 0.5, 0.5, 256).windows.size() == 40);
  try {
    slice_windows(rec, 21.0, 1.0, 256);
    FAIL("expected SignalTooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SignalTooShort);
  }
  CHECK_THROWS_AS(slice_windows(rec, 1.0, 2.0, 256), Error);
  CHECK_THROWS_AS(slice_windows(rec, 1.0, 0.5, 300), Error);
}

TEST_CASE("window maps: frame length, bands and range") {
  const auto rec = tone_free(16000);
  // 256-sample frames with a 128-sample step inside a 1 s window
  const auto b = slice_windows(rec, 1.0, 1.0, 256);
  CHECK(b.windows.front().rows() == (16000 - 256) / 128 + 1);
  CHECK(b.windows.front().cols() == 16);
  // frames are capped at 32 ms: 512 samples at 16 kHz, 32 samples at 1 kHz
  CHECK(frame_config(16000, 512).window_samples(16000) == 512);
  CHECK(frame_config(1000, 256).window_samples(1000) == 32);
  CHECK(frame_config(1000, 256).step_samples(1000) == 16);
  for (const auto& w : b.windows) CHECK(w.allFinite());
}

TEST_CASE("classifier input keeps under 1 % of its energy above 500 Hz") {
  signal::SynthParams p;
  p.duration_s = 8.0;
  for (auto kind : {signal::SynthKind::Noise, signal::SynthKind::Speech, signal::SynthKind::Breath}) {
    p.kind = kind;
    const auto raw = signal::synth(p);
    const auto in = prepare(raw);
    CHECK(energy_above(in, 500.0) < 0.01);
    if (kind == signal::SynthKind::Noise) CHECK(energy_above(raw, 500.0) > 0.9);
  }
}

TEST_CASE("decimating to 1 kHz keeps the tidal band") {
  signal::SynthParams p;
  p.kind = signal::SynthKind::Noise;
  p.duration_s = 4.0;
  const auto full = prepare(signal::synth(p));
  const auto low = signal::decimate(full, 1000);
  // energy per unit time in 60-400 Hz is unchanged
  const double a = band_energy(full, 60.0, 400.0);
  const double b = band_energy(low, 60.0, 400.0);
  CHECK(b == Approx(a).epsilon(0.01));
}

TEST_CASE("vote rule examples") {
  std::vector<int> nine(9, 0);
  nine.push_back(2);
  auto d = vote(nine);
  CHECK(d.voted_label == 0);
  CHECK(d.vote_fraction == Approx(0.9));
  std::vector<int> eight(8, 0);
  eight.insert(eight.end(), {2, 2});
  CHECK(vote(eight).voted_label == kUncertain);
  CHECK(vote(std::vector<int>(10, 1)).voted_label == 1);
  CHECK(vote({}).voted_label == kUncertain);
  CHECK(label_name(kUncertain) == "uncertain");
}

TEST_CASE("vote rule agrees with a brute-force oracle on every multiset up to 12") {
  std::size_t checked = 0;
  for (int n = 1; n <= 12; ++n)
    for (int a = 0; a <= n; ++a)
      for (int b = 0; a + b <= n; ++b) {
        const int c = n - a - b;
        std::vector<int> labels(static_cast<std::size_t>(a), 0);
        labels.insert(labels.end(), static_cast<std::size_t>(b), 1);
        labels.insert(labels.end(), static_cast<std::size_t>(c), 2);
        int expected = kUncertain;
        const int counts[3] = {a, b, c};
        for (int k = 0; k < 3; ++k)
          if (static_cast<double>(counts[k]) / n >= 0.9 - 1e-12) expected = k;
        CHECK(vote(labels).voted_label == expected);
        ++checked;
      }
  CHECK(checked == 454);
}

TEST_CASE("network: softmax, gradients, determinism") {
  CnnConfig cfg;
  cfg.epochs = 2;
  auto m = init_cnn(5, 20, cfg, 4);
  Rng rng(8);
  features::FrameMatrix map(20, 5);
  for (Eigen::Index i = 0; i < map.size(); ++i) map.data()[i] = rng.normal();
  const auto p = probabilities(m, map);
  CHECK(p[0] + p[1] + p[2] == Approx(1.0).margin(1e-12));

  std::vector<double> grad;
  const double loss = loss_and_gradient(m, map, 1, grad);
  CHECK(loss == Approx(-std::log(p[1])));
  // central differences on a spread of parameters
  int checked = 0;
  for (std::size_t i = 0; i < m.params.size(); i += 7) {
    const double h = 1e-6, keep = m.params[i];
    std::vector<double> g;
    m.params[i] = keep + h;
    const double up = loss_and_gradient(m, map, 1, g);
    m.params[i] = keep - h;
    const double down = loss_and_gradient(m, map, 1, g);
    m.params[i] = keep;
    CHECK(grad[i] == Approx((up - down) / (2 * h)).margin(1e-6).epsilon(1e-4));
    ++checked;
  }
  CHECK(checked > 50);

  CHECK_THROWS_AS(init_cnn(5, min_frames(cfg) - 1, cfg, 1), Error);
}

TEST_CASE("training is deterministic and needs every class") {
  Rng rng(2);
  std::vector<features::FrameMatrix> maps;
  std::vector<int> labels;
  for (int i = 0; i < 12; ++i) {
    features::FrameMatrix m(12, 4);
    for (Eigen::Index j = 0; j < m.size(); ++j) m.data()[j] = rng.normal() + (i % 3);
    maps.push_back(m);
    labels.push_back(i % 3);
  }
  CnnConfig cfg;
  cfg.epochs = 3;
  const auto a = train_cnn(maps, labels, cfg, 5);
  const auto b = train_cnn(maps, labels, cfg, 5);
  CHECK(a.params == b.params);
  CHECK(train_cnn(maps, labels, cfg, 6).params != a.params);

  std::vector<int> two_classes = labels;
  for (auto& l : two_classes) l = l == 2 ? 1 : l;
  try {
    train_cnn(maps, two_classes, cfg, 5);
    FAIL("expected InvalidDataset");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidDataset);
  }
}

TEST_CASE("synthetic corpus is separable and the trained model classifies recordings") {
  const auto corpus = synth_tidal_corpus(6, 6.0, 11);
  CHECK(corpus.size() == 18);
  CnnConfig cfg;
  cfg.epochs = 15;
  const TidalHyper h;
  const auto cv = cross_validate(corpus, h, 3, cfg, 1);
  CHECK(cv.window_accuracy >= 0.9);

  const auto model = train_classifier(corpus, h, cfg, 1);
  signal::SynthParams p;
  p.duration_s = 6.0;
  p.seed = 99;
  p.kind = signal::SynthKind::Noise;
  const auto d = classify(model, signal::synth(p));
  CHECK(label_name(d.voted_label) == "noise");
  CHECK(d.per_window_label.size() == 11);

  const auto back = cnn_from_json(nlohmann::json::parse(cnn_to_json(model).dump()));
  CHECK(back.params == model.params);
  CHECK(classify(back, signal::synth(p)).per_window_label == d.per_window_label);
  CHECK(cnn_to_json(back).dump() == cnn_to_json(model).dump());

  auto slow = signal::synth(p);
  slow = signal::decimate(slow, 8000);
  CHECK_THROWS_AS(classify(model, slow), Error);
}

TEST_CASE("stratified folds balance classes") {
  std::vector<int> labels;
  for (int i = 0; i < 36; ++i) labels.push_back(i / 12);
  const auto f = stratified_folds(labels, 6, 3);
  std::map<std::pair<int, int>, int> count;
  for (std::size_t i = 0; i < labels.size(); ++i) ++count[{f[i], labels[i]}];
  CHECK(count.size() == 18);
  for (const auto& [k, v] : count) CHECK(v == 2);
}

TEST_CASE("respiration rate from synthetic breathing") {
  for (double bpm : {8.0, 12.0, 15.0, 20.0, 30.0}) {
    const auto r = respiration_rate(breath(bpm));
    REQUIRE_FALSE(r.rejected);
    CHECK(std::abs(r.rate_bpm - bpm) <= 0.5);
  }
  // amplitude scaling does not move the peaks
  auto rec = breath(15.0, 4);
  const auto base = respiration_rate(rec);
  for (double& v : rec.samples) v *= 7.5;
  const auto scaled = respiration_rate(rec);
  CHECK(scaled.peak_set.indices == base.peak_set.indices);
  CHECK(scaled.rate_bpm == Approx(base.rate_bpm));

  signal::AudioRecording silent;
  silent.samples.assign(20 * 16000, 0.0);
  CHECK(respiration_rate(silent).rejected);
}

TEST_CASE("metronome and peak-gap arithmetic") {
  CHECK(metronome_cycles(40.0, 20.0) == Approx(20.0 / 3.0));
  CHECK(std::floor(metronome_cycles(40.0, 20.0) * 100) / 100 == Approx(6.66));
  CHECK(20.0 / 3.2 == Approx(6.25));
  CHECK(rate_from_gap(3.2) == Approx(18.75));
  CHECK(rate_from_gap(3.25) == Approx(18.4615).epsilon(1e-4));
  const auto m = metronome_check(6.25, 40.0, 20.0);
  CHECK(m.deviation_cycles == Approx(0.41667).epsilon(1e-4));
  CHECK(metronome_check(20.0 / 3.0, 40.0, 20.0).deviation_cycles == Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(rate_from_gap(0.0), Error);
}

TEST_CASE("sampling-rate study table shape") {
  const auto corpus = synth_tidal_corpus(3, 4.0, 5);
  const auto breaths = synth_breath_set(2, 20.0, 20.0, 5);
  CnnConfig cfg;
  cfg.epochs = 2;
  const auto rows = sampling_rate_study(corpus, breaths, study_rates(), TidalHyper{}, 3, cfg, 1);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].rate_hz < rows[i - 1].rate_hz);
  for (const auto& r : rows) {
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.rate_mae >= 0.0);
  }
}
