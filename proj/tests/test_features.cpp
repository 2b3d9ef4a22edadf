#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "spiro/features/assemble.hpp"
#include "spiro/features/frames.hpp"
#include "spiro/features/mel.hpp"
#include "spiro/features/temporal.hpp"
#include "spiro/flow/corpus.hpp"
#include "spiro/flow/maneuver.hpp"
#include "spiro/seed.hpp"
#include "spiro/signal/synth.hpp"

using namespace spiro;
using namespace spiro::features;
using Catch::Approx;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) { return signal::white_noise(n, seed); }

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

}  // namespace

TEST_CASE("frame counts follow the framing arithmetic", "[features][frames]") {
  const FrameConfig cfg;
  REQUIRE(frame_signal(std::vector<double>(6 * 16000, 0.0), 16000, cfg).rows() == 399);
  REQUIRE(frame_signal(std::vector<double>(480, 0.0), 16000, cfg).rows() == 1);
  REQUIRE(frame_signal(std::vector<double>(20 * 16000, 0.0), 16000, cfg).rows() == 1332);
  REQUIRE(frame_signal(std::vector<double>(480, 0.0), 16000, cfg).cols() == 480);
  REQUIRE(cfg.fft_size(16000) == 512);

  try {
    frame_signal(std::vector<double>(479, 0.0), 16000, cfg);
    FAIL("expected SignalTooShort");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::SignalTooShort);
  }
  FrameConfig bad;
  bad.step_ms = 40.0;
  REQUIRE_THROWS_AS(frame_signal(std::vector<double>(16000, 0.0), 16000, bad), Error);
  bad = FrameConfig{};
  bad.fft_length = 256;
  REQUIRE_THROWS_AS(frame_signal(std::vector<double>(16000, 0.0), 16000, bad), Error);
}

TEST_CASE("frames hold consecutive slices", "[features][frames]") {
  std::vector<double> x(1000);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
  const auto f = frame_signal(x, 1000, FrameConfig{30.0, 15.0, 0});
  REQUIRE(f.rows() == 65);
  REQUIRE(f(0, 0) == 0.0);
  REQUIRE(f(1, 0) == 15.0);
  REQUIRE(f(64, 29) == 64 * 15 + 29);
}

TEST_CASE("power spectrum obeys Parseval", "[features][power]") {
  const int fs = 16000;
  const auto frames = frame_signal(noise(fs, 5), fs);
  const auto p = power_spectrum(frames, 512);
  REQUIRE(p.cols() == 257);
  for (Eigen::Index r = 0; r < frames.rows(); r += 37)
    REQUIRE(p.row(r).sum() == Approx(frames.row(r).squaredNorm()).epsilon(1e-6));

  const auto tone = frame_signal(oracle::sine(500.0, fs, 4800), fs);
  const auto pt = power_spectrum(tone, 512);
  Eigen::Index best = 0;
  pt.row(3).maxCoeff(&best);
  REQUIRE(best == 16);  // 500 Hz / (16000 / 512)

  const auto zero = power_spectrum(frame_signal(std::vector<double>(4800, 0.0), fs), 512);
  REQUIRE(zero.isZero(0.0));
}

TEST_CASE("mel energies peak in the band holding the tone", "[features][mel]") {
  const int fs = 16000;
  const auto frames = frame_signal(oracle::sine(440.0, fs, 4800), fs);
  const auto e = mfe(frames, fs);
  REQUIRE(e.cols() == 40);
  REQUIRE(e.rows() == frames.rows());

  // Independent band edges: 42 points evenly spaced on 1127 ln(1 + f/700).
  const double top = 1127.0 * std::log(1.0 + 8000.0 / 700.0);
  int expected = -1;
  double best_weight = -1.0;
  for (int b = 0; b < 40; ++b) {
    auto edge = [&](int i) { return 700.0 * (std::exp(top * i / 41.0 / 1127.0) - 1.0); };
    const double l = edge(b), c = edge(b + 1), r = edge(b + 2);
    const double w = 440.0 <= c ? (440.0 - l) / (c - l) : (r - 440.0) / (r - c);
    if (w > best_weight) {
      best_weight = w;
      expected = b;
    }
  }
  for (Eigen::Index r = 0; r < e.rows(); ++r) {
    Eigen::Index band = 0;
    e.row(r).maxCoeff(&band);
    REQUIRE(band == expected);
  }
}

TEST_CASE("mel energies of silence and under scaling", "[features][mel]") {
  const int fs = 16000;
  const auto zero = mfe(frame_signal(std::vector<double>(4800, 0.0), fs), fs);
  REQUIRE(zero.isZero(0.0));
  const auto logged = log_energies(zero);
  for (Eigen::Index i = 0; i < logged.size(); ++i) REQUIRE(logged.data()[i] == std::log(kLogFloor));

  auto x = noise(4800, 9);
  const auto e1 = mfe(frame_signal(x, fs), fs);
  for (double& v : x) v *= 2.0;
  const auto e2 = mfe(frame_signal(x, fs), fs);
  for (Eigen::Index i = 0; i < e1.size(); ++i) REQUIRE(e2.data()[i] == Approx(4.0 * e1.data()[i]).epsilon(1e-12));

  MelConfig bad;
  bad.fmax_hz = 9000.0;
  REQUIRE_THROWS_AS(mfe(frame_signal(x, fs), fs, bad), Error);
}

TEST_CASE("MVN normalizes each coefficient", "[features][mfcc]") {
  const int fs = 16000;
  const auto c = mfcc(frame_signal(noise(fs, 3), fs), fs);
  REQUIRE(c.cols() == 13);
  const auto n = mvn(c);
  for (Eigen::Index j = 0; j < n.cols(); ++j) {
    const double mean = n.col(j).mean();
    const double var = (n.col(j).array() - mean).square().mean();
    REQUIRE(std::abs(mean) < 1e-9);
    REQUIRE(std::abs(var - 1.0) < 1e-6);
  }

  FrameMatrix repeated(5, 3);
  repeated.rowwise() = Eigen::RowVector3d(1.0, -2.0, 0.5);
  REQUIRE(mvn(repeated).isZero(0.0));
  REQUIRE(mvn(c.topRows(1)).isZero(0.0));

  // MVN output does not depend on amplitude.
  auto x = noise(fs, 3);
  for (double& v : x) v *= 7.0;
  const auto n7 = mvn(mfcc(frame_signal(x, fs), fs));
  REQUIRE((n7 - n).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("MFCC coefficient 1 separates noise from tones", "[features][mfcc]") {
  const int fs = 16000;
  std::vector<double> c_noise, c_tone;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const auto cn = mfcc(frame_signal(noise(1600, seed), fs), fs);
    const auto ct = mfcc(frame_signal(oracle::sine(rng.uniform(200.0, 2000.0), fs, 1600, 0.5, rng.uniform(0, 6)), fs), fs);
    for (Eigen::Index r = 0; r < cn.rows(); ++r) c_noise.push_back(cn(r, 1));
    for (Eigen::Index r = 0; r < ct.rows(); ++r) c_tone.push_back(ct(r, 1));
  }
  REQUIRE(ks_statistic(c_noise, c_tone) > 0.5);
}

TEST_CASE("DCT-II is orthonormal", "[features][mfcc]") {
  FrameMatrix eye = FrameMatrix::Identity(8, 8);
  const auto basis = dct2(eye, 8);
  REQUIRE((basis * basis.transpose() - FrameMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("temporal descriptors on hand-checked inputs", "[features][temporal]") {
  REQUIRE(temporal_features(std::vector<double>{1, -1, 1, -1})[16] == 3.0);
  REQUIRE(temporal_features(std::vector<double>{3, 4, 0})[12] == 25.0);
  // total energy over the span: (9 + 16) / ((3 - 1) samples).
  REQUIRE(temporal_features(std::vector<double>{3, 4, 0})[8] == 12.5);

  const double fs = 100.0;
  const auto s = oracle::sine(1.0, fs, 100);  // one period
  REQUIRE(temporal_features(s, fs)[10] == Approx(0.5));

  const std::vector<double> x{0, 1, 3, 2, 2};
  const auto t = temporal_features(x);
  REQUIRE(t[2] == Approx((1 + 2 + 1 + 0) / 4.0));             // mean_abs_diff
  REQUIRE(t[3] == Approx(0.5));                               // mean_diff
  REQUIRE(t[4] == Approx(1.0));                               // median_abs_diff
  REQUIRE(t[5] == Approx(0.5));                               // median_diff of {1, 2, -1, 0}
  REQUIRE(t[6] == Approx(std::sqrt(2.0) + std::sqrt(5.0) + std::sqrt(2.0) + 1.0));
  REQUIRE(t[7] == Approx(4.0));
  REQUIRE(t[11] == Approx(0.5 + 2 + 2.5 + 2));                // trapezoid
  REQUIRE(t[13] == 1.0);                                      // one strict maximum
  REQUIRE(t[14] == 0.0);
  REQUIRE(t[15] == Approx(0.5));                              // slope of least squares
  REQUIRE(t[1] == Approx((1 * 1 + 2 * 9 + 3 * 4 + 4 * 4) / 18.0));

  const auto flat = temporal_features(std::vector<double>{2, 2, 2, 2});
  REQUIRE(flat[0] == 0.0);
  REQUIRE(flat[9] == 0.0);
  for (double v : flat) REQUIRE(std::isfinite(v));

  REQUIRE_THROWS_AS(temporal_features(std::vector<double>{1, 2}), Error);
}

TEST_CASE("temporal descriptors scale as documented", "[features][temporal][property]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto x = noise(3 + rng.index(300), seed);
    const double c = rng.uniform(0.1, 10.0);
    auto y = x;
    for (double& v : y) v *= c;
    const auto a = temporal_features(x, 50.0);
    const auto b = temporal_features(y, 50.0);
    for (std::size_t i : {0u, 1u, 9u, 10u, 13u, 14u, 16u}) REQUIRE(b[i] == Approx(a[i]).margin(1e-9));
    for (std::size_t i : {2u, 3u, 4u, 5u, 7u, 11u, 15u}) REQUIRE(b[i] == Approx(c * a[i]).margin(1e-9));
    for (std::size_t i : {8u, 12u}) REQUIRE(b[i] == Approx(c * c * a[i]).epsilon(1e-9));
  }
}

TEST_CASE("assembled vectors follow the frozen schema", "[features][assemble]") {
  const auto corpus = flow::synth_forced_corpus(4, 2, 77);
  std::vector<std::string> names;
  for (const auto& m : corpus) {
    const auto a = flow::analyze_maneuver(signal::synth(m.params));
    REQUIRE(a.verdict.accepted);
    for (auto v : {TargetVariant::PEF, TargetVariant::FEV1, TargetVariant::FVC}) {
      const auto fv = assemble(a, v);
      REQUIRE(fv.size() == schema_length());
      REQUIRE(fv.names.size() == fv.values.size());
      REQUIRE(fv.target_variant == v);
      for (double x : fv.values) REQUIRE(std::isfinite(x));
      if (names.empty()) names = fv.names;
      REQUIRE(fv.names == names);
    }
  }
  REQUIRE(schema_length() == 233);
  auto sorted = names;
  std::sort(sorted.begin(), sorted.end());
  REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  REQUIRE(names.front() == "mfe_00");
  REQUIRE(names.back() == "fv_zero_crossing_rate");
}

TEST_CASE("assembly is deterministic and respects segments", "[features][assemble]") {
  const auto m = flow::synth_forced_corpus(1, 1, 5).front();
  const auto a1 = flow::analyze_maneuver(signal::synth(m.params));
  const auto a2 = flow::analyze_maneuver(signal::synth(m.params));
  for (auto v : {TargetVariant::PEF, TargetVariant::FEV1, TargetVariant::FVC}) {
    const auto f1 = assemble(a1, v);
    const auto f2 = assemble(a2, v);
    REQUIRE(f1.values == f2.values);
  }

  const int fs = a1.clipped.sample_rate_hz;
  const auto [b, e] = segment_for(TargetVariant::FEV1, a1.onset, a1.curve.pef_index, a1.clipped.size(), fs);
  REQUIRE(e - b == static_cast<std::size_t>(fs));
  REQUIRE(frame_count(e - b, 480, 240) == 65);

  const auto [pb, pe] = segment_for(TargetVariant::PEF, 100, 150, 100000, fs);
  REQUIRE(pb == 100);
  REQUIRE(pe == 100 + 1600);  // short rise: 100 ms minimum
  const auto [qb, qe] = segment_for(TargetVariant::PEF, 100, 5000, 100000, fs);
  REQUIRE(qe == 5001);
}

TEST_CASE("rejected maneuvers do not yield features", "[features][assemble]") {
  signal::SynthParams p;
  p.kind = signal::SynthKind::Noise;
  p.duration_s = 8.0;
  const auto a = flow::analyze_maneuver(signal::synth(p));
  REQUIRE_FALSE(a.verdict.accepted);
  try {
    assemble(a, TargetVariant::FVC);
    FAIL("expected RejectedManeuver");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::RejectedManeuver);
  }
}

TEST_CASE("feature CSV carries the schema version and header", "[features][io]") {
  FeatureVector fv{{"a", "b"}, {1.5, -2.0}, TargetVariant::FVC};
  std::ostringstream os;
  write_csv(os, {fv, fv});
  REQUIRE(os.str() == "# spiro-features/1\na,b\n1.5,-2\n1.5,-2\n");
  FeatureVector other{{"a", "c"}, {1.0, 2.0}, TargetVariant::FVC};
  std::ostringstream os2;
  REQUIRE_THROWS_AS(write_csv(os2, {fv, other}), Error);
}
