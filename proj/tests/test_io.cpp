#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spiro/io/accel.hpp"
#include "spiro/io/manifest.hpp"
#include "spiro/io/report.hpp"
#include "spiro/io/wav.hpp"
#include "spiro/learn/evaluation.hpp"
#include "spiro/signal/synth.hpp"
#include "spiro/tidal/respiration.hpp"

using namespace spiro;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spiro_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST_CASE("WAV round trip") {
  signal::SynthParams p;
  p.kind = signal::SynthKind::Noise;
  p.duration_s = 0.5;
  p.amplitude = 0.3;
  const auto rec = signal::synth(p);
  const auto bytes = io::encode_wav(rec);
  CHECK(bytes.size() == 44 + 2 * rec.samples.size());
  const auto back = io::parse_wav(bytes_of(bytes));
  CHECK(back.sample_rate_hz == 16000);
  REQUIRE(back.samples.size() == rec.samples.size());
  for (std::size_t i = 0; i < rec.samples.size(); ++i) CHECK(back.samples[i] == io::to_pcm16(rec.samples[i]) / 32768.0);
  CHECK(io::encode_wav(back) == bytes);  // quantized samples survive exactly

  const auto dir = scratch("wav");
  io::save_wav((dir / "a.wav").string(), back);
  CHECK(io::load_wav((dir / "a.wav").string()).samples == back.samples);
  CHECK(io::to_pcm16(1.0) == 32767);
  CHECK(io::to_pcm16(-1.0) == -32768);
}

TEST_CASE("WAV format errors carry byte offsets") {
  signal::AudioRecording rec;
  rec.samples = {0.0, 0.5, -0.5, 0.25};
  const auto good = io::encode_wav(rec);

  auto stereo = good;
  stereo[22] = 2;
  try {
    io::parse_wav(bytes_of(stereo));
    FAIL("stereo accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::FormatError);
    CHECK(std::string(e.what()).find("byte 22") != std::string::npos);
  }
  auto floating = good;
  floating[20] = 3;
  CHECK(kind_of([&] { io::parse_wav(bytes_of(floating)); }) == ErrorKind::FormatError);
  auto bits8 = good;
  bits8[34] = 8;
  CHECK(kind_of([&] { io::parse_wav(bytes_of(bits8)); }) == ErrorKind::FormatError);
  CHECK(kind_of([&] { io::parse_wav(bytes_of(good.substr(0, 50))); }) == ErrorKind::FormatError);
  CHECK(kind_of([&] { io::parse_wav(bytes_of("RIFX" + good.substr(4))); }) == ErrorKind::FormatError);
  CHECK(kind_of([] { io::load_wav("/nonexistent/x.wav"); }) == ErrorKind::IoError);
}

TEST_CASE("accelerometer respiration rate") {
  const auto tr = io::synth_accel(15.0, 30.0, 1, 0.2);
  CHECK(io::dominant_axis(tr) == 2);
  const auto r = io::accel_rr(tr);
  REQUIRE_FALSE(r.rejected);
  CHECK(std::abs(r.rate_bpm - 15.0) <= 0.5);

  // 3.2 s between breaths: 18.75 bpm, 6.25 cycles in 20 s
  const auto gap = io::accel_rr(io::synth_accel(18.75, 20.0, 2, 0.1));
  REQUIRE_FALSE(gap.rejected);
  CHECK(gap.peak_set.mean_peak_to_peak_s == Approx(3.2).margin(0.05));
  CHECK(gap.rate_bpm == Approx(18.75).margin(0.3));
  CHECK(gap.cycles_in_window() == Approx(6.25).margin(0.1));

  auto flat = tr;
  std::fill(flat.x.begin(), flat.x.end(), 0.0);
  std::fill(flat.y.begin(), flat.y.end(), 1.0);
  std::fill(flat.z.begin(), flat.z.end(), 0.5);
  CHECK(io::accel_rr(flat).rejected);
  CHECK(kind_of([] { io::accel_rr(io::synth_accel(15.0, 5.0, 1)); }) == ErrorKind::SignalTooShort);

  const auto dir = scratch("accel");
  io::save_accel_csv((dir / "a.csv").string(), tr);
  const auto back = io::load_accel_csv((dir / "a.csv").string());
  CHECK(back.x.size() == tr.x.size());
  CHECK(io::accel_rr(back).rate_bpm == Approx(r.rate_bpm).epsilon(1e-6));
}

TEST_CASE("accelerometer and audio agree on paired synthetic breathing") {
  for (double bpm : {10.0, 15.0, 22.0}) {
    signal::SynthParams p;
    p.kind = signal::SynthKind::Breath;
    p.bpm = bpm;
    p.seed = 3;
    const auto audio = tidal::respiration_rate(signal::synth(p));
    const auto motion = io::accel_rr(io::synth_accel(bpm, p.duration_s, 3));
    REQUIRE_FALSE(audio.rejected);
    REQUIRE_FALSE(motion.rejected);
    CHECK(std::abs(audio.rate_bpm - motion.rate_bpm) <= 1.0);
  }
}

TEST_CASE("manifest loading and validation") {
  const auto dir = scratch("manifest");
  signal::AudioRecording rec;
  rec.samples.assign(100, 0.1);
  io::save_wav((dir / "s1.wav").string(), rec);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
    return (dir / name).string();
  };

  const auto minimal = write("m.json", R"({"schema_version":"spiro-manifest/1","entries":[
    {"subject_id":"P01","mask_type":"n95","maneuver":"forced","sensor_position":"L1","audio_path":"s1.wav",
     "fvc_L":4.1,"fev1_L":3.4,"pef_Ls":8.2,"health":"healthy"}]})");
  const auto m = io::load_manifest(minimal);
  REQUIRE(m.entries.size() == 1);
  CHECK(m.entries[0].audio_path == (dir / "s1.wav").lexically_normal().string());
  CHECK(*m.entries[0].pef_Ls == 8.2);
  CHECK(m.entries[0].demographics.at("health") == "healthy");

  const auto missing = write("bad.json", R"({"schema_version":"spiro-manifest/1","entries":[
    {"subject_id":"P01","maneuver":"forced","audio_path":"s1.wav","fvc_L":4.1,"fev1_L":3.4}]})");
  try {
    io::load_manifest(missing);
    FAIL("missing pef accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ValidationError);
    CHECK(std::string(e.what()).find("P01") != std::string::npos);
    CHECK(std::string(e.what()).find("pef_Ls") != std::string::npos);
  }

  const auto dup = write("dup.csv",
                         "# spiro-manifest/1\n"
                         "subject_id,maneuver,mask_type,sensor_position,audio_path,rr_bpm\n"
                         "P02,tidal,cloth,C1,s1.wav,14\n"
                         "P02,tidal,cloth,C1,s1.wav,15\n");
  CHECK(kind_of([&] { io::load_manifest(dup); }) == ErrorKind::ValidationError);

  const auto csv = write("ok.csv",
                         "# spiro-manifest/1\n"
                         "subject_id,maneuver,mask_type,sensor_position,audio_path,rr_bpm,label,repetition\n"
                         "P02,tidal,cloth,C1,s1.wav,14,,0\n"
                         "P02,tidal,cloth,C1,s1.wav,,speech,1\n");
  const auto c = io::load_manifest(csv);
  REQUIRE(c.entries.size() == 2);
  CHECK(*c.entries[0].rr_bpm == 14.0);
  CHECK(c.entries[1].label == "speech");

  const auto no_truth = write("nt.json", R"({"schema_version":"spiro-manifest/1","entries":[
    {"subject_id":"P03","maneuver":"tidal","audio_path":"s1.wav"}]})");
  CHECK(kind_of([&] { io::load_manifest(no_truth); }) == ErrorKind::ValidationError);
  const auto version = write("v.json", R"({"schema_version":"spiro-manifest/9","entries":[]})");
  CHECK(kind_of([&] { io::load_manifest(version); }) == ErrorKind::ValidationError);
  const auto gone = write("g.json", R"({"schema_version":"spiro-manifest/1","entries":[
    {"subject_id":"P04","maneuver":"tidal","audio_path":"nope.wav","rr_bpm":12}]})");
  CHECK(kind_of([&] { io::load_manifest(gone); }) == ErrorKind::ValidationError);
  CHECK(kind_of([&] { io::load_manifest(write("broken.json", "{")); }) == ErrorKind::FormatError);

  // manifest_to_json -> load again gives the same entries
  io::write_json(dir / "again.json", io::manifest_to_json(m, dir));
  const auto again = io::load_manifest((dir / "again.json").string());
  CHECK(again.entries[0].key() == m.entries[0].key());
  CHECK(again.entries[0].audio_path == m.entries[0].audio_path);
}

TEST_CASE("report emission") {
  Rng rng(4);
  learn::Dataset d;
  for (int s = 0; s < 4; ++s)
    for (int r = 0; r < 3; ++r) {
      learn::DatasetRow row;
      row.subject_id = "S" + std::to_string(s);
      row.features.names = {"a", "b"};
      row.features.values = {rng.uniform(), rng.uniform()};
      row.target = 2.0 + row.features.values[0] + 0.1 * rng.uniform();
      d.rows.push_back(row);
    }
  learn::NestedOptions opt;
  opt.use_sfs = false;
  const auto rep = learn::nested_loocv(d, learn::ModelKind::Linear, {learn::Hyper{}}, opt);
  const auto j = learn::to_json(rep);
  const auto text = io::json_text(j);
  CHECK(io::json_text(nlohmann::ordered_json::parse(text)) == text);

  const auto csv = io::to_text([&](std::ostream& os) { learn::write_subject_csv(os, rep); });
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4);
  double sum = 0.0;
  for (const auto& [s, e] : rep.per_subject_percent_error) sum += e;
  CHECK(j["mpe"].get<double>() == Approx(sum / 4).margin(1e-9));

  const auto dir = scratch("report");
  io::write_json(dir / "sub" / "r.json", j);
  CHECK(io::json_text(io::read_json(dir / "sub" / "r.json")) != "");
  CHECK(kind_of([&] { io::write_text("/proc/spiro-no-such-dir/r.json", "x"); }) == ErrorKind::IoError);
}
