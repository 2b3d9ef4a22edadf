#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spiro/error.hpp"

using namespace spiro;
namespace fs = std::filesystem;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    const auto d = fs::temp_directory_path() / "spiro_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI inside root() and returns its exit status.
int run_cli(const std::string& args) {
  const std::string cmd = "cd \"" + root().string() + "\" && \"" SPIRO_CLI_PATH "\" " + args + " > last.txt 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::string last_output() {
  std::ifstream in(root() / "last.txt");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::set<std::string> entries() {
  std::set<std::string> out;
  for (const auto& e : fs::directory_iterator(root())) out.insert(e.path().filename().string());
  return out;
}

}  // namespace

TEST_CASE("battery command and exit codes") {
  REQUIRE(run_cli("battery") == 0);
  const auto j = nlohmann::json::parse(last_output());
  CHECK(j["avg_mA"].get<double>() == Catch::Approx(1.64).margin(1e-9));
  CHECK(j["days"].get<double>() == Catch::Approx(13.3).margin(0.01));
  CHECK(run_cli("battery --capacity-mah 0") == exit_code(ErrorKind::InvalidInput));
  CHECK(run_cli("battery --per-min 0") == 0);
  CHECK(nlohmann::json::parse(last_output())["avg_mA"].get<double>() == Catch::Approx(0.96));
  CHECK(run_cli("forced eval --no-such-flag") == 1);
  CHECK(run_cli("") == 1);
}

TEST_CASE("forced and tidal commands end to end") {
  REQUIRE(run_cli("synth --out data --subjects 3 --per-subject 2 --per-class 4 --duration 12 --seed 3") == 0);
  REQUIRE(run_cli("synth --kind noise --duration 8 --out wav") == 0);
  REQUIRE(run_cli("synth --kind forced --seed 5 --out wav") == 0);
  REQUIRE(run_cli("synth --kind breath --bpm 15 --out wav") == 0);

  const auto before = entries();
  REQUIRE(run_cli("forced train --manifest data/manifest.json --out out/fm --estimator linear --max-features 3") == 0);
  CHECK(entries().size() == before.size() + 1);  // only out/ (and the captured log) appeared
  for (const char* f : {"pef.json", "fev1.json", "fvc.json", "train.json"}) CHECK(fs::exists(root() / "out/fm" / f));

  REQUIRE(run_cli("forced analyze --model out/fm --input wav/forced.wav --out out/fa") == 0);
  const auto a = nlohmann::json::parse(last_output());
  CHECK(a["shape_verdict"] == "accepted");
  for (const char* k : {"PEF_estimate", "FEV1_estimate", "FVC_estimate"}) CHECK(a[k].get<double>() > 0.0);
  CHECK(fs::exists(root() / "out/fa/fv_curve.csv"));
  CHECK(run_cli("forced analyze --model out/fm --input wav/noise.wav --out out/fn") ==
        exit_code(ErrorKind::RejectedManeuver));

  REQUIRE(run_cli("tidal train --manifest data/manifest.json --out out/tm --no-search --folds 2") == 0);
  REQUIRE(run_cli("tidal classify --model out/tm/cnn.json --input wav/noise.wav --out out/tc") == 0);
  CHECK(nlohmann::json::parse(last_output())["label"] == "noise");
  CHECK(run_cli("tidal rate --input wav/breath.wav --out out/r0") == exit_code(ErrorKind::InvalidInput));
  CHECK(run_cli("tidal rate --model out/tm/cnn.json --input wav/noise.wav --out out/r1") ==
        exit_code(ErrorKind::InvalidInput));
  REQUIRE(run_cli("tidal rate --force --input wav/breath.wav --out out/r2") == 0);
  CHECK(std::abs(nlohmann::json::parse(last_output())["rate_bpm"].get<double>() - 15.0) <= 0.5);

  REQUIRE(run_cli("tidal study --manifest data/manifest.json --out out/st --folds 2 --format csv") == 0);
  std::ifstream study(root() / "out/st/study.csv");
  std::string line;
  int rows = -1;
  while (std::getline(study, line)) ++rows;
  CHECK(rows == 5);

  REQUIRE(run_cli("forced eval --manifest data/manifest.json --out out/e1 --estimators linear --max-features 2") == 0);
  std::ofstream(root() / "run.ini") << "manifest=data/manifest.json\nout=out/e2\nestimators=linear\nmax-features=2\n";
  REQUIRE(run_cli("forced eval --config run.ini") == 0);
  std::ifstream e1(root() / "out/e1/eval.json"), e2(root() / "out/e2/eval.json");
  std::stringstream s1, s2;
  s1 << e1.rdbuf();
  s2 << e2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(nlohmann::json::parse(s1.str())["targets"]["PEF"]["linear"]["per_subject_percent_error"].size() == 3);
}
