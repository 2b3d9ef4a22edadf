#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "spiro/app/battery.hpp"
#include "spiro/app/forced.hpp"
#include "spiro/app/positions.hpp"
#include "spiro/app/synth_data.hpp"
#include "spiro/app/tidal_app.hpp"
#include "spiro/io/report.hpp"

using namespace spiro;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("spiro_test_app_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("battery estimate") {
  const auto e = app::estimate_battery({});
  CHECK(e.avg_mA == Approx(1.64).margin(1e-9));
  CHECK(e.days == Approx(240.0 / 1.64 / 11.0).margin(1e-9));
  CHECK(e.days >= 12.5);
  CHECK(e.days <= 13.5);

  app::BatteryModel idle;
  idle.measurements_per_min = 0.0;
  CHECK(app::average_current(idle) == Approx(0.96).margin(1e-12));

  app::BatteryModel big;
  big.capacity_mAh = 480.0;
  CHECK(app::estimate_battery(big).days == Approx(2.0 * e.days).epsilon(1e-12));

  app::BatteryModel drain;
  drain.idle_day_drain = true;
  CHECK(app::estimate_battery(drain).days < e.days);

  app::BatteryModel bad;
  bad.capacity_mAh = 0.0;
  CHECK_THROWS_AS(app::estimate_battery(bad), Error);
  try {
    app::estimate_battery(bad);
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::InvalidInput);
  }
  app::BatteryModel over;
  over.sampling_s = 59.0;
  CHECK_THROWS_AS(app::average_current(over), Error);
}

TEST_CASE("synthetic dataset round trip and forced evaluation") {
  const auto dir = scratch("forced");
  app::SynthDataOptions opt;
  opt.subjects = 5;
  opt.per_subject = 2;
  opt.tidal = false;
  const auto path = app::write_synthetic_dataset(dir, opt);
  const auto m = io::load_manifest(path.string());
  REQUIRE(m.entries.size() == 10);

  const auto data = app::build_forced_data(m.of("forced"));
  CHECK(data.rejected.empty());
  for (const auto& [target, set] : data.sets) {
    CHECK(set.rows.size() == 10);
    CHECK(set.target_kind == target);
  }

  app::ForcedEvalOptions eo;
  eo.kinds = {learn::ModelKind::Linear};
  eo.max_features = 3;
  const auto ev = app::evaluate_forced(data, eo);
  const auto j = app::to_json(ev, eo);
  for (const auto& [target, by_kind] : ev.reports)
    for (const auto& [kind, rep] : by_kind) {
      REQUIRE(rep.per_subject_percent_error.size() == 5);
      double sum = 0.0;
      for (const auto& [s, e] : rep.per_subject_percent_error) sum += e;
      CHECK(rep.mpe == Approx(sum / 5.0).margin(1e-9));
      CHECK(rep.predictions.size() == 10);
    }
  CHECK(io::json_text(j) == io::json_text(app::to_json(app::evaluate_forced(data, eo), eo)));

  app::ForcedTrainOptions to;
  to.sfs.max_features = 3;
  const auto model = app::train_forced(data.sets.at(features::TargetVariant::PEF), learn::ModelKind::Linear, to);
  CHECK(model.selected_features.size() <= 3);
  const auto est = app::estimate_forced(io::load_wav(m.entries[0].audio_path),
                                        {{features::TargetVariant::PEF, model}});
  REQUIRE(est.analysis.verdict.accepted);
  CHECK(est.values.at(features::TargetVariant::PEF) > 0.0);
}

TEST_CASE("identical audio at every position gives identical errors") {
  const auto dir = scratch("positions");
  app::SynthDataOptions opt;
  opt.subjects = 4;
  opt.per_subject = 2;
  opt.tidal_per_class = 2;
  opt.positions = {"L1", "C1", "R1"};
  const auto m = io::load_manifest(app::write_synthetic_dataset(dir, opt).string());

  app::ForcedTrainOptions to;
  to.sfs.max_features = 3;
  const auto t = app::position_study(m, learn::ModelKind::Linear, to);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.warnings.size() == 2);  // L3 and R3 absent
  CHECK(t.rows[0].position == "C1");
  CHECK(t.rows[0].forced_mpe.size() == 3);
  CHECK(t.rows[0].forced_mpe == t.rows[1].forced_mpe);
  REQUIRE(t.rows[0].tidal_mae);
  CHECK(*t.rows[0].tidal_mae == *t.rows[1].tidal_mae);
  CHECK(*t.rows[0].tidal_mae <= 1.0);
  const auto j = app::to_json(t);
  CHECK(j["positions"].size() == 2);
}

TEST_CASE("tidal manifest adapters") {
  const auto dir = scratch("tidal");
  app::SynthDataOptions opt;
  opt.forced = false;
  opt.tidal_per_class = 2;
  const auto m = io::load_manifest(app::write_synthetic_dataset(dir, opt).string());
  const auto corpus = app::tidal_corpus(m);
  CHECK(corpus.size() == 6);
  const auto breaths = app::breathing_only(corpus);
  REQUIRE(breaths.size() == 2);
  for (const auto* e : m.of("tidal")) {
    if (e->label != "tidal") continue;
    auto no_rr = *e;
    no_rr.rr_bpm.reset();
    CHECK(std::abs(app::reference_rate(no_rr) - *e->rr_bpm) <= 0.5);
  }
  CHECK_THROWS_AS(app::tidal_corpus(io::Manifest{}), Error);
}
