#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hfepr/config.hpp"
#include "hfepr/pulse.hpp"
#include "hfepr/runner.hpp"
#include "hfepr/svg.hpp"
#include "hfepr/table.hpp"

using namespace hfepr;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = HFEPR_SOURCE_DIR;

std::string slurp(const fs::path& path) {
  std::ifstream file(path, std::ios::binary);
  REQUIRE_MESSAGE(file.good(), path.string());
  std::stringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

ExperimentConfig load_preset(const std::string& name) {
  const ParseResult parsed =
      parse_config(slurp(kSourceDir / "presets" / (name + ".ini")));
  REQUIRE_MESSAGE(parsed.ok(), name);
  return *parsed.config;
}

RunContext scratch_context() {
  RunContext context;
  const fs::path dir = fs::path("runner_scratch");
  fs::create_directories(dir);
  context.output_dir = dir.string();
  context.input_dir = (kSourceDir / "presets").string();
  return context;
}

const std::vector<std::string> kAllPresets = {
    "fig1-sic-epr-9p7ghz", "fig1-sic-epr-336ghz", "fig2-endor-240ghz",
    "fig2-endor-xband",    "fig3-t1-sweep",       "fig3-t1-fit",
    "fig4-dnp-pump-3k",    "fig4-dnp-endor-3k",   "fig4-t1n-arrhenius",
    "fig4-arrhenius-fit",  "fig5-edmr-rabi",      "fig5-epr-rabi",
    "t2-quenching-240ghz"};

}  // namespace

TEST_CASE("runner: every shipped preset parses, runs and reruns identically") {
  const RunContext context = scratch_context();
  for (const auto& name : kAllPresets) {
    CAPTURE(name);
    const ExperimentConfig config = load_preset(name);
    const RunOutcome first = run(config, context);
    const std::string bytes_first = slurp(first.csv_path);
    const RunOutcome second = run(config, context);
    CHECK(slurp(second.csv_path) == bytes_first);
    CHECK(!first.table.columns.empty());
    CHECK(!first.table.rows.empty());
  }
}

TEST_CASE("runner: preset outputs match the committed golden files") {
  const RunContext context = scratch_context();
  for (const auto& name : kAllPresets) {
    CAPTURE(name);
    const ExperimentConfig config = load_preset(name);
    const RunOutcome outcome = run(config, context);
    const fs::path golden = kSourceDir / "tests" / "golden" / config.output;
    REQUIRE_MESSAGE(fs::exists(golden), golden.string());
    CHECK(slurp(outcome.csv_path) == slurp(golden));
  }
}

TEST_CASE("runner: fig5 preset pair shows the EDMR vs EPR contrast") {
  const RunContext context = scratch_context();
  const RunOutcome edmr = run(load_preset("fig5-edmr-rabi"), context);
  Series trace;
  for (const auto& row : edmr.table.rows) trace.emplace_back(row[0], row[1]);
  CHECK(count_resolvable_extrema(trace) >= 5);

  const RunOutcome epr = run(load_preset("fig5-epr-rabi"), context);
  Series echo;
  for (const auto& row : epr.table.rows) echo.emplace_back(row[0], row[1]);
  // Echo trace: normalize against its own early maximum.
  double early_peak = 0.0, late_peak = 0.0;
  for (const auto& [t, y] : echo)
    (t < 5e-6 ? early_peak : late_peak) =
        std::max(t < 5e-6 ? early_peak : late_peak, std::abs(y));
  CHECK(late_peak < 0.3 * early_peak);
}

TEST_CASE("runner: dnp presets reproduce pumping and Arrhenius behaviour") {
  const RunContext context = scratch_context();
  const RunOutcome pump = run(load_preset("fig4-dnp-pump-3k"), context);
  CHECK(pump.table.rows.back()[1] > 0.75);  // P_n approaches +0.98

  const RunOutcome endor = run(load_preset("fig4-dnp-endor-3k"), context);
  CHECK(endor.table.rows.back()[1] < -0.9);  // opposite sign, fast

  const RunOutcome decay = run(load_preset("fig4-t1n-arrhenius"), context);
  REQUIRE(decay.table.rows.size() == 5);
  const double t1n_3k = decay.table.rows.front()[1];
  const double t1n_5k = decay.table.rows.back()[1];
  // Half an hour at 3 K; the 3 K / 5 K ratio sits inside the band a
  // 14 +- 2 K activation energy implies (exp((14 +- 2) * 2/15)).
  CHECK(t1n_3k == doctest::Approx(1800.0).epsilon(0.02));
  CHECK(t1n_3k / t1n_5k > std::exp(12.0 * 2.0 / 15.0));
  CHECK(t1n_3k / t1n_5k < std::exp(16.0 * 2.0 / 15.0));
  CHECK(decay.report.find("dE") != std::string::npos);

  // The Arrhenius fit of the observed times lands at 16.1 K.
  const RunOutcome fit = run(load_preset("fig4-arrhenius-fit"), context);
  REQUIRE(fit.table.labels.size() == 2);
  CHECK(fit.table.labels[1] == "delta_e_k");
  CHECK(fit.table.rows[1][0] == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("runner: fig3 fit preset recovers the generating law") {
  const RunContext context = scratch_context();
  const RunOutcome outcome = run(load_preset("fig3-t1-fit"), context);
  REQUIRE(outcome.table.labels.size() == 4);
  CHECK(outcome.table.labels[1] == "n_exponent");
  CHECK(outcome.table.rows[1][0] > 3.8);
  CHECK(outcome.table.rows[1][0] < 4.2);
  CHECK(outcome.table.rows[3][0] == doctest::Approx(71.9).epsilon(0.10));
  CHECK(outcome.report.find("converged: yes") != std::string::npos);
}

TEST_CASE("runner: seed override lands in the metadata") {
  RunContext context = scratch_context();
  context.seed_override = 777;
  const RunOutcome outcome = run(load_preset("fig2-endor-240ghz"), context);
  CHECK(outcome.table.seed == 777);
  CHECK(slurp(outcome.csv_path).find("# seed=777\n") != std::string::npos);
}

TEST_CASE("runner: failures surface the key path and leave no partial file") {
  ExperimentConfig config;
  config.kind = ExperimentKind::FitArrhenius;
  config.output = "should_not_exist.csv";
  FitArrheniusConfig fit;
  fit.input = "no/such/file.csv";
  config.params = fit;
  RunContext context = scratch_context();
  CHECK_THROWS_AS(run(config, context), std::runtime_error);
  CHECK_FALSE(fs::exists(fs::path(context.output_dir) / config.output));

  // t2 calibration tighter than the floor: the error names the key.
  ExperimentConfig t2;
  t2.kind = ExperimentKind::T2Sweep;
  t2.output = "also_not_written.csv";
  T2SweepConfig sweep;
  sweep.t2_floor_us = 5.0;  // floor shorter than the calibration T2
  sweep.calibrate_t2_us = 6.0;
  t2.params = sweep;
  try {
    run(t2, context);
    FAIL("expected a runtime error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("calibrate_t2_us") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(fs::path(context.output_dir) / t2.output));
}

TEST_CASE("svg: axes from headers, log scale, error paths") {
  ResultTable table;
  table.columns = {"temp_k", "t1_s"};
  for (int i = 1; i <= 40; ++i)
    table.add_row({static_cast<double>(i), std::exp(-i / 4.0) * 1e4});

  PlotSpec spec;
  spec.x_column = "temp_k";
  spec.y_column = "t1_s";
  const std::string svg = render_svg(table, spec);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find(">temp_k</text>") != std::string::npos);
  CHECK(svg.find(">t1_s</text>") != std::string::npos);

  // Four decades on a log axis still renders finite coordinates.
  spec.log_y = true;
  const std::string log_svg = render_svg(table, spec);
  CHECK(log_svg.find("nan") == std::string::npos);
  CHECK(log_svg.find("inf") == std::string::npos);

  PlotSpec missing;
  missing.x_column = "temp_k";
  missing.y_column = "nonexistent";
  try {
    render_svg(table, missing);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("nonexistent") != std::string::npos);
  }

  ResultTable empty;
  empty.columns = {"a", "b"};
  CHECK_THROWS_AS(render_svg(empty, spec), std::invalid_argument);
}
