#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "podsim/runner.hpp"

using namespace podsim;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config(const std::string& out_dir) {
    ScenarioConfig cfg;
    cfg.seeds = {5};
    cfg.peak_accel = 50.0;
    cfg.n_steps = 40;
    cfg.dt = 1.0;
    cfg.battery.enabled = true;
    cfg.battery.window = 20;
    cfg.battery.trace_rate_hz = 50.0;
    cfg.output_dir = out_dir;
    cfg.prefix = "t";
    return cfg;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("a run writes every file it lists in the report") {
    TempDir tmp("podsim_runner_manifest");
    const ScenarioConfig cfg = small_config(tmp.path.string());
    const RunReport report = run_scenario(cfg);

    CHECK(report.per_seed.size() == 1);
    CHECK(!report.report_path.empty());
    CHECK(fs::exists(report.report_path));
    CHECK(!report.files.empty());
    for (const std::string& file : report.files) {
        CAPTURE(file);
        CHECK(fs::exists(fs::path(report.output_dir) / file));
    }
    // world, estimates, summary, battery, faults, bus per seed
    CHECK(report.per_seed[0].files.size() == 6);
}

TEST_CASE("the same config and seed reproduce byte-identical outputs") {
    TempDir tmp_a("podsim_runner_det_a");
    TempDir tmp_b("podsim_runner_det_b");
    const RunReport a = run_scenario(small_config(tmp_a.path.string()));
    const RunReport b = run_scenario(small_config(tmp_b.path.string()));

    REQUIRE(a.files == b.files);
    for (const std::string& file : a.files) {
        CAPTURE(file);
        CHECK(slurp(tmp_a.path / file) == slurp(tmp_b.path / file));
    }
}

TEST_CASE("disabling file output still produces the full in-memory result") {
    ScenarioConfig cfg = small_config("should_not_be_created_by_runner");
    RunOptions options;
    options.write_files = false;
    const RunReport report = run_scenario(cfg, options);
    CHECK(report.report_path.empty());
    CHECK(report.files.empty());
    CHECK(!fs::exists("should_not_be_created_by_runner"));
    REQUIRE(report.per_seed.size() == 1);
    const SeedRunResult& seed = report.per_seed[0];
    CHECK(seed.truth.size() == 40);
    CHECK(seed.estimates.size() == 40);
    CHECK(seed.rmse.kf_a > 0.0);
    CHECK(seed.bus_published > 0);
}

TEST_CASE("each configured seed runs once, in order") {
    ScenarioConfig cfg = small_config("");
    cfg.seeds = {9, 2, 9};
    RunOptions options;
    options.write_files = false;
    const RunReport report = run_scenario(cfg, options);
    REQUIRE(report.per_seed.size() == 3);
    CHECK(report.per_seed[0].seed == 9);
    CHECK(report.per_seed[1].seed == 2);
    CHECK(report.per_seed[2].seed == 9);
    // identical seeds give identical metrics
    CHECK(report.per_seed[0].rmse.kf_x == report.per_seed[2].rmse.kf_x);
    CHECK(report.per_seed[0].rmse.kf_x != report.per_seed[1].rmse.kf_x);
}

TEST_CASE("a scenario without seeds is refused") {
    ScenarioConfig cfg = small_config("");
    cfg.seeds.clear();
    CHECK_THROWS_AS(run_scenario(cfg), std::invalid_argument);
}

TEST_CASE("module failures name the module in the diagnostic") {
    ScenarioConfig cfg = small_config("");
    cfg.battery.fault = BatteryFaultConfig{FaultKind::abrupt_dip, 1e6, 0.5, 2};
    RunOptions options;
    options.write_files = false;
    CHECK_THROWS_WITH_AS(run_scenario(cfg, options),
                         doctest::Contains("[battery]"), std::runtime_error);
}

TEST_CASE("an injected dip is detected and escalates to a stop") {
    ScenarioConfig cfg;
    cfg.seeds = {7};
    cfg.peak_accel = 10.0;
    cfg.n_steps = 120;
    cfg.dt = 1.0;
    cfg.tacho_noise_std = 5.0;
    cfg.velocity_meas_std = 5.0;
    cfg.battery.enabled = true;
    cfg.battery.window = 100;
    cfg.battery.fault = BatteryFaultConfig{FaultKind::abrupt_dip, 30.0, 0.5, 2};
    cfg.bus.stop_velocity_tol = 2.0;
    RunOptions options;
    options.write_files = false;

    const RunReport report = run_scenario(cfg, options);
    const SeedRunResult& seed = report.per_seed[0];
    REQUIRE(seed.fault_events.size() == 1);
    REQUIRE(seed.first_fault_t.has_value());
    CHECK(*seed.first_fault_t > 30.0);
    REQUIRE(seed.detection_latency_s.has_value());
    CHECK(*seed.detection_latency_s <= 1.0);  // within one window
    REQUIRE(seed.fault_delivery_tick.has_value());
    CHECK(*seed.fault_delivery_tick == *seed.fault_publish_tick + 1);
    REQUIRE(seed.brake_latency_ticks.has_value());
    CHECK(*seed.brake_latency_ticks <= 2);
    CHECK(seed.final_mode == VehicleMode::STOPPED);

    // braking pins the true velocity to zero before the run ends
    CHECK(seed.truth.back().v == 0.0);
}

TEST_CASE("the inverter leg needs an inverter section") {
    const ScenarioConfig cfg = small_config("");
    CHECK_THROWS_AS(run_inverter(cfg, false), std::invalid_argument);
}

TEST_CASE("the inverter leg finds the switching fundamental") {
    ScenarioConfig cfg = small_config("");
    cfg.inverter = InverterConfig{};
    const InverterRunResult result = run_inverter(cfg, false);
    CHECK(result.dominant_hz == doctest::Approx(277.77).epsilon(1e-3));
    CHECK(result.dominant_unfiltered_hz == result.dominant_hz);
    CHECK(result.files.empty());
}

TEST_CASE("seed sweeps aggregate the per-seed error metrics") {
    ScenarioConfig cfg = small_config("");
    cfg.battery.enabled = false;
    const SweepSummary summary = sweep_seeds(cfg, 8);
    REQUIRE(summary.per_seed.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(summary.per_seed[i].seed == i);
    }
    CHECK(summary.kf_a.min <= summary.kf_a.mean);
    CHECK(summary.kf_a.mean <= summary.kf_a.max);
    CHECK(summary.kf_a.stddev >= 0.0);
    CHECK(summary.accel_kf_beats_raw <= 8);
    CHECK(summary.velocity_kf_beats_raw <= 8);

    // aggregates recompute from the retained rows
    const SweepSummary again = summarize(summary.per_seed);
    CHECK(again.kf_a.mean == summary.kf_a.mean);
    CHECK(again.accel_kf_beats_raw == summary.accel_kf_beats_raw);
}

TEST_CASE("sweeps leave no files behind") {
    TempDir tmp("podsim_runner_sweep");
    ScenarioConfig cfg = small_config((tmp.path / "sub").string());
    (void)sweep_seeds(cfg, 2);
    CHECK(!fs::exists(tmp.path / "sub"));
}
