#include <algorithm>
#include <string>
#include <vector>

#include "doctest.h"
#include "podsim/scenario.hpp"

using namespace podsim;

namespace {

bool any_error_mentions(const ParseResult& result, const std::string& needle) {
    return std::any_of(result.errors.begin(), result.errors.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

ScenarioConfig customized() {
    ScenarioConfig cfg;
    cfg.seeds = {3, 14, 159};
    cfg.peak_accel = 120.5;
    cfg.n_steps = 240;
    cfg.dt = 0.25;
    cfg.decel_start = 100;
    cfg.imu_noise_std = 2.5;
    cfg.wheel_radius = 0.3;
    cfg.tacho_noise_std = 1.5;
    cfg.counts_per_rev = 4096.0;
    cfg.encoder_wheel_radius = 0.3;
    cfg.encoder_noise_std = 2048.0;
    cfg.fiducial_enabled = false;
    cfg.fiducial_spacing = 15.24;
    cfg.marker_var = 0.02;
    cfg.accel_process_std = 4.0;
    cfg.velocity_meas_std = 7.5;
    cfg.battery.enabled = true;
    cfg.battery.window = 50;
    cfg.battery.rpm_bands = {{0.0, 0.91, 150.0}, {500.0, 0.95, 400.0}};
    cfg.battery.accel_bands = {{10.0, 0.93, 250.0}};
    cfg.battery.fault = BatteryFaultConfig{FaultKind::short_circuit, 12.5, 0.001, 1};
    cfg.bus.bandwidth = 4;
    cfg.bus.capacity = 32;
    cfg.bus.telemetry_load = 12;
    cfg.bus.telemetry_modules = false;
    cfg.bus.priorities.pose = 2;
    cfg.inverter = InverterConfig{};
    cfg.inverter->modulation = Modulation::pwm_sine;
    cfg.inverter->mod_index = 0.8;
    cfg.inverter->dc_block = true;
    cfg.output_dir = "out/custom";
    cfg.prefix = "case";
    return cfg;
}

}  // namespace

TEST_CASE("an empty document yields the documented defaults") {
    const ParseResult result = parse_config("");
    REQUIRE(result.errors.empty());
    REQUIRE(result.config.has_value());
    CHECK(*result.config == ScenarioConfig{});
    CHECK(result.config->seeds == std::vector<std::uint64_t>{0});
    CHECK(result.config->n_steps == 120);
    CHECK(!result.config->inverter.has_value());
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
    const char* text =
        "# leading comment\n"
        "; alternative comment style\n"
        "\n"
        "seeds =  1, 2 , 3\n"
        "[trajectory]\n"
        "  n_steps = 60\n"
        "\n"
        "[output]\n"
        "prefix = smoke\n";
    const ParseResult result = parse_config(text);
    REQUIRE(result.config.has_value());
    CHECK(result.config->seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(result.config->n_steps == 60);
    CHECK(result.config->prefix == "smoke");
}

TEST_CASE("serialization round-trips every field exactly") {
    const ScenarioConfig cfg = customized();
    const std::string text = serialize_config(cfg);
    const ParseResult result = parse_config(text);
    REQUIRE_MESSAGE(result.config.has_value(),
                    (result.errors.empty() ? "" : result.errors.front()));
    CHECK(*result.config == cfg);
    // and the canonical form is a fixed point
    CHECK(serialize_config(*result.config) == text);
}

TEST_CASE("defaults round-trip as well") {
    const ScenarioConfig cfg;
    const ParseResult result = parse_config(serialize_config(cfg));
    REQUIRE(result.config.has_value());
    CHECK(*result.config == cfg);
}

TEST_CASE("unknown sections and keys are reported by name") {
    ParseResult result = parse_config("[warp_drive]\nflux = 1\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "warp_drive"));

    result = parse_config("[trajectory]\nwarp_factor = 9\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "trajectory.warp_factor"));

    result = parse_config("banana = true\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "banana"));
}

TEST_CASE("duplicate keys are rejected") {
    const ParseResult result = parse_config("[trajectory]\ndt = 1\ndt = 2\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "trajectory.dt"));
    CHECK(any_error_mentions(result, "duplicate"));
}

TEST_CASE("malformed values are rejected with the offending key") {
    ParseResult result = parse_config("[trajectory]\ndt = fast\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "trajectory.dt"));

    result = parse_config("[battery]\nrpm_bands = 0:0.9\n");  // missing the rate
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "battery.rpm_bands"));

    result = parse_config("[sensors.fiducial]\nenabled = maybe\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "sensors.fiducial.enabled"));

    result = parse_config("seeds = 1, two\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "seeds"));
}

TEST_CASE("semantic violations are collected, not thrown") {
    const char* text =
        "[trajectory]\n"
        "dt = -1\n"
        "n_steps = 1\n"
        "[sensors.imu]\n"
        "noise_std = -3\n";
    const ParseResult result = parse_config(text);
    CHECK(!result.config.has_value());
    CHECK(result.errors.size() >= 3);
    CHECK(any_error_mentions(result, "trajectory.dt"));
    CHECK(any_error_mentions(result, "trajectory.n_steps"));
    CHECK(any_error_mentions(result, "sensors.imu.noise_std"));
}

TEST_CASE("emergency priorities are pinned to zero") {
    ParseResult result = parse_config("[bus]\npriority_fault = 1\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "priority_fault"));

    result = parse_config("[bus]\npriority_brake_command = 2\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "priority_brake_command"));

    // other kinds may be re-prioritized, but never to the emergency level
    result = parse_config("[bus]\npriority_telemetry = 0\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "priority_telemetry"));
}

TEST_CASE("an inverter section is optional but validated when present") {
    ParseResult result = parse_config("[inverter]\nfs = 100\n");  // under the 20x floor
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "inverter"));

    result = parse_config("[inverter]\nmodulation = pwm_sine\nmod_index = 0.7\n");
    REQUIRE(result.config.has_value());
    REQUIRE(result.config->inverter.has_value());
    CHECK(result.config->inverter->modulation == Modulation::pwm_sine);
    CHECK(result.config->inverter->mod_index == 0.7);
}

TEST_CASE("battery fault details require a fault kind") {
    ParseResult result = parse_config("[battery]\nfault_kind = none\nfault_at_s = 3\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "fault_kind"));

    result = parse_config(
        "[battery]\nfault_kind = abrupt_dip\nfault_at_s = 3\nfault_magnitude = 0.5\n");
    REQUIRE(result.config.has_value());
    REQUIRE(result.config->battery.fault.has_value());
    CHECK(result.config->battery.fault->kind == FaultKind::abrupt_dip);
    CHECK(result.config->battery.fault->at_s == 3.0);
    CHECK(result.config->battery.fault->cell == 2);
}

TEST_CASE("band lists accept the explicit 'none'") {
    const ParseResult result = parse_config("[battery]\nrpm_bands = none\n");
    REQUIRE(result.config.has_value());
    CHECK(result.config->battery.rpm_bands.empty());
}

TEST_CASE("an invalid adaptive policy is a config error") {
    const ParseResult result =
        parse_config("[battery]\nbase_threshold = 0.9\nrpm_bands = 0:0.5:50\n");
    CHECK(!result.config.has_value());
    CHECK(any_error_mentions(result, "policy"));
}

TEST_CASE("a missing config file is reported, not thrown") {
    const ParseResult result = parse_config_file("/nonexistent/path/sim.ini");
    CHECK(!result.config.has_value());
    REQUIRE(result.errors.size() == 1);
    CHECK(any_error_mentions(result, "/nonexistent/path/sim.ini"));
}

TEST_CASE("the shipped scenarios parse cleanly") {
    const char* files[] = {"baseline.ini", "zero_noise.ini", "fault_brake.ini",
                           "inverter.ini"};
    for (const char* file : files) {
        const ParseResult result =
            parse_config_file(std::string(PODSIM_SCENARIO_DIR) + "/" + file);
        CAPTURE(file);
        REQUIRE_MESSAGE(result.config.has_value(),
                        (result.errors.empty() ? "" : result.errors.front()));
    }

    const ParseResult baseline =
        parse_config_file(std::string(PODSIM_SCENARIO_DIR) + "/baseline.ini");
    CHECK(baseline.config->seeds == std::vector<std::uint64_t>{42});
    CHECK(baseline.config->n_steps == 120);
    CHECK(baseline.config->peak_accel == 260.0);
    CHECK(baseline.config->accel_process_std == 5.0);
    CHECK(baseline.config->velocity_process_std == 35.0);
}
