#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "podsim/battery.hpp"
#include "podsim/busnet.hpp"
#include "podsim/inverter.hpp"

namespace podsim {

/// Optional injected battery fault, timed in seconds on the trace clock.
struct BatteryFaultConfig {
    FaultKind kind = FaultKind::abrupt_dip;
    double at_s = 0.0;
    double magnitude = 0.0;
    int cell = 2;

    bool operator==(const BatteryFaultConfig&) const = default;
};

/// [battery] section.
struct BatteryConfig {
    bool enabled = true;
    double nominal_v = 3.3;
    double trace_rate_hz = 100.0;
    double common_ripple = 0.02;
    double ripple_period_s = 1.0;
    double cell_noise_std = 0.002;
    std::size_t window = 100;
    double base_threshold = 0.9;
    double base_rate_hz = 100.0;
    std::vector<RateBand> rpm_bands;
    std::vector<RateBand> velocity_bands;
    std::vector<RateBand> accel_bands;
    std::optional<BatteryFaultConfig> fault;

    bool operator==(const BatteryConfig&) const = default;
};

/// [bus] section.
struct BusSectionConfig {
    std::size_t bandwidth = 8;
    std::size_t capacity = 64;
    double brake_decel = 20.0;
    double stop_velocity_tol = 1.0;
    std::size_t telemetry_load = 0;  ///< extra telemetry publishes per tick (stress knob)
    bool telemetry_modules = true;   ///< front/rear housekeeping relays on the bus
    PriorityMap priorities;

    bool operator==(const BusSectionConfig&) const = default;
};

/// Fully parsed scenario.  Every field has a working default, so the minimal
/// valid document is empty; the reference scenario shipped in scenarios/
/// spells the interesting ones out.
struct ScenarioConfig {
    std::vector<std::uint64_t> seeds{0};

    // [trajectory]
    double peak_accel = 260.0;
    std::size_t n_steps = 120;
    double dt = 1.0;
    std::size_t decel_start = 0;  ///< 0 = automatic split at 60% of the run

    // [sensors.imu]
    double imu_noise_std = 10.0;
    // [sensors.tachometer]
    double wheel_radius = 1.0;
    double tacho_noise_std = 10.0;
    // [sensors.encoder]
    double counts_per_rev = 1024.0;
    double encoder_wheel_radius = 1.0;
    double encoder_noise_std = 16384.0;
    // [sensors.fiducial]
    bool fiducial_enabled = true;
    double fiducial_spacing = 30.48;
    double marker_var = 0.01;

    // [filter] — standard deviations; squared into variances when the
    // pipeline is built.  Process/measurement naming follows the estimation
    // module (R = process, Q = measurement).
    double accel_process_std = 5.0;
    double accel_meas_std = 10.0;
    double velocity_process_std = 35.0;
    double velocity_meas_std = 10.0;
    double position_process_std = 200.0;
    double position_meas_std = 16384.0;

    BatteryConfig battery;
    BusSectionConfig bus;
    std::optional<InverterConfig> inverter;  ///< set when an [inverter] section exists

    // [output]
    std::string output_dir = "out";
    std::string prefix = "run";

    bool operator==(const ScenarioConfig&) const = default;
};

/// Outcome of parsing: `config` is set iff `errors` is empty.  Every error
/// names the offending key (section.key) or line.
struct ParseResult {
    std::optional<ScenarioConfig> config;
    std::vector<std::string> errors;
};

/// Parses the flat sectioned key-value format (see the shipped scenarios for
/// the full key list).  Strict: unknown sections, unknown keys, duplicate
/// keys, and out-of-range values are all reported, never ignored.
ParseResult parse_config(const std::string& text);

/// Reads and parses a config file; file-system problems are reported in the
/// error list like any other problem.
ParseResult parse_config_file(const std::filesystem::path& path);

/// Canonical text form; parse_config(serialize_config(cfg)) reproduces `cfg`
/// exactly (doubles are printed with shortest round-trip precision).
std::string serialize_config(const ScenarioConfig& cfg);

}  // namespace podsim
