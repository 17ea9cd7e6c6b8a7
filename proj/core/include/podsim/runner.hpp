#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "podsim/busnet.hpp"
#include "podsim/estimation.hpp"
#include "podsim/scenario.hpp"
#include "podsim/world.hpp"

namespace podsim {

/// Per-parameter error summary of one run: raw gain-corrected sensor readout
/// vs ground truth, and filtered estimate vs ground truth.
struct RmseSummary {
    double raw_a = 0.0;
    double kf_a = 0.0;
    double raw_v = 0.0;
    double kf_v = 0.0;
    double raw_x = 0.0;
    double kf_x = 0.0;
};

/// Everything measured for one seed.
struct SeedRunResult {
    std::uint64_t seed = 0;
    RmseSummary rmse;
    std::vector<GroundTruthState> truth;   ///< per-tick oracle
    std::vector<PoseEstimate> estimates;   ///< per-tick pipeline output
    std::vector<FaultEvent> fault_events;
    std::size_t bus_published = 0;
    std::size_t bus_dropped = 0;
    VehicleMode final_mode = VehicleMode::NOMINAL;

    /// Fault pipeline bookkeeping (set only when the stage was reached).
    std::optional<double> first_fault_t;             ///< detector event time (s)
    std::optional<double> detection_latency_s;       ///< event time - injected time
    std::optional<std::uint64_t> fault_publish_tick; ///< power node publish
    std::optional<std::uint64_t> fault_delivery_tick;
    std::optional<std::uint64_t> braking_tick;
    std::optional<std::int64_t> brake_latency_ticks; ///< braking - delivery

    /// Relative paths (under the output dir) written for this seed.
    std::vector<std::string> files;
};

/// Inverter sub-run results.
struct InverterRunResult {
    double dominant_hz = 0.0;            ///< of the filtered output, DC excluded
    double dominant_unfiltered_hz = 0.0;
    std::vector<std::string> files;
};

/// Full scenario outcome across all configured seeds.
struct RunReport {
    ScenarioConfig config;
    std::vector<SeedRunResult> per_seed;
    std::optional<InverterRunResult> inverter;
    std::vector<std::string> files;  ///< complete manifest, relative to output_dir
    std::string output_dir;
    std::string report_path;  ///< empty when file output is disabled
};

struct RunOptions {
    bool write_files = true;  ///< emit CSVs and the JSON report
};

/// Executes the scenario once per configured seed: world -> sensors ->
/// estimation pipeline -> battery detector -> bus/nodes per tick, then drains
/// the bus.  Writes per-seed CSVs plus a JSON report unless disabled.
/// Any module failure aborts with a diagnostic naming the tick and module.
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options = {});

/// Runs just the inverter leg of a scenario (requires cfg.inverter to be
/// set): synthesize, filter, FFT, and optionally write the waveform/spectrum
/// CSVs into the scenario output directory.
InverterRunResult run_inverter(const ScenarioConfig& cfg, bool write_files = true);

/// Mean/stddev/extremes of one metric across seeds.
struct SweepStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Aggregate statistics over a seed sweep; per-seed rows are retained.
struct SweepSummary {
    std::vector<SeedRunResult> per_seed;
    SweepStats raw_a, kf_a, raw_v, kf_v, raw_x, kf_x;
    std::size_t accel_kf_beats_raw = 0;     ///< seeds with kf_a < raw_a
    std::size_t velocity_kf_beats_raw = 0;  ///< seeds with kf_v < raw_v
};

/// Runs the scenario over seeds 0..n_seeds-1 (replacing the config's seed
/// list) without file output and aggregates the RMSE metrics.
SweepSummary sweep_seeds(ScenarioConfig cfg, std::size_t n_seeds);

/// Aggregates an existing set of per-seed results (exposed for reporting).
SweepSummary summarize(std::vector<SeedRunResult> per_seed);

}  // namespace podsim
