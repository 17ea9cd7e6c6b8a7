// podsim - scenario runner for the pod simulation library.
//
// Verbs:
//   podsim run <config>              full multi-seed scenario, CSVs + JSON report
//   podsim sweep <config> --seeds N  statistics over seeds 0..N-1, no file output
//   podsim inverter <config>         inverter leg only, prints the spectrum summary
//   podsim validate <config>         parse + semantic checks, exit 1 on errors

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "podsim/inverter.hpp"
#include "podsim/runner.hpp"
#include "podsim/scenario.hpp"

namespace {

podsim::ScenarioConfig load_or_die(const std::string& path) {
    podsim::ParseResult parsed = podsim::parse_config_file(path);
    if (!parsed.config) {
        std::fprintf(stderr, "%s: invalid configuration\n", path.c_str());
        for (const std::string& err : parsed.errors) {
            std::fprintf(stderr, "  - %s\n", err.c_str());
        }
        std::exit(1);
    }
    return *parsed.config;
}

void print_rmse(const podsim::RmseSummary& rmse) {
    std::printf("    rmse accel    raw %-12.6g kf %-12.6g\n", rmse.raw_a, rmse.kf_a);
    std::printf("    rmse velocity raw %-12.6g kf %-12.6g\n", rmse.raw_v, rmse.kf_v);
    std::printf("    rmse position raw %-12.6g kf %-12.6g\n", rmse.raw_x, rmse.kf_x);
}

int cmd_run(const std::string& path) {
    podsim::ScenarioConfig cfg = load_or_die(path);
    podsim::RunReport report = podsim::run_scenario(cfg);
    for (const podsim::SeedRunResult& seed : report.per_seed) {
        std::printf("seed %llu\n", static_cast<unsigned long long>(seed.seed));
        print_rmse(seed.rmse);
        std::printf("    bus published %zu dropped %zu, vehicle %s\n", seed.bus_published,
                    seed.bus_dropped, std::string(podsim::to_string(seed.final_mode)).c_str());
        if (!seed.fault_events.empty()) {
            std::printf("    battery faults %zu (first at t=%.4g s", seed.fault_events.size(),
                        seed.fault_events.front().t);
            if (seed.detection_latency_s) {
                std::printf(", detection latency %.4g s", *seed.detection_latency_s);
            }
            if (seed.brake_latency_ticks) {
                std::printf(", brake latency %lld ticks",
                            static_cast<long long>(*seed.brake_latency_ticks));
            }
            std::printf(")\n");
        }
    }
    if (report.inverter) {
        std::printf("inverter dominant %.4f Hz (unfiltered %.4f Hz)\n",
                    report.inverter->dominant_hz, report.inverter->dominant_unfiltered_hz);
    }
    std::printf("report: %s\n", report.report_path.c_str());
    return 0;
}

void print_stats(const char* label, const podsim::SweepStats& s) {
    std::printf("  %-6s mean %-12.6g stddev %-12.6g min %-12.6g max %-12.6g\n", label,
                s.mean, s.stddev, s.min, s.max);
}

int cmd_sweep(const std::string& path, std::size_t n_seeds) {
    podsim::ScenarioConfig cfg = load_or_die(path);
    podsim::SweepSummary summary = podsim::sweep_seeds(cfg, n_seeds);
    std::printf("%zu seeds\n", summary.per_seed.size());
    print_stats("raw_a", summary.raw_a);
    print_stats("kf_a", summary.kf_a);
    print_stats("raw_v", summary.raw_v);
    print_stats("kf_v", summary.kf_v);
    print_stats("raw_x", summary.raw_x);
    print_stats("kf_x", summary.kf_x);
    std::printf("filter beats raw: accel %zu/%zu, velocity %zu/%zu\n",
                summary.accel_kf_beats_raw, summary.per_seed.size(),
                summary.velocity_kf_beats_raw, summary.per_seed.size());
    return 0;
}

int cmd_inverter(const std::string& path) {
    podsim::ScenarioConfig cfg = load_or_die(path);
    if (!cfg.inverter) {
        std::fprintf(stderr, "%s: no [inverter] section\n", path.c_str());
        return 1;
    }
    podsim::InverterRunResult result = podsim::run_inverter(cfg);

    const podsim::InverterConfig& inv = *cfg.inverter;
    podsim::Waveform filtered = podsim::rc_lowpass(podsim::generate_waveform(inv),
                                                   inv.filter_r, inv.filter_c);
    if (inv.dc_block) {
        const double rc = 1.0 / (6.28318530717958647692 * inv.dc_block_cutoff_hz);
        filtered = podsim::rc_highpass(filtered, rc, 1.0);
    }
    const podsim::Spectrum spec = podsim::fft_spectrum(filtered);

    std::printf("fundamental %.4f Hz, filter cutoff %.2f Hz\n", inv.f_fundamental,
                podsim::rc_cutoff_hz(inv.filter_r, inv.filter_c));
    std::printf("dominant (filtered) %.4f Hz, dominant (raw) %.4f Hz\n", result.dominant_hz,
                result.dominant_unfiltered_hz);
    std::printf("%-10s %-12s %s\n", "harmonic", "freq (Hz)", "amplitude (V)");
    for (int k = 1; k <= 15; k += 2) {
        const double hz = k * inv.f_fundamental;
        if (hz >= inv.fs / 2.0) {
            break;
        }
        std::printf("%-10d %-12.2f %.6g\n", k, hz, podsim::amplitude_near(spec, hz));
    }
    for (const std::string& file : result.files) {
        std::printf("wrote %s/%s\n", cfg.output_dir.c_str(), file.c_str());
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    podsim::ParseResult parsed = podsim::parse_config_file(path);
    if (!parsed.config) {
        std::printf("%s: INVALID\n", path.c_str());
        for (const std::string& err : parsed.errors) {
            std::printf("  - %s\n", err.c_str());
        }
        return 1;
    }
    std::printf("%s: OK (%zu seeds, %zu steps)\n", path.c_str(), parsed.config->seeds.size(),
                parsed.config->n_steps);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pod simulation scenario runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t n_seeds = 100;

    CLI::App* run = app.add_subcommand("run", "run the scenario for every configured seed");
    run->add_option("config", config_path, "scenario config file")->required();

    CLI::App* sweep = app.add_subcommand("sweep", "aggregate RMSE statistics over seeds 0..N-1");
    sweep->add_option("config", config_path, "scenario config file")->required();
    sweep->add_option("--seeds", n_seeds, "number of seeds")->default_val(100);

    CLI::App* inverter = app.add_subcommand("inverter", "run only the inverter leg");
    inverter->add_option("config", config_path, "scenario config file")->required();

    CLI::App* validate = app.add_subcommand("validate", "check a config file");
    validate->add_option("config", config_path, "scenario config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            return cmd_run(config_path);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config_path, n_seeds);
        }
        if (inverter->parsed()) {
            return cmd_inverter(config_path);
        }
        if (validate->parsed()) {
            return cmd_validate(config_path);
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
