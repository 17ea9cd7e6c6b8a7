#include "podsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "podsim/csv.hpp"
#include "podsim/inverter.hpp"

namespace podsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Fixed RNG stream ids, one per noise consumer (see GaussianSampler).
constexpr std::uint64_t kStreamImu = 1;
constexpr std::uint64_t kStreamTacho = 2;
constexpr std::uint64_t kStreamEncoder = 3;
constexpr std::uint64_t kStreamCell1 = 4;
constexpr std::uint64_t kStreamCell2 = 5;

constexpr double kTwoPi = 6.28318530717958647692;

/// Runs `fn`, reattributing any failure to the named module (and tick when
/// it is known) so a scenario abort always says where it happened.
template <typename Fn>
auto in_module(const char* module, std::int64_t tick, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        std::string where = std::string("[") + module + "]";
        if (tick >= 0) {
            where = "tick " + std::to_string(tick) + " " + where;
        }
        throw std::runtime_error(where + " " + e.what());
    }
}

TrajectoryProfile make_profile(const ScenarioConfig& cfg) {
    return auto_decel_profile(cfg.peak_accel, cfg.n_steps, cfg.dt, cfg.decel_start);
}

FilterStages make_filter_stages(const ScenarioConfig& cfg) {
    auto sq = [](double s) { return s * s; };
    FilterStages stages;
    stages.accel = NoiseParams{sq(cfg.accel_process_std), sq(cfg.accel_meas_std)};
    stages.velocity = NoiseParams{sq(cfg.velocity_process_std), sq(cfg.velocity_meas_std)};
    stages.position = NoiseParams{sq(cfg.position_process_std), sq(cfg.position_meas_std)};
    return stages;
}

AdaptivePolicy make_policy(const BatteryConfig& bat) {
    return AdaptivePolicy{bat.base_threshold, bat.base_rate_hz, bat.rpm_bands,
                          bat.velocity_bands, bat.accel_bands};
}

std::string seed_file(const ScenarioConfig& cfg, std::uint64_t seed, const char* suffix) {
    return cfg.prefix + "_seed" + std::to_string(seed) + "_" + suffix + ".csv";
}

/// One seed of the tick-loop simulation.
SeedRunResult run_one_seed(const ScenarioConfig& cfg, std::uint64_t seed,
                           bool write_files) {
    SeedRunResult result;
    result.seed = seed;

    const fs::path out_dir(cfg.output_dir);

    // --- static setup -------------------------------------------------------
    const TrajectoryProfile profile =
        in_module("sim-world", -1, [&] { return make_profile(cfg); });
    const std::vector<double> planned =
        in_module("sim-world", -1, [&] { return generate_accel_profile(profile); });

    const SensorSpec imu = imu_spec(cfg.imu_noise_std, kStreamImu);
    const SensorSpec tacho = tachometer_spec(cfg.wheel_radius, cfg.tacho_noise_std,
                                             kStreamTacho);
    const SensorSpec encoder = encoder_spec(cfg.counts_per_rev, cfg.encoder_wheel_radius,
                                            cfg.encoder_noise_std, kStreamEncoder);
    GaussianSampler imu_rng(seed, imu.seed);
    GaussianSampler tacho_rng(seed, tacho.seed);
    GaussianSampler encoder_rng(seed, encoder.seed);

    PoseFilter filter(planned, cfg.dt, make_filter_stages(cfg), ObservationModel{imu.gain},
                      ObservationModel{tacho.gain}, ObservationModel{encoder.gain});

    // Battery trace precomputed for the whole horizon; the voltage profile
    // does not depend on the pod's motion, only the adaptive policy does.
    const BatteryConfig& bat = cfg.battery;
    const std::size_t ticks = cfg.n_steps;
    const std::size_t samples_per_tick =
        bat.enabled
            ? std::max<std::size_t>(
                  1, static_cast<std::size_t>(std::llround(cfg.dt * bat.trace_rate_hz)))
            : 0;
    CellPairTrace trace;
    std::optional<FaultDetector> detector;
    if (bat.enabled) {
        in_module("battery", -1, [&] {
            TraceConfig tc;
            tc.nominal_v = bat.nominal_v;
            tc.dt_sample = cfg.dt / static_cast<double>(samples_per_tick);
            tc.n_samples = ticks * samples_per_tick;
            tc.common_ripple = bat.common_ripple;
            tc.ripple_period_s = bat.ripple_period_s;
            tc.cell_noise_std = bat.cell_noise_std;
            GaussianSampler rng1(seed, kStreamCell1);
            GaussianSampler rng2(seed, kStreamCell2);
            trace = generate_pair_trace(tc, rng1, rng2);
            if (bat.fault && bat.fault->magnitude > 0.0) {
                FaultSpec spec;
                spec.kind = bat.fault->kind;
                spec.at_index = static_cast<std::size_t>(
                    std::llround(bat.fault->at_s / tc.dt_sample));
                if (spec.at_index >= tc.n_samples) {
                    throw std::invalid_argument(
                        "battery fault_at_s lies beyond the simulated horizon");
                }
                spec.magnitude = bat.fault->magnitude;
                trace = inject_fault(trace, spec, bat.fault->cell);
            }
            detector.emplace(0, bat.window, 1.0 / trace.dt_sample, make_policy(bat));
            return 0;
        });
    }

    Bus bus(BusConfig{cfg.bus.bandwidth, cfg.bus.capacity});
    VehicleController vehicle(
        VehicleConfig{cfg.bus.brake_decel, cfg.bus.stop_velocity_tol, cfg.bus.priorities});
    NodeCounters nav_node, power_node, front_node, rear_node;

    // --- per-seed CSV writers ------------------------------------------------
    std::optional<CsvWriter> world_csv, est_csv, summary_csv, battery_csv, fault_csv,
        bus_csv;
    if (write_files) {
        auto open = [&](const char* suffix) {
            const std::string name = seed_file(cfg, seed, suffix);
            result.files.push_back(name);
            return CsvWriter(out_dir / name);
        };
        world_csv.emplace(open("world"));
        world_csv->header({"t", "a_true", "v_true", "x_true", "z_imu", "z_tacho",
                           "z_encoder", "fiducial_flag"});
        est_csv.emplace(open("estimates"));
        est_csv->header({"t", "a_est", "a_var", "v_est", "v_var", "x_est", "x_var", "K_a",
                         "K_v", "K_x"});
        summary_csv.emplace(open("summary"));
        summary_csv->header(
            {"rmse_raw_a", "rmse_kf_a", "rmse_raw_v", "rmse_kf_v", "rmse_raw_x", "rmse_kf_x"});
        if (bat.enabled) {
            battery_csv.emplace(open("battery"));
            battery_csv->header({"t", "v_cell1", "v_cell2"});
            fault_csv.emplace(open("faults"));
            fault_csv->header({"t", "pair_id", "icc", "threshold"});
        }
        bus_csv.emplace(open("bus"));
        bus_csv->header({"tick", "priority", "msg_id", "source", "kind"});
    }

    // --- raw measurement series (gain-corrected) for the RMSE summary -------
    std::vector<double> truth_a, truth_v, truth_x;
    std::vector<double> raw_a, raw_v, raw_x;
    std::vector<double> est_a, est_v, est_x;

    // --- tick loop -----------------------------------------------------------
    GroundTruthState state{0.0, 0.0, 0.0, 0.0};
    std::int64_t fiducial_index = 0;
    bool brake_engaged = false;

    for (std::size_t k = 0; k < ticks; ++k) {
        const auto tick = static_cast<std::uint64_t>(k);

        // 1. The bus hands out last tick's winners; everyone reads the same set.
        const std::vector<BusMessage> delivered =
            in_module("busnet", static_cast<std::int64_t>(k), [&] { return bus.deliver(tick); });
        for (const BusMessage& msg : delivered) {
            if (std::holds_alternative<BrakeCommandPayload>(msg.payload)) {
                brake_engaged = true;
            }
            if (std::holds_alternative<FaultPayload>(msg.payload) &&
                !result.fault_delivery_tick) {
                result.fault_delivery_tick = tick;
            }
        }

        // 2. World step.  A delivered brake command overrides the plan with a
        // constant deceleration, clamped so velocity stops at zero.
        in_module("sim-world", static_cast<std::int64_t>(k), [&] {
            double a = planned[k];
            if (brake_engaged) {
                a = -std::min(cfg.bus.brake_decel, state.v / cfg.dt);
            }
            const double dt = cfg.dt;
            // Same expression shape as integrate_kinematics.
            state.x = state.x + dt * state.v + 0.5 * dt * dt * a;
            state.v = state.v + dt * a;
            state.a = a;
            state.t = static_cast<double>(k + 1) * dt;
            return 0;
        });
        truth_a.push_back(state.a);
        truth_v.push_back(state.v);
        truth_x.push_back(state.x);

        // 3. Sensors observe the new state.
        const SensorReading z_imu = imu_sample(state, imu, imu_rng);
        const SensorReading z_tacho = tachometer_sample(state, tacho, tacho_rng);
        const SensorReading z_encoder = encoder_sample(state, encoder, encoder_rng);
        raw_a.push_back(z_imu.value / imu.gain);
        raw_v.push_back(z_tacho.value / tacho.gain);
        raw_x.push_back(z_encoder.value / encoder.gain);

        // 4. Estimation pipeline, then fiducial recalibration.
        const PoseEstimate est = in_module("estimation", static_cast<std::int64_t>(k), [&] {
            return filter.step(z_imu.value, z_tacho.value, z_encoder.value);
        });
        bool crossed = false;
        if (cfg.fiducial_enabled) {
            in_module("estimation", static_cast<std::int64_t>(k), [&] {
                while (auto event =
                           fiducial_detect(state, cfg.fiducial_spacing, fiducial_index)) {
                    crossed = true;
                    fiducial_index = event->marker_index;
                    filter.recalibrate(*event, cfg.marker_var);
                }
                return 0;
            });
        }
        // The broadcast estimate reflects the recalibrated position.
        PoseEstimate broadcast = est;
        broadcast.pos = filter.position();
        result.estimates.push_back(broadcast);
        est_a.push_back(broadcast.accel.mean);
        est_v.push_back(broadcast.vel.mean);
        est_x.push_back(broadcast.pos.mean);
        result.truth.push_back(state);

        // 5. Nodes publish into the bus (visible from the next tick on).
        in_module("busnet", static_cast<std::int64_t>(k), [&] {
            bus.publish(navigation_node_step(nav_node, tick, broadcast, cfg.bus.priorities),
                        tick);

            if (bat.enabled) {
                std::vector<PairSample> samples;
                samples.reserve(samples_per_tick);
                for (std::size_t i = k * samples_per_tick; i < (k + 1) * samples_per_tick;
                     ++i) {
                    samples.push_back(PairSample{
                        static_cast<double>(i + 1) * trace.dt_sample, trace.x1[i],
                        trace.x2[i]});
                }
                const double rpm =
                    state.v / (kTwoPi * cfg.wheel_radius) * 60.0;  // wheel speed
                const PodState pod{rpm, state.v, std::abs(state.a)};
                std::vector<BusMessage> fault_msgs = power_node_step(
                    power_node, tick, *detector, samples, pod, cfg.bus.priorities);
                for (BusMessage& msg : fault_msgs) {
                    const auto& payload = std::get<FaultPayload>(msg.payload);
                    result.fault_events.push_back(FaultEvent{
                        payload.t, payload.pair_id, payload.icc_value,
                        payload.threshold_used});
                    if (!result.fault_publish_tick) {
                        result.fault_publish_tick = tick;
                        result.first_fault_t = payload.t;
                    }
                    bus.publish(std::move(msg), tick);
                }
            }

            const std::vector<BusMessage> vehicle_out = vehicle.step(tick, delivered);
            for (BusMessage msg : vehicle_out) {
                bus.publish(std::move(msg), tick);
            }

            if (cfg.bus.telemetry_modules) {
                bus.publish(telemetry_message(front_node, NodeId::front_module, tick, 0,
                                              state.v, cfg.bus.priorities),
                            tick);
                bus.publish(telemetry_message(rear_node, NodeId::rear_module, tick, 1,
                                              state.x, cfg.bus.priorities),
                            tick);
            }
            for (std::size_t i = 0; i < cfg.bus.telemetry_load; ++i) {
                bus.publish(telemetry_message(front_node, NodeId::front_module, tick, 2,
                                              static_cast<double>(i), cfg.bus.priorities),
                            tick);
            }
            return 0;
        });

        // 6. Per-tick CSV rows.
        if (write_files) {
            world_csv->row({state.t, state.a, state.v, state.x, z_imu.value, z_tacho.value,
                            z_encoder.value, crossed ? 1.0 : 0.0});
            est_csv->row({broadcast.t, broadcast.accel.mean, broadcast.accel.var,
                          broadcast.vel.mean, broadcast.vel.var, broadcast.pos.mean,
                          broadcast.pos.var, broadcast.gain_a, broadcast.gain_v,
                          broadcast.gain_x});
        }
    }

    // Drain the bus so late publishes still reach the vehicle (its own
    // outbox is no longer published: the run horizon has ended).
    std::uint64_t flush_tick = ticks;
    while (bus.pending() > 0) {
        const std::vector<BusMessage> delivered = bus.deliver(flush_tick);
        if (!result.fault_delivery_tick) {
            for (const BusMessage& msg : delivered) {
                if (std::holds_alternative<FaultPayload>(msg.payload)) {
                    result.fault_delivery_tick = flush_tick;
                }
            }
        }
        vehicle.step(flush_tick, delivered);
        ++flush_tick;
    }

    // --- summary metrics -----------------------------------------------------
    result.rmse.raw_a = rmse(raw_a, truth_a);
    result.rmse.kf_a = rmse(est_a, truth_a);
    result.rmse.raw_v = rmse(raw_v, truth_v);
    result.rmse.kf_v = rmse(est_v, truth_v);
    result.rmse.raw_x = rmse(raw_x, truth_x);
    result.rmse.kf_x = rmse(est_x, truth_x);
    result.bus_published = bus.published();
    result.bus_dropped = bus.dropped();
    result.final_mode = vehicle.mode();
    if (vehicle.braking_tick()) {
        result.braking_tick = vehicle.braking_tick();
        if (result.fault_delivery_tick) {
            result.brake_latency_ticks =
                static_cast<std::int64_t>(*result.braking_tick) -
                static_cast<std::int64_t>(*result.fault_delivery_tick);
        }
    }
    if (result.first_fault_t && bat.enabled && bat.fault) {
        result.detection_latency_s = *result.first_fault_t - bat.fault->at_s;
    }

    // --- bulk CSV bodies -----------------------------------------------------
    if (write_files) {
        summary_csv->row({result.rmse.raw_a, result.rmse.kf_a, result.rmse.raw_v,
                          result.rmse.kf_v, result.rmse.raw_x, result.rmse.kf_x});
        if (bat.enabled) {
            for (std::size_t i = 0; i < trace.x1.size(); ++i) {
                battery_csv->row({static_cast<double>(i + 1) * trace.dt_sample, trace.x1[i],
                                  trace.x2[i]});
            }
            for (const FaultEvent& event : result.fault_events) {
                fault_csv->row({event.t, static_cast<double>(event.pair_id),
                                event.icc_value, event.threshold_used});
            }
        }
        for (const DeliveryRecord& record : bus.log()) {
            bus_csv->raw_row({std::to_string(record.tick),
                              std::to_string(record.msg.priority),
                              std::to_string(record.msg.msg_id),
                              std::string(to_string(record.msg.source)),
                              std::string(to_string(kind_of(record.msg.payload)))});
        }
    }
    return result;
}

json rmse_json(const RmseSummary& rmse) {
    return json{{"raw_a", rmse.raw_a}, {"kf_a", rmse.kf_a},   {"raw_v", rmse.raw_v},
                {"kf_v", rmse.kf_v},   {"raw_x", rmse.raw_x}, {"kf_x", rmse.kf_x}};
}

}  // namespace

InverterRunResult run_inverter(const ScenarioConfig& cfg, bool write_files) {
    if (!cfg.inverter) {
        throw std::invalid_argument("scenario has no [inverter] section");
    }
    const InverterConfig& inv = *cfg.inverter;
    InverterRunResult result;

    const Waveform raw = generate_waveform(inv);
    Waveform filtered = rc_lowpass(raw, inv.filter_r, inv.filter_c);
    if (inv.dc_block) {
        // Position the blocker well below the fundamental.
        const double rc = 1.0 / (kTwoPi * inv.dc_block_cutoff_hz);
        filtered = rc_highpass(filtered, rc, 1.0);
    }
    const Spectrum raw_spec = fft_spectrum(raw);
    const Spectrum filt_spec = fft_spectrum(filtered);
    result.dominant_unfiltered_hz = dominant_frequency(raw_spec, true);
    result.dominant_hz = dominant_frequency(filt_spec, true);

    if (write_files) {
        const fs::path out_dir(cfg.output_dir);
        auto dump_wave = [&](const char* name, const Waveform& w) {
            const std::string file = cfg.prefix + "_inverter_" + name + ".csv";
            CsvWriter csv(out_dir / file);
            csv.header({"t", "value"});
            for (std::size_t i = 0; i < w.samples.size(); ++i) {
                csv.row({static_cast<double>(i) / w.fs, w.samples[i]});
            }
            result.files.push_back(file);
        };
        auto dump_spec = [&](const char* name, const Spectrum& s) {
            const std::string file = cfg.prefix + "_inverter_" + name + ".csv";
            CsvWriter csv(out_dir / file);
            csv.header({"f", "value"});
            for (std::size_t k = 0; k < s.magnitudes.size(); ++k) {
                csv.row({static_cast<double>(k) * s.bin_hz, s.magnitudes[k]});
            }
            result.files.push_back(file);
        };
        dump_wave("waveform", raw);
        dump_wave("waveform_filtered", filtered);
        dump_spec("spectrum", raw_spec);
        dump_spec("spectrum_filtered", filt_spec);
    }
    return result;
}

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& options) {
    if (cfg.seeds.empty()) {
        throw std::invalid_argument("scenario needs at least one seed");
    }
    RunReport report;
    report.config = cfg;
    report.output_dir = cfg.output_dir;

    for (std::uint64_t seed : cfg.seeds) {
        SeedRunResult seed_result = run_one_seed(cfg, seed, options.write_files);
        for (const std::string& file : seed_result.files) {
            report.files.push_back(file);
        }
        report.per_seed.push_back(std::move(seed_result));
    }

    if (cfg.inverter) {
        report.inverter =
            in_module("inverter", -1, [&] { return run_inverter(cfg, options.write_files); });
        for (const std::string& file : report.inverter->files) {
            report.files.push_back(file);
        }
    }

    if (options.write_files) {
        json doc;
        doc["seeds"] = cfg.seeds;
        doc["n_steps"] = cfg.n_steps;
        json per_seed = json::array();
        for (const SeedRunResult& r : report.per_seed) {
            json entry;
            entry["seed"] = r.seed;
            entry["rmse"] = rmse_json(r.rmse);
            entry["fault_events"] = r.fault_events.size();
            entry["final_mode"] = std::string(to_string(r.final_mode));
            entry["bus_published"] = r.bus_published;
            entry["bus_dropped"] = r.bus_dropped;
            if (r.detection_latency_s) entry["detection_latency_s"] = *r.detection_latency_s;
            if (r.fault_delivery_tick) entry["fault_delivery_tick"] = *r.fault_delivery_tick;
            if (r.braking_tick) entry["braking_tick"] = *r.braking_tick;
            if (r.brake_latency_ticks) entry["brake_latency_ticks"] = *r.brake_latency_ticks;
            entry["files"] = r.files;
            per_seed.push_back(std::move(entry));
        }
        doc["per_seed"] = std::move(per_seed);
        if (report.inverter) {
            doc["inverter"] = {{"dominant_hz", report.inverter->dominant_hz},
                               {"dominant_unfiltered_hz",
                                report.inverter->dominant_unfiltered_hz},
                               {"files", report.inverter->files}};
        }
        doc["files"] = report.files;

        const std::string report_name = cfg.prefix + "_report.json";
        const fs::path report_path = fs::path(cfg.output_dir) / report_name;
        if (report_path.has_parent_path()) {
            fs::create_directories(report_path.parent_path());
        }
        std::ofstream out(report_path);
        if (!out) {
            throw std::runtime_error("cannot write report: " + report_path.string());
        }
        out << doc.dump(2) << "\n";
        report.files.push_back(report_name);
        report.report_path = report_path.string();
    }
    return report;
}

SweepSummary summarize(std::vector<SeedRunResult> per_seed) {
    if (per_seed.empty()) {
        throw std::invalid_argument("summary needs at least one run");
    }
    SweepSummary summary;

    auto stats_of = [&](auto pick) {
        SweepStats stats;
        double sum = 0.0;
        stats.min = pick(per_seed.front());
        stats.max = stats.min;
        for (const SeedRunResult& r : per_seed) {
            const double v = pick(r);
            sum += v;
            stats.min = std::min(stats.min, v);
            stats.max = std::max(stats.max, v);
        }
        stats.mean = sum / static_cast<double>(per_seed.size());
        double sq = 0.0;
        for (const SeedRunResult& r : per_seed) {
            const double d = pick(r) - stats.mean;
            sq += d * d;
        }
        stats.stddev = std::sqrt(sq / static_cast<double>(per_seed.size()));
        return stats;
    };

    summary.raw_a = stats_of([](const SeedRunResult& r) { return r.rmse.raw_a; });
    summary.kf_a = stats_of([](const SeedRunResult& r) { return r.rmse.kf_a; });
    summary.raw_v = stats_of([](const SeedRunResult& r) { return r.rmse.raw_v; });
    summary.kf_v = stats_of([](const SeedRunResult& r) { return r.rmse.kf_v; });
    summary.raw_x = stats_of([](const SeedRunResult& r) { return r.rmse.raw_x; });
    summary.kf_x = stats_of([](const SeedRunResult& r) { return r.rmse.kf_x; });
    for (const SeedRunResult& r : per_seed) {
        if (r.rmse.kf_a < r.rmse.raw_a) {
            ++summary.accel_kf_beats_raw;
        }
        if (r.rmse.kf_v < r.rmse.raw_v) {
            ++summary.velocity_kf_beats_raw;
        }
    }
    summary.per_seed = std::move(per_seed);
    return summary;
}

SweepSummary sweep_seeds(ScenarioConfig cfg, std::size_t n_seeds) {
    if (n_seeds < 1) {
        throw std::invalid_argument("sweep needs at least one seed");
    }
    cfg.seeds.clear();
    for (std::size_t i = 0; i < n_seeds; ++i) {
        cfg.seeds.push_back(static_cast<std::uint64_t>(i));
    }
    cfg.inverter.reset();  // seed-independent, pointless to repeat per seed
    RunOptions options;
    options.write_files = false;
    RunReport report = run_scenario(cfg, options);
    return summarize(std::move(report.per_seed));
}

}  // namespace podsim
