#include "podsim/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include "podsim/csv.hpp"

namespace podsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view s, double& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

bool parse_size(std::string_view s, std::size_t& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

bool parse_int(std::string_view s, int& out) {
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(trim(s.substr(start)));
            break;
        }
        parts.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return parts;
}

/// Collects parse/validation problems and applies typed setters.
struct Reader {
    std::vector<std::string>& errors;

    void fail(const std::string& key, const std::string& why) {
        errors.push_back(key + " " + why);
    }

    void get(const std::string& key, std::string_view value, double& out) {
        if (!parse_double(value, out)) {
            fail(key, "must be a finite number");
        }
    }

    void get(const std::string& key, std::string_view value, std::size_t& out) {
        if (!parse_size(value, out)) {
            fail(key, "must be a non-negative integer");
        }
    }

    void get(const std::string& key, std::string_view value, int& out) {
        if (!parse_int(value, out)) {
            fail(key, "must be an integer");
        }
    }

    void get(const std::string& key, std::string_view value, bool& out) {
        if (value == "true") {
            out = true;
        } else if (value == "false") {
            out = false;
        } else {
            fail(key, "must be 'true' or 'false'");
        }
    }

    void get(const std::string& key, std::string_view value, std::string& out) {
        if (value.empty()) {
            fail(key, "must not be empty");
        } else {
            out = std::string(value);
        }
    }

    void get_seeds(const std::string& key, std::string_view value,
                   std::vector<std::uint64_t>& out) {
        std::vector<std::uint64_t> seeds;
        for (std::string_view part : split(value, ',')) {
            std::uint64_t seed = 0;
            if (!parse_u64(part, seed)) {
                fail(key, "must be a comma-separated list of non-negative integers");
                return;
            }
            seeds.push_back(seed);
        }
        if (seeds.empty()) {
            fail(key, "must list at least one seed");
            return;
        }
        out = std::move(seeds);
    }

    /// Band lists are written as comma-separated min:threshold:rate triples,
    /// e.g. "1000:0.92:200, 3000:0.95:400".  "none" clears the list.
    void get_bands(const std::string& key, std::string_view value,
                   std::vector<RateBand>& out) {
        if (value == "none") {
            out.clear();
            return;
        }
        std::vector<RateBand> bands;
        for (std::string_view triple : split(value, ',')) {
            const auto parts = split(triple, ':');
            RateBand band;
            if (parts.size() != 3 || !parse_double(parts[0], band.min_value) ||
                !parse_double(parts[1], band.threshold) ||
                !parse_double(parts[2], band.rate_hz)) {
                fail(key, "must be a comma-separated list of min:threshold:rate triples");
                return;
            }
            bands.push_back(band);
        }
        out = std::move(bands);
    }
};

void check_semantics(ScenarioConfig& cfg, bool fault_kind_none,
                     bool fault_detail_present, std::vector<std::string>& errors) {
    auto require = [&errors](bool ok, const std::string& message) {
        if (!ok) {
            errors.push_back(message);
        }
    };

    require(cfg.n_steps >= 2, "trajectory.n_steps must be at least 2");
    require(cfg.dt > 0.0, "trajectory.dt must be positive");
    require(std::isfinite(cfg.peak_accel), "trajectory.peak_accel must be finite");
    if (cfg.decel_start != 0) {
        require(cfg.decel_start >= 2 && cfg.decel_start + 2 <= cfg.n_steps,
                "trajectory.decel_start must leave two ramp steps and two trailing steps");
    }

    require(cfg.imu_noise_std >= 0.0, "sensors.imu.noise_std must be >= 0");
    require(cfg.wheel_radius > 0.0, "sensors.tachometer.wheel_radius must be positive");
    require(cfg.tacho_noise_std >= 0.0, "sensors.tachometer.noise_std must be >= 0");
    require(cfg.counts_per_rev > 0.0, "sensors.encoder.counts_per_rev must be positive");
    require(cfg.encoder_wheel_radius > 0.0, "sensors.encoder.wheel_radius must be positive");
    require(cfg.encoder_noise_std >= 0.0, "sensors.encoder.noise_std must be >= 0");
    require(cfg.fiducial_spacing > 0.0, "sensors.fiducial.spacing must be positive");
    require(cfg.marker_var >= 0.0, "sensors.fiducial.marker_var must be >= 0");

    const std::pair<double, const char*> filter_stds[] = {
        {cfg.accel_process_std, "filter.accel_process_std"},
        {cfg.accel_meas_std, "filter.accel_meas_std"},
        {cfg.velocity_process_std, "filter.velocity_process_std"},
        {cfg.velocity_meas_std, "filter.velocity_meas_std"},
        {cfg.position_process_std, "filter.position_process_std"},
        {cfg.position_meas_std, "filter.position_meas_std"}};
    for (const auto& [value, key] : filter_stds) {
        require(value >= 0.0, std::string(key) + " must be >= 0");
    }

    const BatteryConfig& bat = cfg.battery;
    require(bat.nominal_v >= 0.0, "battery.nominal_v must be >= 0");
    require(bat.trace_rate_hz > 0.0, "battery.trace_rate_hz must be positive");
    require(bat.common_ripple >= 0.0, "battery.common_ripple must be >= 0");
    require(bat.ripple_period_s > 0.0, "battery.ripple_period_s must be positive");
    require(bat.cell_noise_std >= 0.0, "battery.cell_noise_std must be >= 0");
    require(bat.window >= 2, "battery.window must be at least 2");
    AdaptivePolicy policy{bat.base_threshold, bat.base_rate_hz, bat.rpm_bands,
                          bat.velocity_bands, bat.accel_bands};
    try {
        validate(policy);
    } catch (const std::invalid_argument& e) {
        errors.push_back(std::string("battery policy invalid: ") + e.what());
    }
    if (cfg.battery.fault) {
        require(cfg.battery.fault->at_s >= 0.0, "battery.fault_at_s must be >= 0");
        require(cfg.battery.fault->magnitude >= 0.0, "battery.fault_magnitude must be >= 0");
        require(cfg.battery.fault->cell == 1 || cfg.battery.fault->cell == 2,
                "battery.fault_cell must be 1 or 2");
    } else if (fault_kind_none && fault_detail_present) {
        errors.push_back(
            "battery.fault_at_s/fault_magnitude/fault_cell require a fault_kind other than 'none'");
    }

    const BusSectionConfig& bus = cfg.bus;
    require(bus.bandwidth >= 1, "bus.bandwidth must be at least 1");
    require(bus.capacity >= 1, "bus.capacity must be at least 1");
    require(bus.brake_decel > 0.0, "bus.brake_decel must be positive");
    require(bus.stop_velocity_tol >= 0.0, "bus.stop_velocity_tol must be >= 0");
    require(bus.priorities.fault == 0, "bus.priority_fault must stay 0 (emergency)");
    require(bus.priorities.brake_command == 0,
            "bus.priority_brake_command must stay 0 (emergency)");
    require(bus.priorities.motor_poll > 0, "bus.priority_motor_poll must be positive");
    require(bus.priorities.pose > 0, "bus.priority_pose must be positive");
    require(bus.priorities.telemetry > 0, "bus.priority_telemetry must be positive");

    if (cfg.inverter) {
        try {
            validate(*cfg.inverter);
        } catch (const std::invalid_argument& e) {
            errors.push_back(std::string("inverter config invalid: ") + e.what());
        }
    }
}

}  // namespace

ParseResult parse_config(const std::string& text) {
    ParseResult result;
    std::vector<std::string>& errors = result.errors;
    Reader reader{errors};

    ScenarioConfig cfg;
    InverterConfig inverter;  // staged; adopted when an [inverter] section appears
    bool inverter_present = false;
    BatteryFaultConfig fault;  // staged likewise
    std::string fault_kind = "none";
    bool fault_detail_present = false;

    std::set<std::string> seen;
    std::string section;  // empty = top level
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#' || line.front() == ';') {
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                errors.push_back("line " + std::to_string(line_no) +
                                 ": malformed section header");
                continue;
            }
            section = std::string(trim(line.substr(1, line.size() - 2)));
            static const std::set<std::string> known = {
                "trajectory",      "sensors.imu",    "sensors.tachometer",
                "sensors.encoder", "sensors.fiducial", "filter",
                "battery",         "bus",            "inverter",
                "output"};
            if (!known.count(section)) {
                errors.push_back("unknown section [" + section + "]");
                section.clear();
                continue;
            }
            if (section == "inverter") {
                inverter_present = true;
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(line_no) + ": empty key");
            continue;
        }
        const std::string qualified = section.empty() ? key : section + "." + key;
        if (!seen.insert(qualified).second) {
            errors.push_back("duplicate key " + qualified);
            continue;
        }

        bool known_key = true;
        if (section.empty()) {
            if (key == "seeds") {
                reader.get_seeds(qualified, value, cfg.seeds);
            } else {
                known_key = false;
            }
        } else if (section == "trajectory") {
            if (key == "peak_accel") reader.get(qualified, value, cfg.peak_accel);
            else if (key == "n_steps") reader.get(qualified, value, cfg.n_steps);
            else if (key == "dt") reader.get(qualified, value, cfg.dt);
            else if (key == "decel_start") reader.get(qualified, value, cfg.decel_start);
            else known_key = false;
        } else if (section == "sensors.imu") {
            if (key == "noise_std") reader.get(qualified, value, cfg.imu_noise_std);
            else known_key = false;
        } else if (section == "sensors.tachometer") {
            if (key == "wheel_radius") reader.get(qualified, value, cfg.wheel_radius);
            else if (key == "noise_std") reader.get(qualified, value, cfg.tacho_noise_std);
            else known_key = false;
        } else if (section == "sensors.encoder") {
            if (key == "counts_per_rev") reader.get(qualified, value, cfg.counts_per_rev);
            else if (key == "wheel_radius") reader.get(qualified, value, cfg.encoder_wheel_radius);
            else if (key == "noise_std") reader.get(qualified, value, cfg.encoder_noise_std);
            else known_key = false;
        } else if (section == "sensors.fiducial") {
            if (key == "enabled") reader.get(qualified, value, cfg.fiducial_enabled);
            else if (key == "spacing") reader.get(qualified, value, cfg.fiducial_spacing);
            else if (key == "marker_var") reader.get(qualified, value, cfg.marker_var);
            else known_key = false;
        } else if (section == "filter") {
            if (key == "accel_process_std") reader.get(qualified, value, cfg.accel_process_std);
            else if (key == "accel_meas_std") reader.get(qualified, value, cfg.accel_meas_std);
            else if (key == "velocity_process_std")
                reader.get(qualified, value, cfg.velocity_process_std);
            else if (key == "velocity_meas_std")
                reader.get(qualified, value, cfg.velocity_meas_std);
            else if (key == "position_process_std")
                reader.get(qualified, value, cfg.position_process_std);
            else if (key == "position_meas_std")
                reader.get(qualified, value, cfg.position_meas_std);
            else known_key = false;
        } else if (section == "battery") {
            BatteryConfig& bat = cfg.battery;
            if (key == "enabled") reader.get(qualified, value, bat.enabled);
            else if (key == "nominal_v") reader.get(qualified, value, bat.nominal_v);
            else if (key == "trace_rate_hz") reader.get(qualified, value, bat.trace_rate_hz);
            else if (key == "common_ripple") reader.get(qualified, value, bat.common_ripple);
            else if (key == "ripple_period_s") reader.get(qualified, value, bat.ripple_period_s);
            else if (key == "cell_noise_std") reader.get(qualified, value, bat.cell_noise_std);
            else if (key == "window") reader.get(qualified, value, bat.window);
            else if (key == "base_threshold") reader.get(qualified, value, bat.base_threshold);
            else if (key == "base_rate_hz") reader.get(qualified, value, bat.base_rate_hz);
            else if (key == "rpm_bands") reader.get_bands(qualified, value, bat.rpm_bands);
            else if (key == "velocity_bands")
                reader.get_bands(qualified, value, bat.velocity_bands);
            else if (key == "accel_bands") reader.get_bands(qualified, value, bat.accel_bands);
            else if (key == "fault_kind") {
                if (value == "none" || value == "abrupt_dip" || value == "short_circuit") {
                    fault_kind = std::string(value);
                } else {
                    reader.fail(qualified,
                                "must be one of 'none', 'abrupt_dip', 'short_circuit'");
                }
            } else if (key == "fault_at_s") {
                fault_detail_present = true;
                reader.get(qualified, value, fault.at_s);
            } else if (key == "fault_magnitude") {
                fault_detail_present = true;
                reader.get(qualified, value, fault.magnitude);
            } else if (key == "fault_cell") {
                fault_detail_present = true;
                reader.get(qualified, value, fault.cell);
            } else known_key = false;
        } else if (section == "bus") {
            BusSectionConfig& bus = cfg.bus;
            if (key == "bandwidth") reader.get(qualified, value, bus.bandwidth);
            else if (key == "capacity") reader.get(qualified, value, bus.capacity);
            else if (key == "brake_decel") reader.get(qualified, value, bus.brake_decel);
            else if (key == "stop_velocity_tol")
                reader.get(qualified, value, bus.stop_velocity_tol);
            else if (key == "telemetry_load") reader.get(qualified, value, bus.telemetry_load);
            else if (key == "telemetry_modules")
                reader.get(qualified, value, bus.telemetry_modules);
            else if (key == "priority_fault") reader.get(qualified, value, bus.priorities.fault);
            else if (key == "priority_brake_command")
                reader.get(qualified, value, bus.priorities.brake_command);
            else if (key == "priority_motor_poll")
                reader.get(qualified, value, bus.priorities.motor_poll);
            else if (key == "priority_pose") reader.get(qualified, value, bus.priorities.pose);
            else if (key == "priority_telemetry")
                reader.get(qualified, value, bus.priorities.telemetry);
            else known_key = false;
        } else if (section == "inverter") {
            if (key == "v_dc") reader.get(qualified, value, inverter.v_dc);
            else if (key == "f_fundamental") reader.get(qualified, value, inverter.f_fundamental);
            else if (key == "filter_r") reader.get(qualified, value, inverter.filter_r);
            else if (key == "filter_c") reader.get(qualified, value, inverter.filter_c);
            else if (key == "fs") reader.get(qualified, value, inverter.fs);
            else if (key == "duration") reader.get(qualified, value, inverter.duration);
            else if (key == "modulation") {
                if (value == "square") {
                    inverter.modulation = Modulation::square;
                } else if (value == "pwm_sine") {
                    inverter.modulation = Modulation::pwm_sine;
                } else {
                    reader.fail(qualified, "must be 'square' or 'pwm_sine'");
                }
            } else if (key == "mod_index") reader.get(qualified, value, inverter.mod_index);
            else if (key == "carrier_hz") reader.get(qualified, value, inverter.carrier_hz);
            else if (key == "dc_block") reader.get(qualified, value, inverter.dc_block);
            else if (key == "dc_block_cutoff_hz")
                reader.get(qualified, value, inverter.dc_block_cutoff_hz);
            else known_key = false;
        } else if (section == "output") {
            if (key == "dir") reader.get(qualified, value, cfg.output_dir);
            else if (key == "prefix") reader.get(qualified, value, cfg.prefix);
            else known_key = false;
        }

        if (!known_key) {
            errors.push_back("unknown key " + qualified);
        }
    }

    if (fault_kind == "abrupt_dip") {
        fault.kind = FaultKind::abrupt_dip;
        cfg.battery.fault = fault;
    } else if (fault_kind == "short_circuit") {
        fault.kind = FaultKind::short_circuit;
        cfg.battery.fault = fault;
    }
    if (inverter_present) {
        cfg.inverter = inverter;
    }

    check_semantics(cfg, fault_kind == "none", fault_detail_present, errors);

    if (errors.empty()) {
        result.config = std::move(cfg);
    }
    return result;
}

ParseResult parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        ParseResult result;
        result.errors.push_back("cannot open config file: " + path.string());
        return result;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::string fmt(double v) { return CsvWriter::format(v); }

std::string fmt_bands(const std::vector<RateBand>& bands) {
    if (bands.empty()) {
        return "none";
    }
    std::string out;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        if (i != 0) {
            out += ", ";
        }
        out += fmt(bands[i].min_value) + ":" + fmt(bands[i].threshold) + ":" +
               fmt(bands[i].rate_hz);
    }
    return out;
}

}  // namespace

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "seeds = ";
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (i != 0) {
            out << ", ";
        }
        out << cfg.seeds[i];
    }
    out << "\n\n[trajectory]\n";
    out << "peak_accel = " << fmt(cfg.peak_accel) << "\n";
    out << "n_steps = " << cfg.n_steps << "\n";
    out << "dt = " << fmt(cfg.dt) << "\n";
    out << "decel_start = " << cfg.decel_start << "\n";

    out << "\n[sensors.imu]\n";
    out << "noise_std = " << fmt(cfg.imu_noise_std) << "\n";
    out << "\n[sensors.tachometer]\n";
    out << "wheel_radius = " << fmt(cfg.wheel_radius) << "\n";
    out << "noise_std = " << fmt(cfg.tacho_noise_std) << "\n";
    out << "\n[sensors.encoder]\n";
    out << "counts_per_rev = " << fmt(cfg.counts_per_rev) << "\n";
    out << "wheel_radius = " << fmt(cfg.encoder_wheel_radius) << "\n";
    out << "noise_std = " << fmt(cfg.encoder_noise_std) << "\n";
    out << "\n[sensors.fiducial]\n";
    out << "enabled = " << (cfg.fiducial_enabled ? "true" : "false") << "\n";
    out << "spacing = " << fmt(cfg.fiducial_spacing) << "\n";
    out << "marker_var = " << fmt(cfg.marker_var) << "\n";

    out << "\n[filter]\n";
    out << "accel_process_std = " << fmt(cfg.accel_process_std) << "\n";
    out << "accel_meas_std = " << fmt(cfg.accel_meas_std) << "\n";
    out << "velocity_process_std = " << fmt(cfg.velocity_process_std) << "\n";
    out << "velocity_meas_std = " << fmt(cfg.velocity_meas_std) << "\n";
    out << "position_process_std = " << fmt(cfg.position_process_std) << "\n";
    out << "position_meas_std = " << fmt(cfg.position_meas_std) << "\n";

    const BatteryConfig& bat = cfg.battery;
    out << "\n[battery]\n";
    out << "enabled = " << (bat.enabled ? "true" : "false") << "\n";
    out << "nominal_v = " << fmt(bat.nominal_v) << "\n";
    out << "trace_rate_hz = " << fmt(bat.trace_rate_hz) << "\n";
    out << "common_ripple = " << fmt(bat.common_ripple) << "\n";
    out << "ripple_period_s = " << fmt(bat.ripple_period_s) << "\n";
    out << "cell_noise_std = " << fmt(bat.cell_noise_std) << "\n";
    out << "window = " << bat.window << "\n";
    out << "base_threshold = " << fmt(bat.base_threshold) << "\n";
    out << "base_rate_hz = " << fmt(bat.base_rate_hz) << "\n";
    out << "rpm_bands = " << fmt_bands(bat.rpm_bands) << "\n";
    out << "velocity_bands = " << fmt_bands(bat.velocity_bands) << "\n";
    out << "accel_bands = " << fmt_bands(bat.accel_bands) << "\n";
    if (bat.fault) {
        out << "fault_kind = "
            << (bat.fault->kind == FaultKind::abrupt_dip ? "abrupt_dip" : "short_circuit")
            << "\n";
        out << "fault_at_s = " << fmt(bat.fault->at_s) << "\n";
        out << "fault_magnitude = " << fmt(bat.fault->magnitude) << "\n";
        out << "fault_cell = " << bat.fault->cell << "\n";
    } else {
        out << "fault_kind = none\n";
    }

    const BusSectionConfig& bus = cfg.bus;
    out << "\n[bus]\n";
    out << "bandwidth = " << bus.bandwidth << "\n";
    out << "capacity = " << bus.capacity << "\n";
    out << "brake_decel = " << fmt(bus.brake_decel) << "\n";
    out << "stop_velocity_tol = " << fmt(bus.stop_velocity_tol) << "\n";
    out << "telemetry_load = " << bus.telemetry_load << "\n";
    out << "telemetry_modules = " << (bus.telemetry_modules ? "true" : "false") << "\n";
    out << "priority_fault = " << bus.priorities.fault << "\n";
    out << "priority_brake_command = " << bus.priorities.brake_command << "\n";
    out << "priority_motor_poll = " << bus.priorities.motor_poll << "\n";
    out << "priority_pose = " << bus.priorities.pose << "\n";
    out << "priority_telemetry = " << bus.priorities.telemetry << "\n";

    if (cfg.inverter) {
        const InverterConfig& inv = *cfg.inverter;
        out << "\n[inverter]\n";
        out << "v_dc = " << fmt(inv.v_dc) << "\n";
        out << "f_fundamental = " << fmt(inv.f_fundamental) << "\n";
        out << "filter_r = " << fmt(inv.filter_r) << "\n";
        out << "filter_c = " << fmt(inv.filter_c) << "\n";
        out << "fs = " << fmt(inv.fs) << "\n";
        out << "duration = " << fmt(inv.duration) << "\n";
        out << "modulation = "
            << (inv.modulation == Modulation::square ? "square" : "pwm_sine") << "\n";
        out << "mod_index = " << fmt(inv.mod_index) << "\n";
        out << "carrier_hz = " << fmt(inv.carrier_hz) << "\n";
        out << "dc_block = " << (inv.dc_block ? "true" : "false") << "\n";
        out << "dc_block_cutoff_hz = " << fmt(inv.dc_block_cutoff_hz) << "\n";
    }

    out << "\n[output]\n";
    out << "dir = " << cfg.output_dir << "\n";
    out << "prefix = " << cfg.prefix << "\n";
    return out.str();
}

}  // namespace podsim
