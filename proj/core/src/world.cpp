#include "podsim/world.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace podsim {

namespace {

void validate_profile(const TrajectoryProfile& p) {
    if (p.n_steps < 2) {
        throw std::invalid_argument("trajectory n_steps must be at least 2");
    }
    if (!(p.dt > 0.0)) {
        throw std::invalid_argument("trajectory dt must be positive");
    }
    if (!std::isfinite(p.peak_accel)) {
        throw std::invalid_argument("trajectory peak_accel must be finite");
    }
    std::size_t prev = 0;
    bool first = true;
    for (const DecelStep& step : p.decel_steps) {
        if (step.start == 0 || step.start >= p.n_steps) {
            throw std::invalid_argument("decel step start index out of range");
        }
        if (!first && step.start <= prev) {
            throw std::invalid_argument("decel step indices must be strictly increasing");
        }
        if (!std::isfinite(step.level)) {
            throw std::invalid_argument("decel step level must be finite");
        }
        prev = step.start;
        first = false;
    }
}

}  // namespace

std::vector<double> generate_accel_profile(const TrajectoryProfile& profile) {
    validate_profile(profile);

    const std::size_t log_end =
        profile.decel_steps.empty() ? profile.n_steps : profile.decel_steps.front().start;

    std::vector<double> series(profile.n_steps, 0.0);
    const double k_span = static_cast<double>(log_end);
    for (std::size_t k = 0; k < log_end; ++k) {
        const double frac = static_cast<double>(k) / k_span;
        series[k] = profile.peak_accel * (1.0 - std::log10(1.0 + 9.0 * frac));
    }
    for (std::size_t i = 0; i < profile.decel_steps.size(); ++i) {
        const std::size_t begin = profile.decel_steps[i].start;
        const std::size_t end =
            (i + 1 < profile.decel_steps.size()) ? profile.decel_steps[i + 1].start
                                                 : profile.n_steps;
        for (std::size_t k = begin; k < end; ++k) {
            series[k] = profile.decel_steps[i].level;
        }
    }
    return series;
}

TrajectoryProfile auto_decel_profile(double peak_accel, std::size_t n_steps, double dt,
                                     std::size_t decel_start) {
    TrajectoryProfile profile;
    profile.peak_accel = peak_accel;
    profile.n_steps = n_steps;
    profile.dt = dt;
    validate_profile(profile);

    std::size_t split = decel_start;
    if (split == 0) {
        split = static_cast<std::size_t>(std::llround(0.6 * static_cast<double>(n_steps)));
    }
    if (split < 2 || split + 2 > n_steps) {
        throw std::invalid_argument(
            "decel start must follow at least two ramp steps and leave at least two trailing steps");
    }

    // Velocity accumulated over the log segment; the two tail segments are
    // sized to shed exactly 75% and 25% of it, so the run ends at rest.
    TrajectoryProfile ramp_only{peak_accel, split, dt, {}};
    const std::vector<double> ramp = generate_accel_profile(ramp_only);
    double v_peak = 0.0;
    for (double a : ramp) {
        v_peak += a * dt;
    }

    const std::size_t tail = n_steps - split;
    const std::size_t first_len = tail / 2;
    const std::size_t second_len = tail - first_len;
    profile.decel_steps = {
        {split, -0.75 * v_peak / (static_cast<double>(first_len) * dt)},
        {split + first_len, -0.25 * v_peak / (static_cast<double>(second_len) * dt)},
    };
    return profile;
}

std::vector<GroundTruthState> integrate_kinematics(const std::vector<double>& accel,
                                                   double dt, double v0, double x0) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("integration dt must be positive");
    }
    std::vector<GroundTruthState> out;
    out.reserve(accel.size());
    double v = v0;
    double x = x0;
    for (std::size_t k = 0; k < accel.size(); ++k) {
        const double a = accel[k];
        if (!std::isfinite(a)) {
            throw std::invalid_argument("acceleration input must be finite at index " +
                                        std::to_string(k));
        }
        // Kept textually identical to the estimation-side prediction
        // expressions so that a noise-free filter tracks the world bitwise.
        x = x + dt * v + 0.5 * dt * dt * a;
        v = v + dt * a;
        out.push_back(GroundTruthState{static_cast<double>(k + 1) * dt, a, v, x});
    }
    return out;
}

SensorSpec imu_spec(double noise_std, std::uint64_t seed) {
    if (noise_std < 0.0) {
        throw std::invalid_argument("imu noise_std must be >= 0");
    }
    return SensorSpec{SensorKind::imu_accel, 1.0, noise_std, seed};
}

SensorSpec tachometer_spec(double wheel_radius, double noise_std, std::uint64_t seed) {
    if (!(wheel_radius > 0.0)) {
        throw std::invalid_argument("tachometer wheel radius must be positive");
    }
    if (noise_std < 0.0) {
        throw std::invalid_argument("tachometer noise_std must be >= 0");
    }
    return SensorSpec{SensorKind::tachometer, 1.0 / wheel_radius, noise_std, seed};
}

SensorSpec encoder_spec(double counts_per_rev, double wheel_radius, double noise_std,
                        std::uint64_t seed) {
    if (!(counts_per_rev > 0.0)) {
        throw std::invalid_argument("encoder counts_per_rev must be positive");
    }
    if (!(wheel_radius > 0.0)) {
        throw std::invalid_argument("encoder wheel radius must be positive");
    }
    if (noise_std < 0.0) {
        throw std::invalid_argument("encoder noise_std must be >= 0");
    }
    constexpr double two_pi = 6.28318530717958647692;
    return SensorSpec{SensorKind::encoder, counts_per_rev / (two_pi * wheel_radius),
                      noise_std, seed};
}

namespace {

SensorReading sample(double quantity, const GroundTruthState& truth, const SensorSpec& spec,
                     GaussianSampler& rng) {
    double value = spec.gain * quantity;
    if (spec.noise_std > 0.0) {
        value += rng.gaussian(0.0, spec.noise_std);
    }
    return SensorReading{truth.t, value, spec.kind};
}

}  // namespace

SensorReading imu_sample(const GroundTruthState& truth, const SensorSpec& spec,
                         GaussianSampler& rng) {
    if (spec.kind != SensorKind::imu_accel) {
        throw std::invalid_argument("imu_sample requires an imu_accel spec");
    }
    return sample(truth.a, truth, spec, rng);
}

SensorReading tachometer_sample(const GroundTruthState& truth, const SensorSpec& spec,
                                GaussianSampler& rng) {
    if (spec.kind != SensorKind::tachometer) {
        throw std::invalid_argument("tachometer_sample requires a tachometer spec");
    }
    return sample(truth.v, truth, spec, rng);
}

SensorReading encoder_sample(const GroundTruthState& truth, const SensorSpec& spec,
                             GaussianSampler& rng) {
    if (spec.kind != SensorKind::encoder) {
        throw std::invalid_argument("encoder_sample requires an encoder spec");
    }
    return sample(truth.x, truth, spec, rng);
}

std::optional<FiducialEvent> fiducial_detect(const GroundTruthState& truth,
                                             double strip_spacing,
                                             std::int64_t last_index) {
    if (!(strip_spacing > 0.0)) {
        throw std::invalid_argument("strip_spacing must be positive");
    }
    const std::int64_t next = last_index + 1;
    const double next_position = strip_spacing * static_cast<double>(next);
    if (truth.x >= next_position) {
        return FiducialEvent{truth.t, next_position, next};
    }
    return std::nullopt;
}

double orientation_estimate(const std::vector<double>& window) {
    if (window.empty()) {
        throw std::invalid_argument("orientation window must not be empty");
    }
    double sum = 0.0;
    for (double v : window) {
        sum += v;
    }
    return sum / static_cast<double>(window.size());
}

}  // namespace podsim
