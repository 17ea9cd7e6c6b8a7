#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "podsim/random.hpp"

namespace podsim {

/// One tick of the simulation oracle: the pod's true motion state.
struct GroundTruthState {
    double t = 0.0;  ///< time (s), strictly increasing with fixed step
    double a = 0.0;  ///< acceleration (m/s^2)
    double v = 0.0;  ///< velocity (m/s)
    double x = 0.0;  ///< position from track start (m)
};

/// One constant deceleration segment of the trajectory.
struct DecelStep {
    std::size_t start = 0;  ///< tick index where the level takes effect
    double level = 0.0;     ///< acceleration (m/s^2), normally negative

    bool operator==(const DecelStep&) const = default;
};

/// Planned acceleration schedule: a base-10 logarithmic ramp-down from the
/// peak, followed by constant deceleration steps.  The log segment covers
/// indices [0, decel_steps.front().start); with no decel steps it covers the
/// whole run.
struct TrajectoryProfile {
    double peak_accel = 260.0;
    std::size_t n_steps = 120;
    double dt = 1.0;  ///< seconds per tick
    std::vector<DecelStep> decel_steps;

    bool operator==(const TrajectoryProfile&) const = default;
};

enum class SensorKind { imu_accel, tachometer, encoder, fiducial, orientation };

/// Static description of one sensor channel.  `gain` maps the true quantity
/// into sensor units (1 for the IMU, 1/R for the tachometer, N/(2*pi*R) for
/// the encoder); `noise_std` is in output units; `seed` is the stream id used
/// to derive this sensor's private RNG from the scenario seed.
struct SensorSpec {
    SensorKind kind = SensorKind::imu_accel;
    double gain = 1.0;
    double noise_std = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const SensorSpec&) const = default;
};

/// One timestamped scalar observation.
struct SensorReading {
    double t = 0.0;
    double value = 0.0;
    SensorKind kind = SensorKind::imu_accel;
};

/// Crossing of one optical strip at an exactly known track position.
struct FiducialEvent {
    double t = 0.0;
    double marker_position = 0.0;  ///< strip_spacing * marker_index, exact
    std::int64_t marker_index = 0;
};

/// Builds the acceleration series for a profile.  The logarithmic segment
/// follows peak * (1 - log10(1 + 9k/K)) for k in [0, K), which starts at the
/// peak and decays monotonically to zero; each deceleration step then holds
/// its constant level until the next step (or the end of the run).
/// Throws std::invalid_argument for n_steps < 2, dt <= 0, a non-finite peak,
/// or decel steps that are out of range or not strictly increasing.
std::vector<double> generate_accel_profile(const TrajectoryProfile& profile);

/// Convenience builder: log ramp-down over [0, decel_start) followed by two
/// equal-length deceleration segments sized so the final velocity returns to
/// zero exactly (the first segment takes 75% of the speed off, the second the
/// remaining 25%).  decel_start == 0 picks the default split at 60% of the
/// run.
TrajectoryProfile auto_decel_profile(double peak_accel, std::size_t n_steps,
                                     double dt, std::size_t decel_start = 0);

/// Integrates an acceleration series with the forward-Euler scheme used by
/// the whole artifact:
///   x[k] = x[k-1] + dt*v[k-1] + 0.5*dt*dt*a[k]
///   v[k] = v[k-1] + dt*a[k]
///   t[k] = (k+1)*dt
/// Throws std::invalid_argument for dt <= 0 or non-finite acceleration input.
std::vector<GroundTruthState> integrate_kinematics(const std::vector<double>& accel,
                                                   double dt, double v0 = 0.0,
                                                   double x0 = 0.0);

/// Validated spec constructors.  All throw std::invalid_argument on bad
/// physical parameters (noise_std < 0, wheel radius <= 0, counts <= 0).
SensorSpec imu_spec(double noise_std, std::uint64_t seed);
SensorSpec tachometer_spec(double wheel_radius, double noise_std, std::uint64_t seed);
SensorSpec encoder_spec(double counts_per_rev, double wheel_radius, double noise_std,
                        std::uint64_t seed);

/// Samplers: value = gain * true quantity (+ Gaussian noise when noise_std is
/// positive; a zero-noise spec reproduces the true quantity bit-exactly).
/// Each throws std::invalid_argument when handed a spec of the wrong kind.
SensorReading imu_sample(const GroundTruthState& truth, const SensorSpec& spec,
                         GaussianSampler& rng);
SensorReading tachometer_sample(const GroundTruthState& truth, const SensorSpec& spec,
                                GaussianSampler& rng);
SensorReading encoder_sample(const GroundTruthState& truth, const SensorSpec& spec,
                             GaussianSampler& rng);

/// Reports the next strip crossing, if any: fires when x has reached
/// (last_index + 1) * strip_spacing.  Call repeatedly (advancing last_index)
/// to drain multiple crossings within one tick.  The reported position is the
/// exact strip position, never a noisy measurement.
/// Throws std::invalid_argument for strip_spacing <= 0.
std::optional<FiducialEvent> fiducial_detect(const GroundTruthState& truth,
                                             double strip_spacing,
                                             std::int64_t last_index);

/// Plain averaging filter over an orientation window.
/// Throws std::invalid_argument on an empty window.
double orientation_estimate(const std::vector<double>& window);

}  // namespace podsim
