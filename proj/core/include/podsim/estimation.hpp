#pragma once

#include <cstddef>
#include <vector>

#include "podsim/world.hpp"

namespace podsim {

/// Scalar Gaussian belief: the universal estimate representation.
struct Gaussian1D {
    double mean = 0.0;
    double var = 0.0;  ///< variance, kept >= 0 after every update

    bool operator==(const Gaussian1D&) const = default;
};

/// Noise variances for one filter stage.
///
/// Naming note: here R is the *process* noise variance and Q the
/// *measurement* noise variance — the reverse of the usual textbook
/// convention.  The rest of the pipeline, the configs, and the CSV columns
/// all follow this naming, so it is kept consistently rather than flipped.
struct NoiseParams {
    double process_var = 0.0;  ///< R: added by each prediction
    double meas_var = 0.0;     ///< Q: variance of the sensor observation

    bool operator==(const NoiseParams&) const = default;
};

/// Scalar observation gain: z = h * state (1 for the IMU, 1/R for the
/// tachometer, N/(2*pi*R) for the encoder).
struct ObservationModel {
    double h = 1.0;
};

/// Result of one measurement update.
struct KfResult {
    Gaussian1D posterior;
    double gain = 0.0;
};

/// One tick of pipeline output.
struct PoseEstimate {
    double t = 0.0;
    Gaussian1D accel;
    Gaussian1D vel;
    Gaussian1D pos;
    double gain_a = 0.0;
    double gain_v = 0.0;
    double gain_x = 0.0;
};

/// Noise parameters for the three cascaded stages.
struct FilterStages {
    NoiseParams accel;
    NoiseParams velocity;
    NoiseParams position;

    bool operator==(const FilterStages&) const = default;
};

/// Scalar Kalman measurement update:
///   gain      = prior.var * h / (h^2 * prior.var + Q)
///   post.mean = prior.mean + gain * (z - h * prior.mean)
///   post.var  = (1 - gain * h) * prior.var
/// Throws std::invalid_argument on negative variances or h == 0, and
/// std::runtime_error when the innovation variance is zero (both variances
/// zero) — a degenerate update is an error, never a NaN.
KfResult kf_update(const Gaussian1D& prior, double z, const ObservationModel& obs,
                   const NoiseParams& noise);

/// Acceleration-stage prediction: the prior mean comes from the planned
/// acceleration curve and the prior variance is reset to R every tick (the
/// planned curve, not the previous estimate, drives this stage, so its
/// uncertainty does not accumulate).
/// Throws std::out_of_range when t_index is past the profile.
Gaussian1D predict_accel(std::size_t t_index, const std::vector<double>& profile,
                         const NoiseParams& noise);

/// Velocity-stage prediction: mean = prev.mean + dt*accel_est,
/// var = prev.var + R.
Gaussian1D predict_velocity(const Gaussian1D& prev, double accel_est, double dt,
                            const NoiseParams& noise);

/// Position-stage prediction: mean = prev.mean + dt*vel_est +
/// 0.5*dt*dt*accel_est, var = prev.var + R.  `vel_est` must be the
/// start-of-tick velocity estimate (the previous tick's posterior): the world
/// advances position with the velocity it entered the tick with, and using
/// the already-updated velocity would overshoot by a*dt^2 every tick.
Gaussian1D predict_position(const Gaussian1D& prev, double vel_est, double accel_est,
                            double dt, const NoiseParams& noise);

/// Hard reset of the position belief onto a fiducial strip: the marker
/// position is treated as near-exact, so the mean snaps to it and the
/// variance drops to marker_var, which also re-calibrates every subsequent
/// Kalman gain.
Gaussian1D recalibrate_on_fiducial(const Gaussian1D& pos, const FiducialEvent& event,
                                   double marker_var);

/// Root mean squared error over two equal-length series.
/// Throws std::invalid_argument on empty input or length mismatch.
double rmse(const std::vector<double>& pred, const std::vector<double>& real);

/// The cascaded acceleration -> velocity -> position estimator.
///
/// Each step() consumes one tick's IMU, tachometer, and encoder readings and
/// runs, in order: predict_accel, kf_update(imu), predict_velocity (from the
/// updated acceleration mean), kf_update(tachometer), predict_position (from
/// the start-of-tick velocity mean and updated acceleration mean),
/// kf_update(encoder).  recalibrate() applies a fiducial reset between steps.
class PoseFilter {
public:
    /// The filter starts at rest at the track origin: velocity and position
    /// beliefs begin at mean 0 with zero accumulated variance, so the first
    /// prediction of each stage carries exactly that stage's R.
    PoseFilter(std::vector<double> planned_accel, double dt, FilterStages noise,
               ObservationModel imu, ObservationModel tachometer,
               ObservationModel encoder);

    /// Advances one tick.  Throws std::out_of_range once the planned profile
    /// is exhausted.
    PoseEstimate step(double z_imu, double z_tacho, double z_encoder);

    /// Applies a fiducial position reset (affects the next step's prior).
    void recalibrate(const FiducialEvent& event, double marker_var);

    std::size_t ticks_done() const { return k_; }
    const Gaussian1D& velocity() const { return vel_; }
    const Gaussian1D& position() const { return pos_; }

private:
    std::vector<double> planned_;
    double dt_;
    FilterStages noise_;
    ObservationModel imu_;
    ObservationModel tacho_;
    ObservationModel encoder_;
    std::size_t k_ = 0;
    Gaussian1D vel_{0.0, 0.0};
    Gaussian1D pos_{0.0, 0.0};
};

}  // namespace podsim
