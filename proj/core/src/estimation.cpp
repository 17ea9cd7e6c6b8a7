#include "podsim/estimation.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace podsim {

KfResult kf_update(const Gaussian1D& prior, double z, const ObservationModel& obs,
                   const NoiseParams& noise) {
    if (!std::isfinite(prior.var) || prior.var < 0.0) {
        throw std::invalid_argument("kf_update prior variance must be finite and >= 0");
    }
    if (noise.meas_var < 0.0) {
        throw std::invalid_argument("kf_update measurement variance must be >= 0");
    }
    if (obs.h == 0.0) {
        throw std::invalid_argument("kf_update observation gain must be nonzero");
    }
    const double innovation_var = obs.h * obs.h * prior.var + noise.meas_var;
    if (innovation_var <= 0.0) {
        throw std::runtime_error(
            "kf_update degenerate: prior and measurement variances are both zero");
    }
    const double gain = prior.var * obs.h / innovation_var;
    Gaussian1D posterior;
    posterior.mean = prior.mean + gain * (z - obs.h * prior.mean);
    posterior.var = (1.0 - gain * obs.h) * prior.var;
    if (posterior.var < 0.0) {
        posterior.var = 0.0;  // guard against rounding just below zero
    }
    return KfResult{posterior, gain};
}

Gaussian1D predict_accel(std::size_t t_index, const std::vector<double>& profile,
                         const NoiseParams& noise) {
    if (t_index >= profile.size()) {
        throw std::out_of_range("predict_accel index is past the planned profile");
    }
    if (noise.process_var < 0.0) {
        throw std::invalid_argument("process variance must be >= 0");
    }
    return Gaussian1D{profile[t_index], noise.process_var};
}

Gaussian1D predict_velocity(const Gaussian1D& prev, double accel_est, double dt,
                            const NoiseParams& noise) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("predict_velocity dt must be positive");
    }
    if (noise.process_var < 0.0) {
        throw std::invalid_argument("process variance must be >= 0");
    }
    return Gaussian1D{prev.mean + dt * accel_est, prev.var + noise.process_var};
}

Gaussian1D predict_position(const Gaussian1D& prev, double vel_est, double accel_est,
                            double dt, const NoiseParams& noise) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("predict_position dt must be positive");
    }
    if (noise.process_var < 0.0) {
        throw std::invalid_argument("process variance must be >= 0");
    }
    // Same expression shape as the world integrator (see world.cpp) so the
    // noise-free pipeline is exact.
    return Gaussian1D{prev.mean + dt * vel_est + 0.5 * dt * dt * accel_est,
                      prev.var + noise.process_var};
}

Gaussian1D recalibrate_on_fiducial(const Gaussian1D& /*pos*/, const FiducialEvent& event,
                                   double marker_var) {
    if (marker_var < 0.0) {
        throw std::invalid_argument("marker variance must be >= 0");
    }
    return Gaussian1D{event.marker_position, marker_var};
}

double rmse(const std::vector<double>& pred, const std::vector<double>& real) {
    if (pred.empty()) {
        throw std::invalid_argument("rmse input must not be empty");
    }
    if (pred.size() != real.size()) {
        throw std::invalid_argument("rmse input series must have equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - real[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

PoseFilter::PoseFilter(std::vector<double> planned_accel, double dt, FilterStages noise,
                       ObservationModel imu, ObservationModel tachometer,
                       ObservationModel encoder)
    : planned_(std::move(planned_accel)),
      dt_(dt),
      noise_(noise),
      imu_(imu),
      tacho_(tachometer),
      encoder_(encoder) {
    if (planned_.empty()) {
        throw std::invalid_argument("pose filter needs a non-empty planned profile");
    }
    if (!(dt_ > 0.0)) {
        throw std::invalid_argument("pose filter dt must be positive");
    }
}

PoseEstimate PoseFilter::step(double z_imu, double z_tacho, double z_encoder) {
    const Gaussian1D accel_prior = predict_accel(k_, planned_, noise_.accel);
    const KfResult accel_up = kf_update(accel_prior, z_imu, imu_, noise_.accel);

    // The position prediction must advance with the velocity the pod *entered*
    // the tick with, i.e. the previous posterior, to stay consistent with the
    // world's integration order.
    const double vel_at_tick_start = vel_.mean;

    const Gaussian1D vel_prior =
        predict_velocity(vel_, accel_up.posterior.mean, dt_, noise_.velocity);
    const KfResult vel_up = kf_update(vel_prior, z_tacho, tacho_, noise_.velocity);
    vel_ = vel_up.posterior;

    const Gaussian1D pos_prior = predict_position(
        pos_, vel_at_tick_start, accel_up.posterior.mean, dt_, noise_.position);
    const KfResult pos_up = kf_update(pos_prior, z_encoder, encoder_, noise_.position);
    pos_ = pos_up.posterior;

    ++k_;
    return PoseEstimate{static_cast<double>(k_) * dt_,
                        accel_up.posterior,
                        vel_,
                        pos_,
                        accel_up.gain,
                        vel_up.gain,
                        pos_up.gain};
}

void PoseFilter::recalibrate(const FiducialEvent& event, double marker_var) {
    pos_ = recalibrate_on_fiducial(pos_, event, marker_var);
}

}  // namespace podsim
