#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "podsim/random.hpp"

namespace podsim {

/// Synchronized voltage series of two adjoining cells.
struct CellPairTrace {
    double dt_sample = 0.01;  ///< seconds between samples
    std::vector<double> x1;   ///< cell 1 voltages (V)
    std::vector<double> x2;   ///< cell 2 voltages (V)

    bool operator==(const CellPairTrace&) const = default;
};

/// Thrown when a window has no voltage variation at all (every residual is
/// zero), which leaves the interclass correlation undefined.
struct degenerate_trace_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Checks the trace invariants: equal lengths >= 2, all values finite and
/// >= 0.  Throws std::invalid_argument on violation.
void validate(const CellPairTrace& trace);

/// Interclass correlation coefficient of the pair:
///   m      = (1/2n) * sum(x1[i] + x2[i])
///   R1[i]  = x1[i] - m,  R2[i] = x2[i] - m
///   icc    = 2 * sum(R1[i]*R2[i]) / (sum(R1[i]^2) + sum(R2[i]^2))
/// Healthy adjoining cells track each other, pushing the value toward +1; a
/// single-cell anomaly drives it down.  Always in [-1, 1].
/// Throws degenerate_trace_error when every residual is zero.
double icc(const CellPairTrace& trace);

enum class FaultKind { abrupt_dip, short_circuit };

/// Injectable fault description.  For abrupt_dip, `magnitude` is the dip
/// depth in volts applied to a single sample; for short_circuit it is the
/// decay rate in volts per sample applied from at_index to the end of the
/// trace.  A magnitude of zero is a no-op.
struct FaultSpec {
    FaultKind kind = FaultKind::abrupt_dip;
    std::size_t at_index = 0;
    double magnitude = 0.0;

    bool operator==(const FaultSpec&) const = default;
};

/// Returns a copy of the trace with the fault applied to cell `target_cell`
/// (1 or 2); the other cell is untouched.  Throws std::invalid_argument when
/// the fault is out of range, the magnitude is negative, the target is not
/// 1 or 2, or the resulting voltage would go below zero.
CellPairTrace inject_fault(const CellPairTrace& trace, const FaultSpec& fault,
                           int target_cell);

/// One adaptive band: active when the monitored value is >= min_value.
struct RateBand {
    double min_value = 0.0;
    double threshold = 0.9;  ///< detection threshold while the band is active
    double rate_hz = 100.0;  ///< sampling rate while the band is active

    bool operator==(const RateBand&) const = default;
};

/// Threshold/rate schedule driven by motor RPM, velocity, and acceleration.
/// Faster or harder-driven pods are more likely to develop faults, so bands
/// must never relax the threshold or slow the sampling as severity rises;
/// validate() enforces that monotonicity.
struct AdaptivePolicy {
    double base_threshold = 0.9;
    double base_rate_hz = 100.0;
    std::vector<RateBand> rpm_bands;
    std::vector<RateBand> velocity_bands;
    std::vector<RateBand> accel_bands;

    bool operator==(const AdaptivePolicy&) const = default;
};

/// Validates thresholds in (-1, 1), rates > 0, ascending band breakpoints,
/// and monotone severity per band list.  Throws std::invalid_argument.
void validate(const AdaptivePolicy& policy);

/// Pod state snapshot feeding the adaptive policy.
struct PodState {
    double rpm = 0.0;
    double velocity = 0.0;
    double accel = 0.0;
};

/// Effective detector parameters after applying the policy.
struct AdaptiveParams {
    double threshold = 0.9;
    double rate_hz = 100.0;
};

/// Looks up the (threshold, rate) pair for the pod state: each of rpm,
/// velocity, and accel selects its band (values below the first band fall
/// back to the base pair; values past the last band clamp to it), and the
/// strictest result wins — the highest threshold and the fastest rate.
AdaptiveParams adaptive_params(const PodState& state, const AdaptivePolicy& policy);

/// Detected fault: the window's correlation fell below the active threshold.
struct FaultEvent {
    double t = 0.0;
    int pair_id = 0;
    double icc_value = 0.0;
    double threshold_used = 0.0;
};

/// Streaming fault detector for one cell pair.
///
/// Samples arrive at the trace rate; the adaptive policy may decimate them
/// (stride = round(trace rate / active rate), at least 1).  Once `window`
/// decimated samples are buffered, every new sample slides the window and
/// evaluates the interclass correlation.  Detection is edge-triggered: the
/// first window below threshold emits one FaultEvent and latches; the latch
/// releases when the correlation recovers to the threshold, so one physical
/// fault maps to exactly one event (and to exactly one bus message upstream).
/// Windows with no variation are counted and skipped, never fatal.
class FaultDetector {
public:
    /// `sample_rate_hz` is the rate at which push() will be called.
    /// Throws std::invalid_argument for window < 2, a non-positive sample
    /// rate, or an invalid policy.
    FaultDetector(int pair_id, std::size_t window, double sample_rate_hz,
                  AdaptivePolicy policy);

    /// Feeds one paired sample; returns an event when a fault is first seen.
    /// Throws std::invalid_argument on non-finite or negative voltages.
    std::optional<FaultEvent> push(double t, double v1, double v2, const PodState& pod);

    std::size_t degenerate_windows() const { return degenerate_windows_; }
    bool latched() const { return latched_; }
    int pair_id() const { return pair_id_; }

private:
    int pair_id_;
    std::size_t window_;
    double sample_rate_hz_;
    AdaptivePolicy policy_;
    std::deque<double> buf1_;
    std::deque<double> buf2_;
    std::size_t countdown_ = 1;  // samples until the next one is taken
    bool latched_ = false;
    std::size_t degenerate_windows_ = 0;
};

/// Batch detection over a whole trace.  `pod_feed` may be empty (rest state
/// throughout), hold a single state (constant), or hold one state per sample.
/// Sample i is stamped t = (i+1) * dt_sample.
std::vector<FaultEvent> detect_faults(const CellPairTrace& trace, std::size_t window,
                                      const AdaptivePolicy& policy,
                                      const std::vector<PodState>& pod_feed = {},
                                      int pair_id = 0);

/// Synthetic healthy-pair generator used by scenarios and tests: a shared
/// sinusoidal load ripple (common mode, keeps the correlation high and the
/// windows non-degenerate) plus small independent per-cell Gaussian noise.
struct TraceConfig {
    double nominal_v = 3.3;
    double dt_sample = 0.01;
    std::size_t n_samples = 1000;
    double common_ripple = 0.02;   ///< ripple amplitude (V), shared by both cells
    double ripple_period_s = 1.0;  ///< ripple period (s)
    double cell_noise_std = 0.002; ///< independent per-cell noise (V)

    bool operator==(const TraceConfig&) const = default;
};

/// Throws std::invalid_argument when the config would produce an invalid
/// trace (fewer than 2 samples, non-positive dt, negative amplitudes).
CellPairTrace generate_pair_trace(const TraceConfig& cfg, GaussianSampler& rng_cell1,
                                  GaussianSampler& rng_cell2);

}  // namespace podsim
