#include "podsim/battery.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace podsim {

void validate(const CellPairTrace& trace) {
    if (trace.x1.size() != trace.x2.size()) {
        throw std::invalid_argument("cell pair trace series must have equal length");
    }
    if (trace.x1.size() < 2) {
        throw std::invalid_argument("cell pair trace needs at least 2 samples");
    }
    if (!(trace.dt_sample > 0.0)) {
        throw std::invalid_argument("cell pair trace dt_sample must be positive");
    }
    for (std::size_t i = 0; i < trace.x1.size(); ++i) {
        if (!std::isfinite(trace.x1[i]) || !std::isfinite(trace.x2[i]) ||
            trace.x1[i] < 0.0 || trace.x2[i] < 0.0) {
            throw std::invalid_argument("cell voltages must be finite and >= 0 (sample " +
                                        std::to_string(i) + ")");
        }
    }
}

double icc(const CellPairTrace& trace) {
    validate(trace);
    const std::size_t n = trace.x1.size();

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += trace.x1[i] + trace.x2[i];
    }
    const double m = total / (2.0 * static_cast<double>(n));

    double cross = 0.0;
    double sq1 = 0.0;
    double sq2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r1 = trace.x1[i] - m;
        const double r2 = trace.x2[i] - m;
        cross += r1 * r2;
        sq1 += r1 * r1;
        sq2 += r2 * r2;
    }
    const double denom = sq1 + sq2;
    if (denom == 0.0) {
        throw degenerate_trace_error(
            "icc degenerate: both traces are constant at the grand mean");
    }
    double value = 2.0 * cross / denom;
    // 2ab <= a^2 + b^2 bounds the exact value; clip rounding spill-over.
    return std::clamp(value, -1.0, 1.0);
}

CellPairTrace inject_fault(const CellPairTrace& trace, const FaultSpec& fault,
                           int target_cell) {
    validate(trace);
    if (fault.at_index >= trace.x1.size()) {
        throw std::invalid_argument("fault at_index is past the end of the trace");
    }
    if (fault.magnitude < 0.0 || !std::isfinite(fault.magnitude)) {
        throw std::invalid_argument("fault magnitude must be finite and >= 0");
    }
    if (target_cell != 1 && target_cell != 2) {
        throw std::invalid_argument("fault target cell must be 1 or 2");
    }

    CellPairTrace out = trace;
    std::vector<double>& cell = (target_cell == 1) ? out.x1 : out.x2;
    switch (fault.kind) {
        case FaultKind::abrupt_dip:
            cell[fault.at_index] -= fault.magnitude;
            break;
        case FaultKind::short_circuit:
            for (std::size_t i = fault.at_index; i < cell.size(); ++i) {
                cell[i] -= fault.magnitude *
                           static_cast<double>(i - fault.at_index + 1);
            }
            break;
    }
    for (std::size_t i = fault.at_index; i < cell.size(); ++i) {
        if (cell[i] < 0.0) {
            throw std::invalid_argument(
                "injected fault would drive the cell voltage below zero at sample " +
                std::to_string(i));
        }
    }
    return out;
}

namespace {

void validate_bands(const std::vector<RateBand>& bands, const char* name) {
    double prev_min = 0.0;
    double prev_threshold = -1.0;
    double prev_rate = 0.0;
    bool first = true;
    for (const RateBand& band : bands) {
        if (!(band.threshold > -1.0 && band.threshold < 1.0)) {
            throw std::invalid_argument(std::string(name) +
                                        " band threshold must lie in (-1, 1)");
        }
        if (!(band.rate_hz > 0.0)) {
            throw std::invalid_argument(std::string(name) + " band rate must be positive");
        }
        if (!first) {
            if (band.min_value <= prev_min) {
                throw std::invalid_argument(std::string(name) +
                                            " band breakpoints must be ascending");
            }
            if (band.threshold < prev_threshold || band.rate_hz < prev_rate) {
                throw std::invalid_argument(
                    std::string(name) +
                    " bands must not relax the threshold or slow the rate as severity rises");
            }
        }
        prev_min = band.min_value;
        prev_threshold = band.threshold;
        prev_rate = band.rate_hz;
        first = false;
    }
}

/// Last band whose breakpoint is at or below `value`; base pair otherwise.
AdaptiveParams lookup(double value, const std::vector<RateBand>& bands,
                      const AdaptiveParams& base) {
    AdaptiveParams out = base;
    for (const RateBand& band : bands) {
        if (value >= band.min_value) {
            out = AdaptiveParams{band.threshold, band.rate_hz};
        } else {
            break;
        }
    }
    return out;
}

}  // namespace

void validate(const AdaptivePolicy& policy) {
    if (!(policy.base_threshold > -1.0 && policy.base_threshold < 1.0)) {
        throw std::invalid_argument("base_threshold must lie in (-1, 1)");
    }
    if (!(policy.base_rate_hz > 0.0)) {
        throw std::invalid_argument("base_rate_hz must be positive");
    }
    validate_bands(policy.rpm_bands, "rpm");
    validate_bands(policy.velocity_bands, "velocity");
    validate_bands(policy.accel_bands, "accel");
    // A band must never be laxer than the base pair either.
    for (const auto* bands : {&policy.rpm_bands, &policy.velocity_bands, &policy.accel_bands}) {
        for (const RateBand& band : *bands) {
            if (band.threshold < policy.base_threshold || band.rate_hz < policy.base_rate_hz) {
                throw std::invalid_argument(
                    "bands must not fall below the base threshold or base rate");
            }
        }
    }
}

AdaptiveParams adaptive_params(const PodState& state, const AdaptivePolicy& policy) {
    validate(policy);
    const AdaptiveParams base{policy.base_threshold, policy.base_rate_hz};
    const AdaptiveParams by_rpm = lookup(state.rpm, policy.rpm_bands, base);
    const AdaptiveParams by_vel = lookup(state.velocity, policy.velocity_bands, base);
    const AdaptiveParams by_acc = lookup(state.accel, policy.accel_bands, base);
    // Strictest wins across the three drivers.
    AdaptiveParams out;
    out.threshold = std::max({by_rpm.threshold, by_vel.threshold, by_acc.threshold});
    out.rate_hz = std::max({by_rpm.rate_hz, by_vel.rate_hz, by_acc.rate_hz});
    return out;
}

FaultDetector::FaultDetector(int pair_id, std::size_t window, double sample_rate_hz,
                             AdaptivePolicy policy)
    : pair_id_(pair_id),
      window_(window),
      sample_rate_hz_(sample_rate_hz),
      policy_(std::move(policy)) {
    if (window_ < 2) {
        throw std::invalid_argument("fault detector window must be at least 2");
    }
    if (!(sample_rate_hz_ > 0.0)) {
        throw std::invalid_argument("fault detector sample rate must be positive");
    }
    validate(policy_);
}

std::optional<FaultEvent> FaultDetector::push(double t, double v1, double v2,
                                              const PodState& pod) {
    if (!std::isfinite(v1) || !std::isfinite(v2) || v1 < 0.0 || v2 < 0.0) {
        throw std::invalid_argument("cell voltages must be finite and >= 0");
    }
    if (--countdown_ > 0) {
        return std::nullopt;  // decimated away at the current sampling rate
    }
    const AdaptiveParams params = adaptive_params(pod, policy_);
    const double stride = std::max(1.0, std::round(sample_rate_hz_ / params.rate_hz));
    countdown_ = static_cast<std::size_t>(stride);

    buf1_.push_back(v1);
    buf2_.push_back(v2);
    if (buf1_.size() > window_) {
        buf1_.pop_front();
        buf2_.pop_front();
    }
    if (buf1_.size() < window_) {
        return std::nullopt;
    }

    CellPairTrace win;
    win.dt_sample = stride / sample_rate_hz_;
    win.x1.assign(buf1_.begin(), buf1_.end());
    win.x2.assign(buf2_.begin(), buf2_.end());

    double value = 0.0;
    try {
        value = icc(win);
    } catch (const degenerate_trace_error&) {
        ++degenerate_windows_;  // flat window: nothing to correlate, skip it
        return std::nullopt;
    }

    if (value < params.threshold) {
        if (!latched_) {
            latched_ = true;
            return FaultEvent{t, pair_id_, value, params.threshold};
        }
        return std::nullopt;
    }
    latched_ = false;
    return std::nullopt;
}

std::vector<FaultEvent> detect_faults(const CellPairTrace& trace, std::size_t window,
                                      const AdaptivePolicy& policy,
                                      const std::vector<PodState>& pod_feed, int pair_id) {
    validate(trace);
    if (!pod_feed.empty() && pod_feed.size() != 1 && pod_feed.size() != trace.x1.size()) {
        throw std::invalid_argument(
            "pod feed must be empty, a single state, or one state per sample");
    }
    FaultDetector detector(pair_id, window, 1.0 / trace.dt_sample, policy);
    std::vector<FaultEvent> events;
    for (std::size_t i = 0; i < trace.x1.size(); ++i) {
        PodState pod;
        if (pod_feed.size() == 1) {
            pod = pod_feed.front();
        } else if (!pod_feed.empty()) {
            pod = pod_feed[i];
        }
        const double t = static_cast<double>(i + 1) * trace.dt_sample;
        if (auto event = detector.push(t, trace.x1[i], trace.x2[i], pod)) {
            events.push_back(*event);
        }
    }
    return events;
}

CellPairTrace generate_pair_trace(const TraceConfig& cfg, GaussianSampler& rng_cell1,
                                  GaussianSampler& rng_cell2) {
    if (cfg.n_samples < 2) {
        throw std::invalid_argument("trace config needs at least 2 samples");
    }
    if (!(cfg.dt_sample > 0.0)) {
        throw std::invalid_argument("trace config dt_sample must be positive");
    }
    if (!(cfg.ripple_period_s > 0.0)) {
        throw std::invalid_argument("trace config ripple period must be positive");
    }
    if (cfg.common_ripple < 0.0 || cfg.cell_noise_std < 0.0 || cfg.nominal_v < 0.0) {
        throw std::invalid_argument("trace config amplitudes must be >= 0");
    }

    constexpr double two_pi = 6.28318530717958647692;
    CellPairTrace trace;
    trace.dt_sample = cfg.dt_sample;
    trace.x1.reserve(cfg.n_samples);
    trace.x2.reserve(cfg.n_samples);
    for (std::size_t i = 0; i < cfg.n_samples; ++i) {
        const double t = static_cast<double>(i + 1) * cfg.dt_sample;
        const double shared =
            cfg.nominal_v + cfg.common_ripple * std::sin(two_pi * t / cfg.ripple_period_s);
        double v1 = shared;
        double v2 = shared;
        if (cfg.cell_noise_std > 0.0) {
            v1 += rng_cell1.gaussian(0.0, cfg.cell_noise_std);
            v2 += rng_cell2.gaussian(0.0, cfg.cell_noise_std);
        }
        trace.x1.push_back(std::max(0.0, v1));
        trace.x2.push_back(std::max(0.0, v2));
    }
    return trace;
}

}  // namespace podsim
