#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace podsim {

/// Deterministic Gaussian noise source.
///
/// std::normal_distribution is implementation-defined, so the same seed can
/// yield different streams on different standard libraries.  To keep scenario
/// outputs byte-identical everywhere, samples are drawn from std::mt19937_64
/// (whose output sequence is pinned by the standard) and turned into normal
/// variates with an explicit Box-Muller transform.  Every gaussian() call
/// consumes exactly two engine draws, so streams never drift out of phase.
class GaussianSampler {
public:
    /// Seeds the engine directly.
    explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}

    /// Derives an independent stream from a scenario seed and a stream id.
    /// Each consumer (sensor, battery cell, ...) owns its own stream, so
    /// adding one consumer never shifts the noise another one sees.
    GaussianSampler(std::uint64_t scenario_seed, std::uint64_t stream_id) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(scenario_seed),
            static_cast<std::uint32_t>(scenario_seed >> 32),
            static_cast<std::uint32_t>(stream_id),
            static_cast<std::uint32_t>(stream_id >> 32)};
        engine_.seed(seq);
    }

    /// Normal variate with the given mean and standard deviation.
    double gaussian(double mean, double stddev) {
        // Box-Muller: u1 in (0, 1], u2 in [0, 1).
        const double u1 = 1.0 - canonical();
        const double u2 = canonical();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * (mag * std::cos(2.0 * pi_ * u2));
    }

    /// Uniform double in [0, 1) built from the top 53 bits of one draw.
    double canonical() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    static constexpr double pi_ = 3.14159265358979323846;
    std::mt19937_64 engine_;
};

}  // namespace podsim
