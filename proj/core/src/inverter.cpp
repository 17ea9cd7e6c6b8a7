#include "podsim/inverter.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace podsim {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// The FFTW planner is not thread-safe; executing a plan is.  Guard the
// plan/destroy calls so spectra can still be computed from several threads.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

void validate(const InverterConfig& cfg) {
    if (!(cfg.v_dc > 0.0) || !std::isfinite(cfg.v_dc)) {
        throw std::invalid_argument("inverter v_dc must be finite and positive");
    }
    if (!(cfg.f_fundamental > 0.0)) {
        throw std::invalid_argument("inverter f_fundamental must be positive");
    }
    if (!(cfg.filter_r > 0.0) || !(cfg.filter_c > 0.0)) {
        throw std::invalid_argument("inverter filter components must be positive");
    }
    if (!(cfg.fs > 0.0) || !(cfg.duration > 0.0)) {
        throw std::invalid_argument("inverter fs and duration must be positive");
    }
    if (cfg.fs < 20.0 * cfg.f_fundamental) {
        throw std::invalid_argument(
            "inverter fs must be at least 20x the fundamental frequency");
    }
    if (cfg.modulation == Modulation::pwm_sine) {
        if (!(cfg.mod_index > 0.0 && cfg.mod_index <= 1.0)) {
            throw std::invalid_argument("inverter mod_index must lie in (0, 1]");
        }
        if (!(cfg.carrier_hz > cfg.f_fundamental)) {
            throw std::invalid_argument(
                "inverter carrier must be above the fundamental frequency");
        }
    }
    if (cfg.dc_block && !(cfg.dc_block_cutoff_hz > 0.0)) {
        throw std::invalid_argument("inverter dc_block cutoff must be positive");
    }
}

Waveform generate_waveform(const InverterConfig& cfg) {
    validate(cfg);
    const std::size_t n =
        static_cast<std::size_t>(std::llround(cfg.duration * cfg.fs));
    if (n < 2) {
        throw std::invalid_argument("inverter duration is too short for the sample rate");
    }

    Waveform w;
    w.fs = cfg.fs;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / cfg.fs;
        double value = 0.0;
        switch (cfg.modulation) {
            case Modulation::square: {
                const double phase = std::fmod(t * cfg.f_fundamental, 1.0);
                value = (phase < 0.5) ? cfg.v_dc : -cfg.v_dc;
                break;
            }
            case Modulation::pwm_sine: {
                const double ref =
                    cfg.mod_index * std::sin(kTwoPi * cfg.f_fundamental * t);
                const double cphase = std::fmod(t * cfg.carrier_hz, 1.0);
                const double tri =
                    (cphase < 0.5) ? (4.0 * cphase - 1.0) : (3.0 - 4.0 * cphase);
                value = (ref >= tri) ? cfg.v_dc : -cfg.v_dc;
                break;
            }
        }
        w.samples[i] = value;
    }
    return w;
}

double rc_cutoff_hz(double r, double c) {
    if (!(r > 0.0) || !(c > 0.0)) {
        throw std::invalid_argument("rc components must be positive");
    }
    return 1.0 / (kTwoPi * r * c);
}

Waveform rc_lowpass(const Waveform& w, double r, double c) {
    if (!(r > 0.0) || !(c > 0.0)) {
        throw std::invalid_argument("rc components must be positive");
    }
    if (!(w.fs > 0.0)) {
        throw std::invalid_argument("waveform sample rate must be positive");
    }
    const double a = 2.0 * r * c * w.fs;
    Waveform out;
    out.fs = w.fs;
    out.samples.resize(w.samples.size());
    double x_prev = 0.0;
    double y_prev = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double x = w.samples[i];
        const double y = (x + x_prev - (1.0 - a) * y_prev) / (1.0 + a);
        out.samples[i] = y;
        x_prev = x;
        y_prev = y;
    }
    return out;
}

Waveform rc_highpass(const Waveform& w, double r, double c) {
    if (!(r > 0.0) || !(c > 0.0)) {
        throw std::invalid_argument("rc components must be positive");
    }
    if (!(w.fs > 0.0)) {
        throw std::invalid_argument("waveform sample rate must be positive");
    }
    const double a = 2.0 * r * c * w.fs;
    Waveform out;
    out.fs = w.fs;
    out.samples.resize(w.samples.size());
    double x_prev = 0.0;
    double y_prev = 0.0;
    for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const double x = w.samples[i];
        const double y = (a * (x - x_prev) - (1.0 - a) * y_prev) / (1.0 + a);
        out.samples[i] = y;
        x_prev = x;
        y_prev = y;
    }
    return out;
}

Spectrum fft_spectrum(const Waveform& w) {
    const std::size_t n = w.samples.size();
    if (n < 2) {
        throw std::invalid_argument("fft needs at least 2 samples");
    }
    if (!(w.fs > 0.0)) {
        throw std::invalid_argument("waveform sample rate must be positive");
    }

    const std::size_t n_bins = n / 2 + 1;
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n_bins);
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        fftw_free(in);
        fftw_free(out);
        throw std::runtime_error("fftw failed to create a plan");
    }
    for (std::size_t i = 0; i < n; ++i) {
        in[i] = w.samples[i];
    }
    fftw_execute(plan);

    Spectrum s;
    s.bin_hz = w.fs / static_cast<double>(n);
    s.n_samples = n;
    s.magnitudes.resize(n_bins);
    const bool has_nyquist = (n % 2 == 0);
    for (std::size_t k = 0; k < n_bins; ++k) {
        const double mag = std::hypot(out[k][0], out[k][1]) / static_cast<double>(n);
        const bool single = (k == 0) || (has_nyquist && k == n_bins - 1);
        s.magnitudes[k] = single ? mag : 2.0 * mag;
    }

    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return s;
}

double dominant_frequency(const Spectrum& s, bool exclude_dc) {
    if (s.magnitudes.empty()) {
        throw std::invalid_argument("spectrum is empty");
    }
    const std::size_t first = exclude_dc ? 1 : 0;
    if (first >= s.magnitudes.size()) {
        throw std::runtime_error("spectrum has no bins besides DC");
    }
    std::size_t best = first;
    for (std::size_t k = first + 1; k < s.magnitudes.size(); ++k) {
        if (s.magnitudes[k] > s.magnitudes[best]) {
            best = k;
        }
    }
    if (s.magnitudes[best] == 0.0) {
        throw std::runtime_error("spectrum is identically zero over the considered bins");
    }
    return static_cast<double>(best) * s.bin_hz;
}

double amplitude_near(const Spectrum& s, double hz) {
    if (s.magnitudes.empty() || !(s.bin_hz > 0.0)) {
        throw std::invalid_argument("spectrum is empty");
    }
    std::size_t k = static_cast<std::size_t>(std::llround(hz / s.bin_hz));
    if (k >= s.magnitudes.size()) {
        k = s.magnitudes.size() - 1;
    }
    return s.magnitudes[k];
}

double signal_energy(const Waveform& w) {
    double e = 0.0;
    for (double v : w.samples) {
        e += v * v;
    }
    return e;
}

double spectrum_energy(const Spectrum& s) {
    if (s.n_samples == 0) {
        throw std::invalid_argument("spectrum carries no sample count");
    }
    const bool has_nyquist = (s.n_samples % 2 == 0);
    const std::size_t n_bins = s.magnitudes.size();
    double e = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
        const bool single = (k == 0) || (has_nyquist && k == n_bins - 1);
        const double m = s.magnitudes[k];
        // Single-sided amplitudes: interior bins carry half their squared
        // amplitude on each side of the full spectrum.
        e += single ? m * m : 0.5 * m * m;
    }
    return e * static_cast<double>(s.n_samples);
}

double waveform_rms(const Waveform& w) {
    if (w.samples.empty()) {
        throw std::invalid_argument("waveform is empty");
    }
    return std::sqrt(signal_energy(w) / static_cast<double>(w.samples.size()));
}

}  // namespace podsim
