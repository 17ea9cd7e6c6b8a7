#pragma once

#include <cstddef>
#include <vector>

namespace podsim {

enum class Modulation { square, pwm_sine };

/// DC-to-AC inverter model parameters.  The defaults reproduce the reference
/// design: a 350 V DC link switched at the 277.77 Hz fundamental that suits a
/// linear induction motor, smoothed by a series-R shunt-C low-pass
/// (1 kOhm / 40 nF, cutoff ~3.98 kHz).
struct InverterConfig {
    double v_dc = 350.0;
    double f_fundamental = 277.77;   ///< Hz
    double filter_r = 1000.0;        ///< Ohm
    double filter_c = 40e-9;         ///< F
    double fs = 100000.0;            ///< sample rate (Hz)
    double duration = 0.1296;        ///< s (~36 fundamental periods: near-integer
                                     ///  bin alignment keeps spectral leakage low)
    Modulation modulation = Modulation::square;
    double mod_index = 0.9;          ///< pwm_sine only: reference amplitude ratio
    double carrier_hz = 5000.0;      ///< pwm_sine only: triangle carrier
    bool dc_block = false;           ///< append a DC-blocking high-pass stage
    double dc_block_cutoff_hz = 27.777;  ///< cutoff of that stage

    bool operator==(const InverterConfig&) const = default;
};

/// Validates component values > 0, mod_index in (0, 1], and fs at least
/// 20x the fundamental.  Throws std::invalid_argument.
void validate(const InverterConfig& cfg);

/// Uniformly sampled voltage series.
struct Waveform {
    double fs = 0.0;
    std::vector<double> samples;
};

/// Single-sided magnitude spectrum.  magnitudes[k] is the amplitude (V) of
/// the component at k * bin_hz; bin 0 is the DC component.  n_samples is the
/// length of the originating waveform (needed for energy bookkeeping).
struct Spectrum {
    double bin_hz = 0.0;
    std::vector<double> magnitudes;
    std::size_t n_samples = 0;
};

/// Synthesizes the ideal-switch inverter output.  Square modulation emits
/// +v_dc for the first half of each fundamental period and -v_dc for the
/// second; pwm_sine compares a sine reference (mod_index amplitude) against a
/// bipolar triangle carrier.
Waveform generate_waveform(const InverterConfig& cfg);

/// First-order RC low-pass (series R, shunt C), discretized with the
/// bilinear transform:
///   a    = 2*R*C*fs
///   y[n] = (x[n] + x[n-1] - (1 - a) * y[n-1]) / (1 + a)
/// DC gain is exactly 1; the filter starts at rest.
/// Throws std::invalid_argument for non-positive R or C.
Waveform rc_lowpass(const Waveform& w, double r, double c);

/// Matching first-order high-pass (DC blocker), also bilinear.
Waveform rc_highpass(const Waveform& w, double r, double c);

/// Analog cutoff frequency 1/(2*pi*R*C) of either RC stage.
double rc_cutoff_hz(double r, double c);

/// Real-input FFT magnitude spectrum (single-sided amplitudes).
/// Throws std::invalid_argument for fewer than 2 samples.
Spectrum fft_spectrum(const Waveform& w);

/// Frequency of the strongest bin, optionally skipping DC.
/// Throws std::runtime_error when the considered bins are all zero.
double dominant_frequency(const Spectrum& s, bool exclude_dc);

/// Amplitude of the bin closest to `hz`.
double amplitude_near(const Spectrum& s, double hz);

/// Sum of squared samples (time-domain energy).
double signal_energy(const Waveform& w);

/// The same energy computed from the single-sided spectrum; equals
/// signal_energy of the originating waveform up to rounding (Parseval).
double spectrum_energy(const Spectrum& s);

/// Root mean square of a waveform.
double waveform_rms(const Waveform& w);

}  // namespace podsim
