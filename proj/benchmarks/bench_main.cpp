#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "podsim/battery.hpp"
#include "podsim/busnet.hpp"
#include "podsim/estimation.hpp"
#include "podsim/inverter.hpp"
#include "podsim/random.hpp"
#include "podsim/world.hpp"

namespace {

void BM_PoseFilterStep(benchmark::State& state) {
    const podsim::TrajectoryProfile profile =
        podsim::auto_decel_profile(260.0, 120, 1.0, 72);
    const std::vector<double> planned = podsim::generate_accel_profile(profile);
    const podsim::FilterStages noise{{5.0, 10.0}, {35.0, 10.0}, {200.0, 16384.0}};
    const podsim::ObservationModel obs{1.0};
    podsim::GaussianSampler rng(7, 1);

    podsim::PoseFilter filter(planned, profile.dt, noise, obs, obs, obs);
    std::size_t k = 0;
    for (auto _ : state) {
        if (k == planned.size()) {
            state.PauseTiming();
            filter = podsim::PoseFilter(planned, profile.dt, noise, obs, obs, obs);
            k = 0;
            state.ResumeTiming();
        }
        const double z = rng.gaussian(planned[k], 1.0);
        benchmark::DoNotOptimize(filter.step(z, z, z));
        ++k;
    }
}
BENCHMARK(BM_PoseFilterStep);

void BM_IccWindow(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    podsim::GaussianSampler rng(11, 4);
    podsim::CellPairTrace trace;
    trace.dt_sample = 0.01;
    trace.x1.resize(n);
    trace.x2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        trace.x1[i] = rng.gaussian(3.3, 0.01);
        trace.x2[i] = rng.gaussian(3.3, 0.01);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(podsim::icc(trace));
    }
}
BENCHMARK(BM_IccWindow)->Arg(100)->Arg(1000);

void BM_BusArbitrate(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    podsim::GaussianSampler rng(3, 9);
    std::vector<podsim::BusMessage> msgs(n);
    for (std::size_t i = 0; i < n; ++i) {
        msgs[i].priority = static_cast<int>(i * 2654435761u % 7);
        msgs[i].seq = i;
        msgs[i].msg_id = i;
        msgs[i].payload = podsim::TelemetryPayload{0, 0.0};
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(podsim::arbitrate(msgs));
    }
}
BENCHMARK(BM_BusArbitrate)->Arg(64)->Arg(1024);

void BM_FftSpectrum(benchmark::State& state) {
    podsim::InverterConfig cfg;
    const podsim::Waveform wave = podsim::generate_waveform(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(podsim::fft_spectrum(wave));
    }
}
BENCHMARK(BM_FftSpectrum);

}  // namespace

BENCHMARK_MAIN();
