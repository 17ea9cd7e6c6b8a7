#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "podsim/estimation.hpp"
#include "podsim/random.hpp"
#include "podsim/world.hpp"

using namespace podsim;

TEST_CASE("scalar measurement update blends prior and observation") {
    const Gaussian1D prior{0.0, 4.0};
    const KfResult result = kf_update(prior, 2.0, ObservationModel{1.0}, NoiseParams{0.0, 1.0});
    CHECK(result.gain == 0.8);  // 4/(4+1)
    CHECK(result.posterior.mean == 1.6);
    CHECK(result.posterior.var == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("measurement update validates its inputs") {
    CHECK_THROWS_AS(kf_update({0.0, -1.0}, 0.0, ObservationModel{1.0}, NoiseParams{0.0, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(kf_update({0.0, 1.0}, 0.0, ObservationModel{1.0}, NoiseParams{0.0, -1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(kf_update({0.0, 1.0}, 0.0, ObservationModel{0.0}, NoiseParams{0.0, 1.0}),
                    std::invalid_argument);
    // both variances zero: the innovation variance degenerates
    CHECK_THROWS_AS(kf_update({0.0, 0.0}, 0.0, ObservationModel{1.0}, NoiseParams{0.0, 0.0}),
                    std::runtime_error);
}

TEST_CASE("measurement update contracts variance and bounds the gain") {
    GaussianSampler rng(9);
    for (int i = 0; i < 2000; ++i) {
        const double p = 1e-6 + 100.0 * rng.canonical();
        const double q = 100.0 * rng.canonical();  // may be ~0
        const double h = 0.1 + 5.0 * rng.canonical();
        const double z = rng.gaussian(0.0, 10.0);
        const KfResult r = kf_update({rng.gaussian(0.0, 5.0), p}, z, ObservationModel{h},
                                     NoiseParams{0.0, q});
        CHECK(r.posterior.var >= 0.0);
        CHECK(r.posterior.var <= p);
        CHECK(r.gain * h >= 0.0);
        CHECK(r.gain * h <= 1.0);
    }
}

TEST_CASE("an exact sensor pins the posterior on the measurement") {
    const KfResult r =
        kf_update({10.0, 25.0}, 11.5, ObservationModel{1.0}, NoiseParams{0.0, 0.0});
    CHECK(r.gain == 1.0);
    CHECK(r.posterior.mean == doctest::Approx(11.5).epsilon(1e-12));
    CHECK(r.posterior.var == 0.0);
}

TEST_CASE("scaling units through the observation model leaves the estimate unchanged") {
    // h' = 2h, z' = 2z, Q' = 4Q must give the bit-identical posterior: the
    // estimate lives in state units regardless of the sensor's output units.
    GaussianSampler rng(17);
    for (int i = 0; i < 2000; ++i) {
        const Gaussian1D prior{rng.gaussian(0.0, 50.0), 1e-3 + 80.0 * rng.canonical()};
        const double h = 0.25 + 4.0 * rng.canonical();
        const double q = 1e-3 + 30.0 * rng.canonical();
        const double z = rng.gaussian(0.0, 40.0);
        const KfResult base = kf_update(prior, z, ObservationModel{h}, NoiseParams{0.0, q});
        const KfResult scaled =
            kf_update(prior, 2.0 * z, ObservationModel{2.0 * h}, NoiseParams{0.0, 4.0 * q});
        CHECK(scaled.posterior.mean == base.posterior.mean);
        CHECK(scaled.posterior.var == base.posterior.var);
        CHECK(scaled.gain == base.gain / 2.0);
    }
}

TEST_CASE("acceleration prediction reads the planned curve and resets variance") {
    const std::vector<double> profile = {260.0, 246.7, 230.0};
    const NoiseParams noise{25.0, 100.0};
    const Gaussian1D prior = predict_accel(1, profile, noise);
    CHECK(prior.mean == 246.7);
    CHECK(prior.var == 25.0);
    CHECK_THROWS_AS(predict_accel(3, profile, noise), std::out_of_range);
}

TEST_CASE("velocity prediction integrates the acceleration estimate") {
    const Gaussian1D prev{10.0, 2.0};
    const Gaussian1D prior = predict_velocity(prev, 4.0, 0.5, NoiseParams{3.0, 0.0});
    CHECK(prior.mean == 12.0);  // 10 + 0.5*4
    CHECK(prior.var == 5.0);    // 2 + 3
}

TEST_CASE("position prediction uses start-of-tick velocity plus half-a-dt-squared") {
    const Gaussian1D prior =
        predict_position({0.0, 0.0}, 5.0, 1.0, 0.5, NoiseParams{2.0, 0.0});
    CHECK(prior.mean == 2.625);  // 0 + 0.5*5 + 0.5*0.25*1
    CHECK(prior.var == 2.0);
}

TEST_CASE("fiducial recalibration snaps the belief onto the marker") {
    FiducialEvent event;
    event.t = 7.0;
    event.marker_position = 60.96;
    event.marker_index = 2;
    const Gaussian1D reset = recalibrate_on_fiducial({58.0, 400.0}, event, 0.01);
    CHECK(reset.mean == 60.96);
    CHECK(reset.var == 0.01);
}

TEST_CASE("rmse matches the hand-computed value and validates input") {
    CHECK(rmse({1.0, 2.0, 3.0}, {1.0, 0.0, 3.0}) ==
          doctest::Approx(1.1547005383792515).epsilon(1e-12));
    CHECK(rmse({2.0, 2.0}, {2.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(rmse({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("the cascade tracks a noise-free world bit for bit") {
    const TrajectoryProfile profile = auto_decel_profile(260.0, 120, 1.0, 72);
    const std::vector<double> planned = generate_accel_profile(profile);
    const std::vector<GroundTruthState> truth = integrate_kinematics(planned, profile.dt);

    const FilterStages noise{{25.0, 100.0}, {1225.0, 100.0}, {40000.0, 268435456.0}};
    SUBCASE("unit observation gains") {
        PoseFilter filter(planned, profile.dt, noise, ObservationModel{1.0},
                          ObservationModel{1.0}, ObservationModel{1.0});
        for (const GroundTruthState& s : truth) {
            const PoseEstimate est = filter.step(s.a, s.v, s.x);
            CHECK(est.accel.mean == s.a);
            CHECK(est.vel.mean == s.v);
            CHECK(est.pos.mean == s.x);
            CHECK(est.t == s.t);
        }
    }
    SUBCASE("scaled observation gains") {
        const double h_tacho = 2.0;
        const double h_enc = 162.97466172610083;  // 1024/(2*pi)
        PoseFilter filter(planned, profile.dt, noise, ObservationModel{1.0},
                          ObservationModel{h_tacho}, ObservationModel{h_enc});
        for (const GroundTruthState& s : truth) {
            const PoseEstimate est = filter.step(s.a, h_tacho * s.v, h_enc * s.x);
            CHECK(est.accel.mean == s.a);
            CHECK(est.vel.mean == s.v);
            CHECK(est.pos.mean == s.x);
        }
    }
}

TEST_CASE("filter variances settle to a fixed point") {
    const std::vector<double> planned(50, 1.0);
    const FilterStages noise{{25.0, 100.0}, {1225.0, 100.0}, {40000.0, 268435456.0}};
    PoseFilter filter(planned, 1.0, noise, ObservationModel{1.0}, ObservationModel{1.0},
                      ObservationModel{1.0});
    PoseEstimate prev{};
    for (std::size_t k = 0; k < 50; ++k) {
        const PoseEstimate est = filter.step(1.0, 0.0, 0.0);
        CHECK(est.accel.var > 0.0);
        CHECK(est.vel.var > 0.0);
        CHECK(est.pos.var > 0.0);
        if (k > 0) {
            // the acceleration stage re-seeds its variance every tick, so its
            // posterior variance is constant from the first step onward
            CHECK(est.accel.var == prev.accel.var);
            // the integrating stages converge to a steady state
            if (k > 30) {
                CHECK(est.vel.var == doctest::Approx(prev.vel.var).epsilon(1e-9));
            }
        }
        prev = est;
    }
}

TEST_CASE("a fiducial reset pulls the next position prior onto the marker") {
    const std::vector<double> planned(10, 0.0);
    const FilterStages noise{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1e12}};
    PoseFilter filter(planned, 1.0, noise, ObservationModel{1.0}, ObservationModel{1.0},
                      ObservationModel{1.0});
    (void)filter.step(0.0, 0.0, 0.0);

    FiducialEvent event;
    event.marker_position = 30.48;
    event.marker_index = 1;
    filter.recalibrate(event, 0.01);
    CHECK(filter.position().mean == 30.48);
    CHECK(filter.position().var == 0.01);

    // with no motion and a near-useless encoder the next posterior stays put
    const PoseEstimate est = filter.step(0.0, 0.0, 30.48);
    CHECK(est.pos.mean == doctest::Approx(30.48).epsilon(1e-9));
    CHECK(est.pos.var < 1.5);  // 0.01 + R, then contracted by the update
}

TEST_CASE("the filter refuses to run past its planned profile") {
    const std::vector<double> planned(3, 1.0);
    const FilterStages noise{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
    PoseFilter filter(planned, 1.0, noise, ObservationModel{1.0}, ObservationModel{1.0},
                      ObservationModel{1.0});
    for (int i = 0; i < 3; ++i) (void)filter.step(1.0, 0.0, 0.0);
    CHECK(filter.ticks_done() == 3);
    CHECK_THROWS_AS(filter.step(1.0, 0.0, 0.0), std::out_of_range);
}

TEST_CASE("filter construction validates the profile and the step") {
    const FilterStages noise{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
    CHECK_THROWS_AS(PoseFilter({}, 1.0, noise, ObservationModel{1.0}, ObservationModel{1.0},
                               ObservationModel{1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(PoseFilter({1.0}, 0.0, noise, ObservationModel{1.0},
                               ObservationModel{1.0}, ObservationModel{1.0}),
                    std::invalid_argument);
}
