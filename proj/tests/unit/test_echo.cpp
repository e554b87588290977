#include <doctest.h>

#include <cmath>

#include "washboard/echo.hpp"
#include "washboard/errors.hpp"

using namespace washboard;

namespace {

LatticeConfig base20() {
    LatticeConfig c;
    c.depth_s = 20.0;
    return c;
}

EnsembleSpec spread(int members, double sigma = 3.5) {
    EnsembleSpec s;
    s.center_depth_s = 20.0;
    s.depth_sigma_s = sigma;
    s.n_members = members;
    return s;
}

const Ensemble& ensemble32() {
    static const Ensemble e = build_ensemble(base20(), spread(32));
    return e;
}

}  // namespace

TEST_CASE("ensemble sampling") {
    const auto& e = ensemble32();
    REQUIRE(e.members.size() == 32);
    CHECK(e.t12_center_s == doctest::Approx(mean_splitting_period(base20())).epsilon(1e-3));
    double mean = 0.0;
    for (const auto& m : e.members) mean += m.depth_s;
    CHECK(mean / 32 == doctest::Approx(20.0).epsilon(1e-9));  // symmetric quantiles
    CHECK(e.members.front().depth_s < e.members.back().depth_s);

    auto js = spread(8);
    js.jitter = true;
    const auto a = build_ensemble(base20(), js);
    const auto b = build_ensemble(base20(), js);
    js.seed = 2;
    const auto c = build_ensemble(base20(), js);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.members[i].depth_s == b.members[i].depth_s);
    CHECK(a.members[3].depth_s != c.members[3].depth_s);

    auto bad = spread(8);
    bad.n_members = 0;
    CHECK_THROWS_AS(build_ensemble(base20(), bad), ValidationError);
}

TEST_CASE("time grid and swap unitary") {
    const auto g = time_grid(0.0, 1e-3, 4e-6);
    CHECK(g.size() == 250);
    CHECK(g.back() < 1e-3);
    const auto s = band_swap(4);
    CHECK(std::abs(s(0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(s(1, 0) - 1.0) < 1e-15);
    CHECK(std::abs(s(2, 2) - 1.0) < 1e-15);
    CHECK(std::abs(s(0, 0)) < 1e-15);
}

TEST_CASE("population trace closes the norm and is deterministic") {
    const auto times = time_grid(0.0, 1.5e-3, 4e-6);
    const auto a = simulate_population_trace(ensemble32(), 1.0 / 6, times);
    const auto b = simulate_population_trace(ensemble32(), 1.0 / 6, times);
    CHECK(a.meta.max_norm_defect < 1e-6);
    CHECK(a.p1 == b.p1);
    for (std::size_t i = 0; i < times.size(); ++i) CHECK(std::abs(a.p1[i] + a.p2[i] + a.loss[i] - 1.0) < 1e-6);

    const auto m = simulate_member(ensemble32(), 5, 1.0 / 6, times);
    CHECK(m.meta.max_norm_defect < 1e-6);
    CHECK_THROWS_AS(simulate_member(ensemble32(), 99, 1.0 / 6, times), ValidationError);

    const std::vector<double> backwards{1e-4, 0.0};
    CHECK_THROWS_AS(simulate_population_trace(ensemble32(), 1.0 / 6, backwards), ValidationError);
    CHECK_THROWS_AS(simulate_population_trace(ensemble32(), 0.0, times), ValidationError);
}

TEST_CASE("dephasing width shrinks as the depth spread grows") {
    const auto times = calibration_times(258e-6);
    const auto narrow = fit_envelope(simulate_population_trace(build_ensemble(base20(), spread(32, 2.5)), 1.0 / 6, times));
    const auto wide = fit_envelope(simulate_population_trace(build_ensemble(base20(), spread(32, 4.5)), 1.0 / 6, times));
    CHECK(wide.gaussian_rms_s < narrow.gaussian_rms_s);
    CHECK(narrow.period_s == doctest::Approx(188e-6).epsilon(0.05));
}

TEST_CASE("member count is converged") {
    const auto times = calibration_times(258e-6);
    const auto a = fit_envelope(simulate_population_trace(build_ensemble(base20(), spread(32)), 1.0 / 6, times));
    const auto b = fit_envelope(simulate_population_trace(build_ensemble(base20(), spread(64)), 1.0 / 6, times));
    CHECK(a.amplitude == doctest::Approx(b.amplitude).epsilon(0.02));
    CHECK(a.gaussian_rms_s == doctest::Approx(b.gaussian_rms_s).epsilon(0.02));
}

TEST_CASE("ideal swap revives the oscillation at 2 t0") {
    // a small preparation kicks almost nothing into band 3, so the swap is the whole story
    const double prep = 0.03;
    const auto& ens = ensemble32();
    const auto original = fit_envelope(simulate_population_trace(ens, prep, calibration_times(258e-6)));
    const auto swap = EchoPulse::fixed(band_swap(ens.spec.num_bands));
    for (double t0 : {1.0e-3, 1.5e-3}) {
        const auto times = time_grid(t0 + 40e-6, 2.0 * t0 + 1.0e-3, 4e-6);
        const auto echo = simulate_echo(ens, prep, swap, t0, times);
        const auto base = simulate_baseline(ens, prep, swap, t0, times);
        const auto amp = echo_amplitude(echo, base, original);
        CHECK(amp.ratio == doctest::Approx(1.0).epsilon(0.02));
        CHECK(std::abs(amp.fit.center_s - 2.0 * t0) < 0.05 * t0);
        CHECK_FALSE(amp.below_resolution);
    }
}

TEST_CASE("an empty echo pulse gives no echo") {
    const auto ens = build_ensemble(base20(), spread(128));
    const auto original = fit_envelope(simulate_population_trace(ens, 1.0 / 6, calibration_times(258e-6)));
    const double t0 = 1.04e-3;
    const auto times = time_grid(1.1e-3, 3e-3, 4e-6);
    const auto pulse = EchoPulse::lattice(PulseSpec::single_step(0.0));
    const auto amp = echo_amplitude(simulate_echo(ens, 1.0 / 6, pulse, t0, times),
                                    simulate_baseline(ens, 1.0 / 6, pulse, t0, times), original);
    CHECK(amp.ratio < 0.01);
}

TEST_CASE("echo inputs are checked") {
    const auto& ens = ensemble32();
    const auto swap = EchoPulse::fixed(band_swap(ens.spec.num_bands));
    const auto times = time_grid(1.1e-3, 2.5e-3, 4e-6);
    const auto other = time_grid(1.1e-3, 2.5e-3, 8e-6);
    const auto e = simulate_echo(ens, 0.03, swap, 1e-3, times);
    const auto b = simulate_baseline(ens, 0.03, swap, 1e-3, other);
    EnvelopeFit orig;
    orig.amplitude = 0.1;
    orig.period_s = 188e-6;
    orig.gaussian_rms_s = 250e-6;
    CHECK_THROWS_AS(echo_amplitude(e, b, orig), ValidationError);
    CHECK_THROWS_AS(simulate_echo(ens, 0.03, EchoPulse::fixed(band_swap(7)), 1e-3, times), ValidationError);
    CHECK_THROWS_AS(simulate_baseline(ens, 0.03, swap, 1e-3, times, BaselineMode::late, 0.5e-3), ValidationError);
    CHECK_THROWS_AS(simulate_echo(ens, 0.03, EchoPulse::lattice(PulseSpec::gaussian(0.2, 0.3)), 1e-5, times),
                    ValidationError);
}

TEST_CASE("calibration round-trip") {
    auto spec = spread(32, 0.0);
    const auto cal = calibrate_inhomogeneity(base20(), spec, 1.0 / 6, 258e-6);
    CHECK(cal.fit.gaussian_rms_s == doctest::Approx(258e-6).epsilon(0.005));
    CHECK(cal.depth_sigma_s > 0.0);
    // longer than the sigma = 0 coherence, and shorter than the widest spread allows
    CHECK_THROWS_AS(calibrate_inhomogeneity(base20(), spec, 1.0 / 6, 3e-3), ValidationError);
    CHECK_THROWS_AS(calibrate_inhomogeneity(base20(), spec, 1.0 / 6, 100e-6), ValidationError);
}
