#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "washboard/envelope_fit.hpp"
#include "washboard/errors.hpp"

using namespace washboard;

namespace {

struct Trace {
    std::vector<double> t, y;
};

Trace synthetic(const EnvelopeFit& truth, double t_end, double dt = 4e-6) {
    Trace tr;
    for (double t = 0.0; t < t_end; t += dt) {
        tr.t.push_back(t);
        tr.y.push_back(evaluate(truth, t));
    }
    return tr;
}

EnvelopeFit truth() {
    EnvelopeFit f;
    f.amplitude = 0.4;
    f.period_s = 190e-6;
    f.gaussian_rms_s = 250e-6;
    f.offset = 0.5;
    f.phase = 0.3;
    return f;
}

}  // namespace

TEST_CASE("recovers a clean damped cosine") {
    const auto tr = synthetic(truth(), 1.5e-3);
    const auto fit = fit_envelope(tr.t, tr.y);
    CHECK(fit.amplitude == doctest::Approx(0.4).epsilon(0.01));
    CHECK(fit.period_s == doctest::Approx(190e-6).epsilon(0.01));
    CHECK(fit.gaussian_rms_s == doctest::Approx(250e-6).epsilon(0.01));
    CHECK(fit.offset == doctest::Approx(0.5).epsilon(0.01));
    CHECK(fit.residual_norm < 1e-6);
}

TEST_CASE("recovers parameters under mild noise") {
    auto tr = synthetic(truth(), 1.5e-3);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.005);
    for (auto& v : tr.y) v += noise(rng);
    const auto fit = fit_envelope(tr.t, tr.y);
    CHECK(fit.amplitude == doctest::Approx(0.4).epsilon(0.02));
    CHECK(fit.period_s == doctest::Approx(190e-6).epsilon(0.01));
    CHECK(fit.gaussian_rms_s == doctest::Approx(250e-6).epsilon(0.03));
}

TEST_CASE("free centre locates a revival") {
    auto t = truth();
    t.center_s = 2.0e-3;
    t.gaussian_rms_s = 200e-6;
    t.offset = 0.0;
    const auto tr = synthetic(t, 3.2e-3);
    FitOptions opt;
    opt.fit_center = true;
    const auto fit = fit_envelope(tr.t, tr.y, opt);
    CHECK(fit.center_s == doctest::Approx(2.0e-3).epsilon(0.01));
    CHECK(fit.amplitude == doctest::Approx(0.4).epsilon(0.01));

    opt.fixed_width_s = 200e-6;
    const auto pinned = fit_envelope(tr.t, tr.y, opt);
    CHECK(pinned.gaussian_rms_s == 200e-6);
    CHECK(pinned.amplitude == doctest::Approx(0.4).epsilon(0.01));
}

TEST_CASE("degenerate inputs") {
    std::vector<double> t, flat, noise;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 400; ++i) {
        t.push_back(i * 4e-6);
        flat.push_back(0.7);
        noise.push_back(u(rng));
    }
    const auto f = fit_envelope(t, flat);
    CHECK(f.amplitude == 0.0);
    CHECK(f.offset == doctest::Approx(0.7));
    CHECK(spectral_peak_frequency(t, flat) == 0.0);
    CHECK_THROWS_AS(fit_envelope(t, noise), NumericalError);

    // under three periods
    const auto short_tr = synthetic(truth(), 400e-6);
    CHECK_THROWS_AS(fit_envelope(short_tr.t, short_tr.y), ValidationError);

    std::vector<double> uneven = t;
    uneven[5] += 1e-6;
    CHECK_THROWS_AS(fit_envelope(uneven, flat), ValidationError);
    CHECK_THROWS_AS(fit_envelope(std::span(t).first(10), flat), ValidationError);
}
