#include <doctest.h>

#include <cmath>
#include <complex>

#include "washboard/errors.hpp"
#include "washboard/pulse.hpp"

using namespace washboard;
using cd = std::complex<double>;

namespace {

BlochSolution solve(double s, double q, int bands) {
    LatticeConfig c;
    c.depth_s = s;
    c.num_bands = bands;
    return solve_bands(c, q);
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// psi_n(x) = sum_k c_nk e^{i pi (q + 2k) x} on one period
cd bloch_wave(const BlochSolution& sol, int n, double x) {
    const int M = sol.cutoff();
    cd v = 0.0;
    for (int k = -M; k <= M; ++k)
        v += sol.coefficients(k + M, n) * std::polar(1.0, constants::pi * (sol.q + 2.0 * k) * x);
    return v;
}

}  // namespace

TEST_CASE("displacement by zero and by a full site") {
    const auto sol = solve(18.0, 0.3, 7);
    CHECK(max_abs(displacement_matrix(sol, 0.0) - Eigen::MatrixXcd::Identity(7, 7)) < 1e-12);
    const auto d1 = displacement_matrix(sol, 1.0);
    CHECK(max_abs(d1.cwiseAbs().cast<cd>() - Eigen::MatrixXcd::Identity(7, 7)) < 1e-12);
    // a whole-site shift is a pure Bloch phase
    CHECK(std::abs(d1(0, 0) - std::polar(1.0, -constants::pi * 0.3)) < 1e-12);
}

TEST_CASE("displacements compose in the complete basis") {
    const auto sol = solve(18.0, -0.45, 31);
    for (auto [a, b] : {std::pair{0.1, 0.2}, {0.25, -0.4}, {0.5, 0.5}}) {
        const Eigen::MatrixXcd lhs = displacement_matrix(sol, a) * displacement_matrix(sol, b);
        CHECK(max_abs(lhs - displacement_matrix(sol, a + b)) < 1e-10);
    }
    CHECK(max_abs(displacement_matrix(sol, -0.2) - displacement_matrix(sol, 0.2).adjoint()) < 1e-12);
}

TEST_CASE("truncated displacement stays unitary on the low bands") {
    const auto sol = solve(18.0, 0.1, 20);
    for (double dx : {0.1, 0.25, 0.5}) {
        const auto d = displacement_matrix(sol, dx);
        for (int col = 0; col < 2; ++col) CHECK(std::abs(d.col(col).squaredNorm() - 1.0) < 1e-6);
    }
}

TEST_CASE("matrix elements match a position-space overlap integral") {
    const auto sol = solve(18.0, 0.35, 7);
    const double dx = 0.2;
    const auto d = displacement_matrix(sol, dx);
    const int n_x = 256;
    for (int n = 0; n < 3; ++n) {
        for (int m = 0; m < 3; ++m) {
            cd integral = 0.0;
            for (int i = 0; i < n_x; ++i) {
                const double x = static_cast<double>(i) / n_x;
                integral += std::conj(bloch_wave(sol, n, x)) * bloch_wave(sol, m, x - dx);
            }
            integral /= n_x;
            CHECK(std::abs(integral - d(n, m)) < 1e-8);
        }
    }
}

TEST_CASE("free evolution") {
    const auto sol = solve(18.0, 0.0, 7);
    const double w = 2.0 * constants::pi * 685.0;
    const auto a = free_evolution(sol, 30e-6, w);
    const auto b = free_evolution(sol, 70e-6, w);
    const auto ab = free_evolution(sol, 100e-6, w);
    CHECK((a.cwiseProduct(b) - ab).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((a.cwiseAbs() - Eigen::VectorXd::Ones(7)).cwiseAbs().maxCoeff() < 1e-14);

    // the relative band 1-2 phase returns after h / (E2 - E1)
    const double t = 1.0 / (685.0 * (sol.energies(1) - sol.energies(0)));
    const auto u = free_evolution(sol, t, w);
    CHECK(std::abs(u(1) / u(0) - 1.0) < 1e-10);
    CHECK_THROWS_AS(free_evolution(sol, -1e-6, w), ValidationError);
}

TEST_CASE("pulse schedules") {
    const double t12 = 200e-6;
    SUBCASE("single step") {
        const auto s = pulse_schedule(PulseSpec::single_step(0.25), t12);
        REQUIRE(s.size() == 1);
        CHECK(s[0].shift == 0.25);
        CHECK(s[0].evolve_s == 0.0);
    }
    SUBCASE("square: out, wait tau T12, back") {
        const auto s = pulse_schedule(PulseSpec::square(0.2, 0.4), t12);
        REQUIRE(s.size() == 2);
        CHECK(s[0].shift == 0.2);
        CHECK(s[0].evolve_s == doctest::Approx(0.4 * t12));
        CHECK(s[1].shift == -0.2);
        CHECK(pulse_duration(PulseSpec::square(0.2, 0.4), t12) == doctest::Approx(80e-6));
    }
    SUBCASE("gaussian: symmetric samples, net zero shift") {
        const auto spec = PulseSpec::gaussian(0.3, 0.5);
        const auto s = pulse_schedule(spec, t12);
        const double sigma = 0.5 * t12 / 2.3548200450309493;
        const auto K = static_cast<long>(std::floor(3.0 * sigma / 5e-6));
        REQUIRE(s.size() == static_cast<std::size_t>(2 * K + 2));
        double pos = 0.0, peak = 0.0;
        for (const auto& st : s) {
            pos += st.shift;
            peak = std::max(peak, pos);
        }
        CHECK(std::abs(pos) < 1e-15);
        CHECK(peak == doctest::Approx(0.3));
        CHECK(pulse_duration(spec, t12) == doctest::Approx((2 * K + 1) * 5e-6));
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(pulse_schedule(PulseSpec::single_step(0.6), t12), ValidationError);
        CHECK_THROWS_AS(pulse_schedule(PulseSpec::square(0.2, -0.1), t12), ValidationError);
        CHECK_THROWS_AS(pulse_schedule(PulseSpec::gaussian(0.2, 0.0), t12), ValidationError);
        auto bad = PulseSpec::single_step(0.2);
        bad.fwhm_scaled = 0.3;
        CHECK_THROWS_AS(bad.validate(), ValidationError);
        CHECK_THROWS_AS(pulse_schedule(PulseSpec::single_step(0.2), 0.0), ValidationError);
        CHECK_THROWS_AS(parse_pulse_kind("triangle"), ValidationError);
        CHECK(parse_pulse_kind("single-step") == PulseKind::single_step);
    }
}

TEST_CASE("zero amplitude pulses leave band populations alone") {
    const auto sol = solve(18.0, 0.2, 7);
    const PulseClock clock{2.0 * constants::pi * 685.0, 200e-6};
    for (const auto& spec : {PulseSpec::single_step(0.0), PulseSpec::square(0.0, 0.5), PulseSpec::gaussian(0.0, 0.4)}) {
        const auto op = pulse_operator(spec, sol, clock);
        CHECK(max_abs(op.cwiseAbs().cast<cd>() - Eigen::MatrixXcd::Identity(7, 7)) < 1e-12);
    }
}

TEST_CASE("apply_pulse agrees with the operator and checks its input") {
    const auto sol = solve(18.0, -0.6, 7);
    const PulseClock clock{2.0 * constants::pi * 685.0, 200e-6};
    const auto spec = PulseSpec::gaussian(0.2, 0.3);
    const auto in = BandAmplitudes::basis_state(sol, 1);
    const auto out = apply_pulse(spec, sol, clock, in);
    CHECK((out.amps - pulse_operator(spec, sol, clock).col(0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out.amps.squaredNorm() <= 1.0 + 1e-12);

    auto wrong_q = in;
    wrong_q.q = 0.1;
    CHECK_THROWS_AS(apply_pulse(spec, sol, clock, wrong_q), ValidationError);
    auto too_big = in;
    too_big.amps(1) = 1.0;
    CHECK_THROWS_AS(apply_pulse(spec, sol, clock, too_big), ValidationError);
    CHECK_THROWS_AS(BandAmplitudes::basis_state(sol, 8), ValidationError);
}
