#include <doctest.h>

#include <cmath>
#include <complex>

#include <Eigen/Dense>

#include "washboard/errors.hpp"
#include "washboard/lattice.hpp"

using namespace washboard;

namespace {

LatticeConfig at_depth(double s) {
    LatticeConfig c;
    c.depth_s = s;
    return c;
}

// -psi''/pi^2 + s cos^2(pi x) psi on one period, psi(x+1) = e^{i pi q} psi(x), 4th-order stencil.
Eigen::VectorXd finite_difference_bands(double s, double q, int n) {
    const double h = 1.0 / n;
    const double kin = 1.0 / (constants::pi * constants::pi * 12.0 * h * h);
    const std::complex<double> twist = std::polar(1.0, constants::pi * q);
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(n, n);
    const int offsets[] = {-2, -1, 0, 1, 2};
    const double stencil[] = {-1.0, 16.0, -30.0, 16.0, -1.0};
    for (int i = 0; i < n; ++i) {
        const double c = std::cos(constants::pi * i * h);
        H(i, i) += s * c * c;
        for (int k = 0; k < 5; ++k) {
            int j = i + offsets[k];
            std::complex<double> phase = 1.0;
            if (j >= n) {
                j -= n;
                phase = twist;
            } else if (j < 0) {
                j += n;
                phase = std::conj(twist);
            }
            H(i, j) += -kin * stencil[k] * phase;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double spread(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *hi - *lo;
}

}  // namespace

TEST_CASE("lattice spacing follows the beam geometry") {
    LatticeConfig c;
    CHECK(c.lattice_spacing_m() == doctest::Approx(0.93e-6).epsilon(0.01));
    CHECK(c.lattice_spacing_m() == doctest::Approx(constants::pi / c.lattice_vector()).epsilon(1e-12));
}

TEST_CASE("config validation names the key") {
    LatticeConfig c;
    c.depth_s = -1.0;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("lattice.depth_s"), ValidationError);
    c = LatticeConfig{};
    c.num_bands = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = LatticeConfig{};
    c.num_plane_waves = 2;  // 5 plane waves < 7 bands
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK_THROWS_AS(solve_bands(LatticeConfig{}, 1.5), ValidationError);
    CHECK_THROWS_AS(brillouin_grid(1), ValidationError);
}

TEST_CASE("free particle limit") {
    const auto sol = solve_bands(at_depth(0.0), 0.0);
    const double expect[] = {0.0, 4.0, 4.0, 16.0, 16.0, 36.0, 36.0};
    for (int n = 0; n < 7; ++n) CHECK(sol.energies(n) == doctest::Approx(expect[n]).epsilon(1e-12));

    const auto bs = band_structure(at_depth(0.0), 64);
    for (const auto& s : bs.solutions) CHECK(std::abs(s.energies(0) - s.q * s.q) < 1e-9);
}

TEST_CASE("Bloch solutions are orthonormal, ascending and phase-fixed") {
    for (double q : {-1.0, -0.4, 0.0, 0.3, 0.99}) {
        const auto sol = solve_bands(at_depth(18.0), q);
        const Eigen::MatrixXd g = sol.coefficients.transpose() * sol.coefficients;
        CHECK((g - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff() < 1e-10);
        for (int n = 1; n < 7; ++n) CHECK(sol.energies(n) > sol.energies(n - 1));
        for (int n = 0; n < 7; ++n) {
            // largest entry positive, lowest index wins a tie
            const auto col = sol.coefficients.col(n);
            const double top = col.cwiseAbs().maxCoeff();
            Eigen::Index idx = 0;
            while (std::abs(col(idx)) < top - 1e-12) ++idx;
            CHECK(col(idx) > 0.0);
        }
    }
}

TEST_CASE("basis convergence: doubling M moves energies by < 1e-8") {
    for (double s : {18.0, 30.0}) {
        LatticeConfig small = at_depth(s), big = at_depth(s);
        big.num_plane_waves = 30;
        for (double q : {0.0, 0.3, -0.85}) {
            const auto a = solve_bands(small, q);
            const auto b = solve_bands(big, q);
            CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("finite-difference oracle agrees with the plane-wave solver") {
    for (double q : {0.0, 0.5}) {
        const auto pw = solve_bands(at_depth(18.0), q);
        const auto fd = finite_difference_bands(18.0, q, 300);
        for (int n = 0; n < 4; ++n) CHECK(std::abs(pw.energies(n) - fd(n)) < 1e-6);
    }
}

TEST_CASE("parity: E(q) = E(-q) and coefficients reverse") {
    const auto cfg = at_depth(18.0);
    for (double q : {0.125, 0.5, 0.8}) {
        const auto a = solve_bands(cfg, q);
        const auto b = solve_bands(cfg, -q);
        CHECK((a.energies - b.energies).cwiseAbs().maxCoeff() < 1e-10);
        for (int n = 0; n < 7; ++n) {
            const Eigen::VectorXd rev = b.coefficients.col(n).reverse();
            const double overlap = std::abs(a.coefficients.col(n).dot(rev));
            CHECK(overlap == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("band structure at s=18: uniform grid, flat lowest band") {
    const auto bs = band_structure(at_depth(18.0), 64);
    REQUIRE(bs.q_grid.size() == 64);
    CHECK(bs.q_grid.front() == -1.0);
    for (std::size_t j = 1; j < bs.q_grid.size(); ++j)
        CHECK(bs.q_grid[j] - bs.q_grid[j - 1] == doctest::Approx(2.0 / 64).epsilon(1e-12));
    CHECK(bs.q_grid.back() < 1.0);
    CHECK(spread(bs.band(0)) < 0.05 * spread(bs.band(1)));
}

TEST_CASE("mean splitting period") {
    CHECK(mean_splitting_period(at_depth(18.0)) == doctest::Approx(200e-6).epsilon(0.03));
    CHECK(mean_splitting_period(at_depth(20.0)) == doctest::Approx(188e-6).epsilon(0.03));

    // deep lattice: hbar omega = 2 sqrt(s) E_R, anharmonic shift of the splitting is -1 E_R
    LatticeConfig deep = at_depth(2500.0);
    deep.num_plane_waves = 40;
    const double harmonic = 1.0 / (deep.recoil_frequency * 2.0 * std::sqrt(deep.depth_s));
    CHECK(mean_splitting_period(deep) == doctest::Approx(harmonic).epsilon(0.02));
}

TEST_CASE("second band bound only in deep enough lattices") {
    CHECK(second_band_bound(band_structure(at_depth(18.0), 32), 18.0));
    CHECK(second_band_bound(band_structure(at_depth(4.0), 32), 4.0));
    CHECK_FALSE(second_band_bound(band_structure(at_depth(1.0), 32), 1.0));
}

TEST_CASE("Wannier functions") {
    const auto cfg = at_depth(18.0);
    std::vector<double> x;
    const int per = 32;
    for (int i = -6 * per; i < 6 * per; ++i) x.push_back(static_cast<double>(i) / per);
    const double dx = 1.0 / per;

    const auto w0 = wannier(cfg, 1, 0, x);
    const auto w1 = wannier(cfg, 1, 1, x);
    const auto w2 = wannier(cfg, 2, 0, x);

    SUBCASE("translation by one site") {
        double worst = 0.0;
        for (std::size_t i = per; i < x.size(); ++i) worst = std::max(worst, std::abs(w1[i] - w0[i - per]));
        CHECK(worst < 1e-6);
    }
    SUBCASE("band 1 sits in its own well") {
        // cos^2 puts the minima at half-integer x; site 0 is the well at x = 1/2
        double inside = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(x[i] - 0.5) < 0.5) inside += std::norm(w0[i]) * dx;
        CHECK(inside > 0.95);
    }
    SUBCASE("band 2 is odd about its well") {
        double inside = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (std::abs(x[i] - 0.5) < 0.5) inside += std::norm(w2[i]) * dx;
        CHECK(inside > 0.8);
        const std::size_t centre = 6 * per + per / 2;
        CHECK(std::abs(w2[centre]) < 1e-6);
    }
    SUBCASE("bands orthogonal on the grid") {
        std::complex<double> ov = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) ov += std::conj(w0[i]) * w2[i] * dx;
        CHECK(std::abs(ov) < 1e-6);
    }
    SUBCASE("coarse grids and bad bands are rejected") {
        std::vector<double> coarse;
        for (int i = -20; i < 20; ++i) coarse.push_back(i / 8.0);
        CHECK_THROWS_AS(wannier(cfg, 1, 0, coarse), ValidationError);
        CHECK_THROWS_AS(wannier(cfg, 8, 0, x), ValidationError);
    }
}

TEST_CASE("Landau-Zener rates") {
    const auto cfg = at_depth(18.0);
    const auto rates = lz_lifetimes(cfg);
    REQUIRE(rates.size() == 6);
    CHECK(bloch_frequency(cfg) == doctest::Approx(2.86 * 685.0));
    for (const auto& r : rates) {
        const double expect =
            bloch_frequency(cfg) * std::exp(-constants::pi * constants::pi * r.gap * r.gap / (8.0 * 2.86 * r.band));
        CHECK(r.rate_hz == doctest::Approx(expect).epsilon(1e-12));
        CHECK(r.lifetime_s == doctest::Approx(1.0 / r.rate_hz).epsilon(1e-12));
    }
    // deeper bands escape faster
    CHECK(rates[0].rate_hz < rates[1].rate_hz);
    CHECK(rates[1].rate_hz < rates[2].rate_hz);
    CHECK(rates[2].lifetime_s == doctest::Approx(830e-6).epsilon(0.10));
    CHECK(std::abs(std::log10(rates[0].rate_hz / 4e-7)) < 1.0);

    LatticeConfig flat = cfg;
    flat.tilt_per_site = 0.0;
    CHECK_THROWS_AS(lz_lifetimes(flat), ValidationError);
}
