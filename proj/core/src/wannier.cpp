#include <algorithm>
#include <cmath>
#include <complex>

#include "washboard/errors.hpp"
#include "washboard/lattice.hpp"

namespace washboard {

namespace {

using cd = std::complex<double>;
constexpr double pi = constants::pi;

cd bloch_value(const BlochSolution& sol, int band, double x) {
    const int M = sol.cutoff();
    cd v{0.0, 0.0};
    for (int m = -M; m <= M; ++m) v += sol.coefficients(m + M, band) * std::polar(1.0, pi * (sol.q + 2.0 * m) * x);
    return v;
}

// Hermite-Gaussian H_n(y / sigma) exp(-y^2 / 2 sigma^2), physicists' recurrence
double trial(int n, double y, double sigma) {
    const double u = y / sigma;
    double h0 = 1.0, h1 = 2.0 * u;
    if (n == 0) return std::exp(-0.5 * u * u);
    for (int k = 1; k < n; ++k) {
        const double h2 = 2.0 * u * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1 * std::exp(-0.5 * u * u);
}

}  // namespace

std::vector<std::complex<double>> wannier(const LatticeConfig& config, int band, int site,
                                          std::span<const double> x_grid) {
    if (band < 1 || band > config.num_bands) throw ValidationError("wannier: band index out of range");
    if (x_grid.size() < 2) throw ValidationError("wannier: x-grid needs at least 2 points");
    const double dx = x_grid[1] - x_grid[0];
    if (!(dx > 0.0) || 1.0 / dx < 16.0 - 1e-9)
        throw ValidationError("wannier: x-grid coarser than 16 points per lattice period");

    const BandStructure bs = band_structure(config, config.num_q);
    const double inv_nq = 1.0 / static_cast<double>(bs.solutions.size());
    const int n = band - 1;

    // Smooth gauge: rotate each Bloch function so its overlap with a
    // Hermite-Gaussian of the right parity, sitting in the well at x = 1/2, is
    // real and positive. The coefficient-sign convention of solve_bands flips
    // with q for excited bands and would smear the result over several sites.
    const double sigma = std::min(0.25, 1.0 / (pi * std::pow(std::max(config.depth_s, 1e-12), 0.25)));
    constexpr int n_trial = 241;
    const double h_trial = 3.0 / (n_trial - 1);

    std::vector<cd> w(x_grid.size(), cd{0.0, 0.0});
    for (const auto& sol : bs.solutions) {
        cd overlap{0.0, 0.0};
        for (int j = 0; j < n_trial; ++j) {
            const double y = -1.5 + j * h_trial;
            overlap += trial(n, y, sigma) * bloch_value(sol, n, 0.5 + y);
        }
        const cd gauge = std::abs(overlap) > 1e-12 ? std::conj(overlap) / std::abs(overlap) : cd{1.0, 0.0};
        // w_l(x) = mean_q gauge(q) psi_q(x) e^{-i pi q l}; site l is the well at x = l + 1/2
        const cd weight = gauge * std::polar(inv_nq, -pi * sol.q * site);
        for (std::size_t j = 0; j < x_grid.size(); ++j) w[j] += weight * bloch_value(sol, n, x_grid[j]);
    }

    double norm = 0.0;
    for (const auto& v : w) norm += std::norm(v) * dx;
    if (!(norm > 0.0)) throw NumericalError("wannier: vanishing norm on grid");
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& v : w) v *= scale;
    return w;
}

}  // namespace washboard
