#include "washboard/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "washboard/errors.hpp"

namespace washboard {

double HoConfig::period() const {
    if (!(omega > 0.0)) throw ValidationError("HoConfig.omega must be > 0");
    return 2.0 * constants::pi / omega;
}

// a = pi s^{1/4} sigma and p0 sigma / hbar = 1/sqrt(2), so omega drops out.
double HoConfig::xi_from_displacement(double dx_over_a) const {
    return dx_over_a * constants::pi * std::pow(depth_s, 0.25) / std::sqrt(2.0);
}

double HoConfig::displacement_from_xi(double xi) const {
    return xi * std::sqrt(2.0) / (constants::pi * std::pow(depth_s, 0.25));
}

HoConfig HoConfig::matched_to(const LatticeConfig& lattice) {
    HoConfig cfg;
    cfg.depth_s = lattice.depth_s;
    cfg.omega = 2.0 * constants::pi / mean_splitting_period(lattice);
    return cfg;
}

double ho_single_step_coupling(double xi) {
    const double x2 = xi * xi;
    return x2 * std::exp(-x2);
}

double ho_square_delay_angle(double dx_over_r1) {
    if (dx_over_r1 < 0.5) return -1.0;
    return std::clamp(1.0 - 1.0 / (2.0 * dx_over_r1 * dx_over_r1), -1.0, 1.0);
}

Eigen::MatrixXcd ho_displacement(double xi, int n_levels) {
    if (n_levels < 2) throw ValidationError("ho_displacement: need at least 2 levels");
    using cd = std::complex<double>;
    // H = i xi (a^dag - a) is Hermitian and D = exp(-i H)
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n_levels, n_levels);
    for (int n = 0; n + 1 < n_levels; ++n) {
        const double s = std::sqrt(static_cast<double>(n + 1));
        h(n + 1, n) = cd(0.0, xi * s);
        h(n, n + 1) = cd(0.0, -xi * s);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("ho_displacement: eigensolver failed");
    Eigen::VectorXcd phases(n_levels);
    for (int k = 0; k < n_levels; ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k));
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

HoPopulations ho_fock_simulation(const HoConfig& cfg, const PulseSpec& spec, int n_levels) {
    if (n_levels < 10) throw ValidationError("ho_fock_simulation: n_levels must be >= 10");
    const double period = cfg.period();
    const auto schedule = pulse_schedule(spec, period);

    Eigen::VectorXcd state = Eigen::VectorXcd::Zero(n_levels);
    state(0) = 1.0;
    for (const auto& step : schedule) {
        if (step.shift != 0.0) state = ho_displacement(cfg.xi_from_displacement(step.shift), n_levels) * state;
        if (step.evolve_s > 0.0) {
            for (int n = 0; n < n_levels; ++n) state(n) *= std::polar(1.0, -cfg.omega * n * step.evolve_s);
        }
    }

    HoPopulations out;
    out.p = state.cwiseAbs2();
    out.leak = out.p(n_levels - 1);
    if (out.leak > 1e-6) {
        std::ostringstream os;
        os << "ho_fock_simulation: truncation leak " << out.leak << " exceeds 1e-6 at " << n_levels << " levels";
        throw NumericalError(os.str());
    }
    return out;
}

}  // namespace washboard
