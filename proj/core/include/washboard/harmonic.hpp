#pragma once

#include <Eigen/Dense>

#include "washboard/pulse.hpp"

namespace washboard {

/**
 Harmonic oscillator matched to a lattice: omega is the q-averaged band 1-2
 angular splitting, and lengths are quoted in the lattice-equivalent spacing
 a = pi s^{1/4} sigma with sigma = sqrt(hbar / m omega).
 */
struct HoConfig {
    double omega = 0.0;    ///< rad/s
    double depth_s = 18.0; ///< sets the displacement unit a

    /// Mean splitting period 2 pi / omega.
    double period() const;
    /// Converts a displacement in units of a to xi = p0 dx / hbar = dx / (2 x0).
    double xi_from_displacement(double dx_over_a) const;
    /// Inverse of xi_from_displacement.
    double displacement_from_xi(double xi) const;

    /// HoConfig with omega = 2 pi / T12 of the given lattice.
    static HoConfig matched_to(const LatticeConfig& lattice);
};

/// |<1|D|0>|^2 = xi^2 exp(-xi^2).
double ho_single_step_coupling(double xi);

/// cos(theta) = 1 - 1 / (2 (dx/r1)^2), clamped to [-1, 1]; below dx/r1 = 0.5 returns -1.
double ho_square_delay_angle(double dx_over_r1);

/// exp(xi (a^dag - a)) in a truncated number basis; shifts position by 2 x0 xi.
Eigen::MatrixXcd ho_displacement(double xi, int n_levels);

struct HoPopulations {
    Eigen::VectorXd p;   ///< |<n| O |0>|^2, n = 0..n_levels-1
    double leak = 0.0;   ///< population of the highest retained level
    double p01() const { return p(1); }
};

/**
 Runs a lattice pulse on the oscillator ground state in a truncated Fock
 basis. Displacements map through xi_from_displacement and delays through
 period(). Throws NumericalError if the top retained level holds more than
 1e-6 of the population.
 */
HoPopulations ho_fock_simulation(const HoConfig& cfg, const PulseSpec& spec, int n_levels = 60);

}  // namespace washboard
