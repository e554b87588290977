#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace washboard {

/// Physical constants used to convert between lattice units and SI.
namespace constants {
inline constexpr double planck = 6.62607015e-34;  // J s
inline constexpr double pi = 3.14159265358979323846;
}  // namespace constants

/**
 Lattice Hamiltonian H = P^2/2m + s E_R cos^2(k_L x).

 Energies are in recoil units E_R, quasi-momenta in units of k_L (first
 Brillouin zone q in [-1, 1)), positions in units of the lattice spacing a.
 */
struct LatticeConfig {
    double depth_s = 18.0;           ///< U_0 / E_R
    double recoil_frequency = 685.0; ///< E_R / h in Hz
    double wavelength_nm = 780.0;
    double beam_angle_deg = 49.6;
    double tilt_per_site = 2.86;     ///< gravitational energy drop per site, E_R
    int num_plane_waves = 15;        ///< M: reciprocal indices -M..M
    int num_bands = 7;
    int num_q = 64;                  ///< default Brillouin-zone grid for q-averages

    /// k_L = (2 pi / lambda) sin(theta / 2), in 1/m.
    double lattice_vector() const;
    /// a = pi / k_L, in m.
    double lattice_spacing_m() const;
    /// E_R / hbar in rad/s; a band of energy E (in E_R) accrues phase E * angular_recoil() * t.
    double angular_recoil() const { return 2.0 * constants::pi * recoil_frequency; }

    /// Throws ValidationError naming the violated constraint.
    void validate() const;
};

/**
 Eigenpairs of the plane-wave Hamiltonian at one quasi-momentum.

 Column n of `coefficients` holds band n+1 over plane waves e^{i(q+2m)k_L x},
 m = -M..M (row m + M). The Hamiltonian is real symmetric, so the
 coefficients are real. Phase convention: the largest-magnitude entry of each
 column is positive, ties broken toward the lowest reciprocal index.
 */
struct BlochSolution {
    double q = 0.0;
    Eigen::VectorXd energies;      ///< ascending, E_R
    Eigen::MatrixXd coefficients;  ///< (2M+1) x num_bands

    int num_bands() const { return static_cast<int>(energies.size()); }
    int cutoff() const { return static_cast<int>((coefficients.rows() - 1) / 2); }
};

struct BandStructure {
    std::vector<double> q_grid;
    std::vector<BlochSolution> solutions;

    /// Energies of one band (0-based) across the grid.
    std::vector<double> band(int n) const;
};

/// Uniform grid of n points covering [-1, 1) once: q_j = -1 + 2 j / n.
std::vector<double> brillouin_grid(int n);

BlochSolution solve_bands(const LatticeConfig& config, double q);
BandStructure band_structure(const LatticeConfig& config, int n_q);

/// Mean (over the q-grid) splitting between the lowest two bands, in E_R.
double mean_splitting(const BandStructure& bands);
/// T12 = h / mean_q(E_2 - E_1), seconds. Uses config.num_q grid points.
double mean_splitting_period(const LatticeConfig& config);
double mean_splitting_period(const LatticeConfig& config, const BandStructure& bands);

/// True if the minimum of band 2 lies below the top of the (untilted) lattice.
bool second_band_bound(const BandStructure& bands, double depth_s);

/**
 Wannier function w_{n,l}(x) for band `band` (1-based) centred on site l,
 sampled at x (units of a). With the cos^2 potential the wells sit at
 half-integer x, so site l is the well at x = l + 1/2. Built from a q-grid of
 config.num_q points in a smooth gauge (each Bloch function projected on a
 Hermite-Gaussian trial state in the well), then normalised so
 sum |w|^2 dx = 1 on the supplied grid. The grid must be uniform with >= 16
 points per period.
 */
std::vector<std::complex<double>> wannier(const LatticeConfig& config, int band, int site,
                                          std::span<const double> x_grid);

struct LandauZenerRate {
    int band = 0;          ///< transition band -> band + 1 (1-based)
    double gap = 0.0;      ///< E_G in E_R
    double rate_hz = 0.0;
    double lifetime_s = 0.0;
};

/// Bloch frequency F a / h in Hz.
double bloch_frequency(const LatticeConfig& config);

/**
 Landau-Zener escape rates Gamma = nu_B exp(-pi^2 a E_G^2 / (h^2 g n)) for
 n = 1..num_bands-1. E_G is the smallest direct gap over the q-grid. With
 F a = tilt E_R and E_R = hbar^2 pi^2 / (2 m a^2) the exponent reduces to
 pi^2 (E_G/E_R)^2 / (8 tilt n).
 */
std::vector<LandauZenerRate> lz_lifetimes(const LatticeConfig& config);
std::vector<LandauZenerRate> lz_lifetimes(const LatticeConfig& config, const BandStructure& bands);

}  // namespace washboard
