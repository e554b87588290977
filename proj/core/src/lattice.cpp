#include "washboard/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "washboard/errors.hpp"

namespace washboard {

double LatticeConfig::lattice_vector() const {
    const double lambda = wavelength_nm * 1e-9;
    const double half_angle = 0.5 * beam_angle_deg * constants::pi / 180.0;
    return 2.0 * constants::pi / lambda * std::sin(half_angle);
}

double LatticeConfig::lattice_spacing_m() const { return constants::pi / lattice_vector(); }

void LatticeConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ValidationError("lattice." + msg); };
    if (!(depth_s >= 0.0)) fail("depth_s must be >= 0");
    if (!(recoil_frequency > 0.0)) fail("recoil_frequency must be > 0");
    if (!(wavelength_nm > 0.0)) fail("wavelength_nm must be > 0");
    if (!(beam_angle_deg > 0.0 && beam_angle_deg <= 180.0)) fail("beam_angle_deg must be in (0, 180]");
    if (!(tilt_per_site >= 0.0)) fail("tilt_per_site must be >= 0");
    if (num_bands < 2) fail("num_bands must be >= 2");
    if (2 * num_plane_waves + 1 < num_bands) fail("num_bands must not exceed the 2 num_plane_waves + 1 basis states");
    if (num_q < 2) fail("num_q must be >= 2");
}

std::vector<double> brillouin_grid(int n) {
    if (n < 2) throw ValidationError("q-grid needs at least 2 points");
    std::vector<double> q(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) q[static_cast<std::size_t>(j)] = -1.0 + 2.0 * j / n;
    return q;
}

namespace {

void fix_phase(Eigen::MatrixXd& vecs) {
    for (Eigen::Index n = 0; n < vecs.cols(); ++n) {
        Eigen::Index best = 0;
        double best_mag = -1.0;
        for (Eigen::Index k = 0; k < vecs.rows(); ++k) {
            const double mag = std::abs(vecs(k, n));
            // strict comparison with a small slack keeps the lowest index on ties
            if (mag > best_mag + 1e-12) {
                best_mag = mag;
                best = k;
            }
        }
        if (vecs(best, n) < 0.0) vecs.col(n) *= -1.0;
    }
}

}  // namespace

BlochSolution solve_bands(const LatticeConfig& config, double q) {
    config.validate();
    if (!(std::abs(q) <= 1.0)) {
        std::ostringstream os;
        os << "quasi-momentum q=" << q << " outside [-1, 1]";
        throw ValidationError(os.str());
    }
    const int M = config.num_plane_waves;
    const int dim = 2 * M + 1;
    const double s = config.depth_s;

    // cos^2(k x) = 1/2 + (e^{2ikx} + e^{-2ikx}) / 4
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double k = q + 2.0 * (i - M);
        H(i, i) = k * k + 0.5 * s;
        if (i + 1 < dim) {
            H(i, i + 1) = 0.25 * s;
            H(i + 1, i) = 0.25 * s;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(H);
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigensolver did not converge at q=" << q << ", depth s=" << s;
        throw NumericalError(os.str());
    }

    BlochSolution sol;
    sol.q = q;
    sol.energies = solver.eigenvalues().head(config.num_bands);
    sol.coefficients = solver.eigenvectors().leftCols(config.num_bands);
    fix_phase(sol.coefficients);

    const Eigen::MatrixXd gram = sol.coefficients.transpose() * sol.coefficients;
    const double err = (gram - Eigen::MatrixXd::Identity(config.num_bands, config.num_bands))
                           .cwiseAbs()
                           .maxCoeff();
    if (err > 1e-9) {
        std::ostringstream os;
        os << "eigenvectors not orthonormal (err " << err << ") at q=" << q << ", depth s=" << s;
        throw NumericalError(os.str());
    }
    return sol;
}

BandStructure band_structure(const LatticeConfig& config, int n_q) {
    BandStructure bs;
    bs.q_grid = brillouin_grid(n_q);
    bs.solutions.reserve(bs.q_grid.size());
    for (double q : bs.q_grid) bs.solutions.push_back(solve_bands(config, q));
    return bs;
}

std::vector<double> BandStructure::band(int n) const {
    std::vector<double> e;
    e.reserve(solutions.size());
    for (const auto& sol : solutions) e.push_back(sol.energies(n));
    return e;
}

double mean_splitting(const BandStructure& bands) {
    double sum = 0.0;
    for (const auto& sol : bands.solutions) sum += sol.energies(1) - sol.energies(0);
    return sum / static_cast<double>(bands.solutions.size());
}

double mean_splitting_period(const LatticeConfig& config) {
    return mean_splitting_period(config, band_structure(config, config.num_q));
}

double mean_splitting_period(const LatticeConfig& config, const BandStructure& bands) {
    return 1.0 / (config.recoil_frequency * mean_splitting(bands));
}

bool second_band_bound(const BandStructure& bands, double depth_s) {
    const auto e2 = bands.band(1);
    return *std::min_element(e2.begin(), e2.end()) < depth_s;
}

}  // namespace washboard
