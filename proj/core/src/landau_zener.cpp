#include <cmath>
#include <limits>

#include "washboard/errors.hpp"
#include "washboard/lattice.hpp"

namespace washboard {

double bloch_frequency(const LatticeConfig& config) {
    return config.tilt_per_site * config.recoil_frequency;
}

std::vector<LandauZenerRate> lz_lifetimes(const LatticeConfig& config) {
    return lz_lifetimes(config, band_structure(config, config.num_q));
}

std::vector<LandauZenerRate> lz_lifetimes(const LatticeConfig& config, const BandStructure& bands) {
    if (!(config.tilt_per_site > 0.0)) throw ValidationError("lattice.tilt_per_site must be > 0 for Landau-Zener rates");
    const double nu_b = bloch_frequency(config);
    const double pi2 = constants::pi * constants::pi;

    std::vector<LandauZenerRate> out;
    for (int n = 1; n < config.num_bands; ++n) {
        double gap = std::numeric_limits<double>::infinity();
        for (const auto& sol : bands.solutions)
            gap = std::min(gap, sol.energies(n) - sol.energies(n - 1));
        LandauZenerRate r;
        r.band = n;
        r.gap = gap;
        r.rate_hz = nu_b * std::exp(-pi2 * gap * gap / (8.0 * config.tilt_per_site * n));
        r.lifetime_s = 1.0 / r.rate_hz;
        out.push_back(r);
    }
    return out;
}

}  // namespace washboard
