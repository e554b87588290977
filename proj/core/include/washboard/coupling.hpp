#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "washboard/lattice.hpp"
#include "washboard/pulse.hpp"

namespace washboard {

/**
 A lattice at fixed depth with its band structure solved on the q-grid.

 Everything in this header averages over `bands.solutions` with equal weight,
 i.e. the Brillouin-zone integral as a uniform-grid mean.
 */
struct LatticeModel {
    LatticeConfig config;
    BandStructure bands;
    double t12_s = 0.0;

    PulseClock clock() const { return make_clock(config, t12_s); }
};

LatticeModel make_model(const LatticeConfig& config);
/// Same, with an explicit q-grid size (overrides config.num_q).
LatticeModel make_model(const LatticeConfig& config, int n_q);

/**
 q-averaged occupation probabilities after a pulse.

 Row i of `p` (0 for band 1, 1 for band 2) holds P_{i+1 -> j+1} for every
 retained band j. loss_from[i] = 1 - P_{i,1} - P_{i,2}.
 */
struct CouplingResult {
    Eigen::MatrixXd p;                 ///< 2 x num_bands
    std::array<double, 2> loss_from{};

    double p11() const { return p(0, 0); }
    double p12() const { return p(0, 1); }
    double p21() const { return p(1, 0); }
    double p22() const { return p(1, 1); }
    double loss() const { return loss_from[0]; }
};

CouplingResult coupling_probabilities(const LatticeModel& model, const PulseSpec& spec);
CouplingResult coupling_probabilities(const LatticeConfig& config, const PulseSpec& spec);

/// P_{initial -> j} for j = 1..num_bands; initial_band must be 1 or 2.
Eigen::VectorXd transfer_probabilities(const LatticeModel& model, const PulseSpec& spec, int initial_band);

/// |<n,q| O |1,q>|^2 for one q-point, all bands (the un-averaged integrand).
Eigen::VectorXd transfer_at_q(const LatticeModel& model, const PulseSpec& spec, std::size_t q_index,
                              int initial_band = 1);

/// Temporal parameter shared by the members of a pulse family in a scan.
struct PulseTemplate {
    PulseKind kind = PulseKind::single_step;
    double temporal = 0.0;  ///< tau for square, fwhm for gaussian, ignored for single_step
    double step_dt_s = 5e-6;
    double truncation_sigmas = 3.0;

    PulseSpec with(double amplitude, double temporal_param) const;
    PulseSpec with(double amplitude) const { return with(amplitude, temporal); }
};

/// One 5 degree relative-phase step between the lattice beams, in units of a.
inline constexpr double phase_step_displacement = 5.0 / 360.0;

/// 0, 5/360, ..., 0.5 (37 points).
std::vector<double> default_displacement_grid();

struct ScanRow {
    double parameter = 0.0;  ///< dx (displacement scans) or tau (delay scans)
    CouplingResult result;
};

std::vector<ScanRow> scan_displacement(const LatticeModel& model, const PulseTemplate& family,
                                       std::span<const double> dx_grid);
std::vector<ScanRow> scan_delay(const LatticeModel& model, double dx, std::span<const double> tau_grid);

/// Inclusive uniform grid lo, lo+step, ..., <= hi.
struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    double step = 0.0;

    std::vector<double> points() const;
};

struct SearchGrid {
    GridAxis amplitude{phase_step_displacement, 0.5, phase_step_displacement};
    GridAxis temporal{};  ///< unused for single_step
    int refine_factor = 10;

    /// Default temporal axis per family: tau in [0.02, 1.0], fwhm in [0.1, 0.6], both step 0.02.
    static SearchGrid defaults(PulseKind kind);
};

struct PulseOptimum {
    PulseSpec spec;
    CouplingResult result;
    PulseSpec coarse_spec;        ///< best point of the coarse pass
    double coarse_p12 = 0.0;
    double fine_amplitude_step = 0.0;
    double fine_temporal_step = 0.0;
};

/**
 Maximises q-averaged P12 from band 1: exhaustive coarse grid, then a grid
 refine_factor times finer spanning +-1 coarse step around the coarse optimum.
 Ties go to the smaller amplitude (then the smaller temporal parameter).
 */
PulseOptimum optimize_pulse(const LatticeModel& model, const PulseTemplate& family, const SearchGrid& grid);

struct DepthScanRow {
    double depth_s = 0.0;
    PulseKind kind = PulseKind::single_step;
    PulseOptimum optimum;
    double t12_s = 0.0;
    /// Square only: optimal tau. The tau axis spans one oscillation, so this is the smallest optimum.
    std::optional<double> tau_min_opt;
};

/// Runs optimize_pulse at each depth. Every depth must keep band 2 bound.
std::vector<DepthScanRow> depth_scan(const LatticeConfig& base, const PulseTemplate& family,
                                     std::span<const double> s_grid, const SearchGrid& grid);

struct LossCurvePoint {
    double amplitude = 0.0;
    double p12 = 0.0;
    double loss = 0.0;
};

/// (P12, loss) traced by increasing displacement at fixed temporal parameter.
std::vector<LossCurvePoint> loss_vs_coupling(const LatticeModel& model, const PulseTemplate& family,
                                             std::span<const double> dx_grid);

/// Loss on a curve at a given P12 by linear interpolation along the rising branch.
/// Returns nullopt if the branch never reaches `p12`.
std::optional<double> loss_at_coupling(std::span<const LossCurvePoint> curve, double p12);

/**
 Loss (population ending in bands >= 3) when the pulse acts on an incoherent
 mixture holding `band2_fraction` in band 2 and the rest in band 1.
 */
double mixture_loss(const CouplingResult& result, double band2_fraction);

}  // namespace washboard
