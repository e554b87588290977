#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "washboard/coupling.hpp"
#include "washboard/envelope_fit.hpp"

namespace washboard {

/// Quenched Gaussian disorder in lattice depth across the atomic cloud.
struct EnsembleSpec {
    double center_depth_s = 20.0;
    double depth_sigma_s = 0.0;
    int n_members = 128;
    int num_q = 16;
    /// Bands kept per member. More than the coupling tables use: preparation,
    /// echo pulse and readout together must close the norm to 1e-6. Eleven
    /// bands leave ~7e-6 after a single-step echo pulse; thirteen leave ~1e-7.
    int num_bands = 13;
    std::uint64_t seed = 1;
    /// false: member i sits at the midpoint quantile (i + 1/2) / n_members.
    /// true: a counter-based uniform jitter replaces the 1/2.
    bool jitter = false;

    void validate() const;
};

struct EnsembleMember {
    double depth_s = 0.0;
    LatticeModel model;
};

/**
 Sampled ensemble. Depths are stratified normal quantiles with a counter-based
 jitter, so member i depends only on (seed, i). A member whose second band is
 unbound is redrawn from the full distribution and counted in `rejected`.
 */
struct Ensemble {
    EnsembleSpec spec;
    LatticeConfig base;
    double t12_center_s = 0.0;  ///< pulse delays are scaled by this, not per member
    std::vector<EnsembleMember> members;
    int rejected = 0;
};

Ensemble build_ensemble(const LatticeConfig& base, const EnsembleSpec& spec);

/// Echo pulse: either a lattice pulse or a fixed band-basis unitary applied instantaneously.
struct EchoPulse {
    std::optional<PulseSpec> spec;
    std::optional<BandMatrix> unitary;

    static EchoPulse lattice(const PulseSpec& s) { return {s, std::nullopt}; }
    static EchoPulse fixed(BandMatrix u) { return {std::nullopt, std::move(u)}; }
    std::string describe() const;
};

/// Exchanges bands 1 and 2, identity elsewhere.
BandMatrix band_swap(int num_bands);

enum class BaselineMode {
    dephased,  ///< coherences zeroed at the start of the echo pulse
    late,      ///< same pulse at late_time_s, trace re-aligned to the pulse
};

struct EchoMetadata {
    double prep_dx = 0.0;
    std::optional<EchoPulse> echo;
    std::optional<double> t0_s;
    double pulse_start_s = 0.0;
    double pulse_end_s = 0.0;
    std::optional<BaselineMode> baseline;
    double t12_center_s = 0.0;
    int members = 0;
    int rejected_members = 0;
    /// Worst |1 - p1 - p2 - loss| over members, q and samples of the coherent run.
    /// Loss is summed over bands 3..num_bands, so this measures basis truncation.
    /// The dephased baseline takes loss as the remainder and reports 0.
    double max_norm_defect = 0.0;
};

/**
 q- and ensemble-averaged band populations after the readout displacement.
 Samples inside the echo pulse window read out the unpulsed state.
 */
struct EchoTrace {
    std::vector<double> times;
    std::vector<double> p1;
    std::vector<double> p2;
    std::vector<double> loss;  ///< bands >= 3
    EchoMetadata meta;
};

EchoTrace simulate_population_trace(const Ensemble& ens, double prep_dx, std::span<const double> times);

EchoTrace simulate_echo(const Ensemble& ens, double prep_dx, const EchoPulse& echo, double t0_s,
                        std::span<const double> times);

/// Same pulse with coherences removed (dephased) or applied at late_time_s (late).
EchoTrace simulate_baseline(const Ensemble& ens, double prep_dx, const EchoPulse& echo, double t0_s,
                            std::span<const double> times, BaselineMode mode = BaselineMode::dephased,
                            double late_time_s = 4e-3);

/// Single-member trace with per-q populations kept unaveraged over members (used for bookkeeping checks).
EchoTrace simulate_member(const Ensemble& ens, std::size_t member, double prep_dx, std::span<const double> times,
                          const std::optional<EchoPulse>& echo = std::nullopt, double t0_s = 0.0);

/// Uniform grid lo, lo+dt, ... < hi.
std::vector<double> time_grid(double lo_s, double hi_s, double dt_s);

EnvelopeFit fit_envelope(const EchoTrace& trace);

struct EchoAmplitude {
    double ratio = 0.0;          ///< fitted echo amplitude / original amplitude
    EnvelopeFit fit;             ///< fit of echo - baseline after the pulse
    double envelope_peak_s = 0.0;
    bool below_resolution = false;  ///< subtracted signal under 1e-3 of the original amplitude
    bool width_pinned = false;      ///< free-width fit was implausible; w fixed to the original
};

/// Envelope-matched cross-correlation peak of a (baseline-subtracted) signal.
double envelope_peak_time(std::span<const double> times, std::span<const double> values, double period_s,
                          double width_s);

EchoAmplitude echo_amplitude(const EchoTrace& echo, const EchoTrace& baseline, const EnvelopeFit& original);

struct Calibration {
    double depth_sigma_s = 0.0;
    EnvelopeFit fit;
    int iterations = 0;
};

/**
 Bisection on depth_sigma_s (rms decreases with sigma) until the fitted
 Gaussian rms is within rel_tol of target. Throws ValidationError if the target
 lies outside [rms(sigma_max), rms(0)].
 */
Calibration calibrate_inhomogeneity(const LatticeConfig& base, const EnsembleSpec& spec, double prep_dx,
                                    double target_rms_s, double rel_tol = 0.005);

/// Time grid used for original-oscillation fits: 0 to 8 target widths (at least 1.5 ms) in 4 us steps.
std::vector<double> calibration_times(double target_rms_s);

struct EchoVsT0Row {
    double t0_s = 0.0;
    EchoAmplitude amplitude;
    double residual_original = 0.0;  ///< original envelope left at t0, relative
    bool early = false;              ///< residual_original above 1 %
};

std::vector<EchoVsT0Row> echo_vs_t0(const Ensemble& ens, double prep_dx, const EchoPulse& echo,
                                    std::span<const double> t0_grid, const EnvelopeFit& original);

}  // namespace washboard
