#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "washboard/lattice.hpp"

namespace washboard {

enum class PulseKind { single_step, square, gaussian };

std::string_view to_string(PulseKind kind);
/// Accepts "single_step", "square", "gaussian" (also "single-step").
PulseKind parse_pulse_kind(std::string_view name);

/**
 A lattice-displacement waveform.

 amplitude is in units of the lattice spacing a. Temporal parameters are in
 units of the mean splitting period T12 of the lattice the pulse is tuned for.
 */
struct PulseSpec {
    PulseKind kind = PulseKind::single_step;
    double amplitude = 0.0;
    std::optional<double> delay_scaled;  ///< square only: delay / T12
    std::optional<double> fwhm_scaled;   ///< gaussian only: FWHM / T12
    double step_dt_s = 5e-6;             ///< gaussian time step
    double truncation_sigmas = 3.0;      ///< gaussian window half-width in sigma_t

    static PulseSpec single_step(double amplitude);
    static PulseSpec square(double amplitude, double delay_scaled);
    static PulseSpec gaussian(double amplitude, double fwhm_scaled);

    void validate() const;
};

/// One element of a pulse: shift the lattice by `shift` (units of a), then evolve for `evolve_s`.
struct PulseStep {
    double shift = 0.0;
    double evolve_s = 0.0;
};

/**
 Time-ordered elementary steps realising a pulse, with temporal parameters
 converted using the supplied T12 (seconds).

 single_step: D(A). square: D(A), U(tau T12), D(-A). gaussian: the lattice
 position follows A exp(-t^2 / 2 sigma_t^2) sampled at t_k = k dt,
 |t_k| <= truncation_sigmas * sigma_t, held for dt each, then shifted back to 0.
 The net displacement of every schedule is zero except single_step.
 */
std::vector<PulseStep> pulse_schedule(const PulseSpec& spec, double t12_s);

/// Total free-evolution time of the schedule, seconds.
double pulse_duration(const PulseSpec& spec, double t12_s);

using BandMatrix = Eigen::MatrixXcd;

/// <n| D(dx) |m> in the retained band basis: sum_k c_nk c_mk e^{-i (q + 2k) pi dx}.
BandMatrix displacement_matrix(const BlochSolution& sol, double dx);

/// Diagonal of exp(-i H t / hbar) in the band basis.
Eigen::VectorXcd free_evolution(const BlochSolution& sol, double t_s, double angular_recoil);

struct BandAmplitudes {
    double q = 0.0;
    Eigen::VectorXcd amps;

    static BandAmplitudes basis_state(const BlochSolution& sol, int band);
};

/// Timing shared by every q-component: E_R / hbar and the T12 used for scaling.
struct PulseClock {
    double angular_recoil = 0.0;
    double t12_s = 0.0;
};

PulseClock make_clock(const LatticeConfig& config, double t12_s);

/// Full band-basis matrix of a pulse at one quasi-momentum.
BandMatrix pulse_operator(const PulseSpec& spec, const BlochSolution& sol, const PulseClock& clock);

/// Propagates a state through a pulse; cheaper than building pulse_operator.
BandAmplitudes apply_pulse(const PulseSpec& spec, const BlochSolution& sol, const PulseClock& clock,
                           const BandAmplitudes& in);

/// Propagates each column of `states` through a pre-built schedule.
Eigen::MatrixXcd propagate(std::span<const PulseStep> schedule, const BlochSolution& sol,
                           double angular_recoil, Eigen::MatrixXcd states);

}  // namespace washboard
