#include "washboard/pulse.hpp"

#include <cmath>
#include <complex>

#include "washboard/errors.hpp"

namespace washboard {

namespace {

using cd = std::complex<double>;

// FWHM = 2 sqrt(2 ln 2) sigma
constexpr double fwhm_per_sigma = 2.3548200450309493;

// ph_k = exp(-i (q + 2k) pi dx), k = -M..M, by recurrence
Eigen::VectorXcd shift_phases(double q, int M, double dx) {
    const double pi = constants::pi;
    Eigen::VectorXcd ph(2 * M + 1);
    const cd step = std::polar(1.0, -2.0 * pi * dx);
    cd cur = std::polar(1.0, -(q - 2.0 * M) * pi * dx);
    for (int i = 0; i < 2 * M + 1; ++i) {
        ph(i) = cur;
        cur *= step;
    }
    return ph;
}

}  // namespace

std::string_view to_string(PulseKind kind) {
    switch (kind) {
        case PulseKind::single_step: return "single_step";
        case PulseKind::square: return "square";
        case PulseKind::gaussian: return "gaussian";
    }
    return "unknown";
}

PulseKind parse_pulse_kind(std::string_view name) {
    if (name == "single_step" || name == "single-step") return PulseKind::single_step;
    if (name == "square") return PulseKind::square;
    if (name == "gaussian") return PulseKind::gaussian;
    throw ValidationError("pulse.kind must be one of single_step, square, gaussian (got '" +
                          std::string(name) + "')");
}

PulseSpec PulseSpec::single_step(double amplitude) {
    PulseSpec p;
    p.kind = PulseKind::single_step;
    p.amplitude = amplitude;
    return p;
}

PulseSpec PulseSpec::square(double amplitude, double delay_scaled) {
    PulseSpec p;
    p.kind = PulseKind::square;
    p.amplitude = amplitude;
    p.delay_scaled = delay_scaled;
    return p;
}

PulseSpec PulseSpec::gaussian(double amplitude, double fwhm_scaled) {
    PulseSpec p;
    p.kind = PulseKind::gaussian;
    p.amplitude = amplitude;
    p.fwhm_scaled = fwhm_scaled;
    return p;
}

void PulseSpec::validate() const {
    if (!(amplitude >= -0.5 && amplitude <= 0.5)) throw ValidationError("pulse.amplitude must lie in [-0.5, 0.5]");
    switch (kind) {
        case PulseKind::single_step:
            if (delay_scaled || fwhm_scaled)
                throw ValidationError("pulse: single_step takes no delay_scaled or fwhm_scaled");
            break;
        case PulseKind::square:
            if (!delay_scaled) throw ValidationError("pulse: square requires delay_scaled");
            if (fwhm_scaled) throw ValidationError("pulse: square takes no fwhm_scaled");
            if (!(*delay_scaled >= 0.0)) throw ValidationError("pulse.delay_scaled must be >= 0");
            break;
        case PulseKind::gaussian:
            if (!fwhm_scaled) throw ValidationError("pulse: gaussian requires fwhm_scaled");
            if (delay_scaled) throw ValidationError("pulse: gaussian takes no delay_scaled");
            if (!(*fwhm_scaled > 0.0)) throw ValidationError("pulse.fwhm_scaled must be > 0");
            if (!(step_dt_s > 0.0)) throw ValidationError("pulse.step_dt_s must be > 0");
            if (!(truncation_sigmas > 0.0)) throw ValidationError("pulse.truncation_sigmas must be > 0");
            break;
    }
}

std::vector<PulseStep> pulse_schedule(const PulseSpec& spec, double t12_s) {
    spec.validate();
    if (!(t12_s > 0.0)) throw ValidationError("pulse: T12 must be > 0");
    const double A = spec.amplitude;
    switch (spec.kind) {
        case PulseKind::single_step:
            return {{A, 0.0}};
        case PulseKind::square:
            return {{A, *spec.delay_scaled * t12_s}, {-A, 0.0}};
        case PulseKind::gaussian: {
            const double sigma = *spec.fwhm_scaled * t12_s / fwhm_per_sigma;
            const double dt = spec.step_dt_s;
            const auto K = static_cast<long>(std::floor(spec.truncation_sigmas * sigma / dt + 1e-9));
            std::vector<PulseStep> steps;
            steps.reserve(static_cast<std::size_t>(2 * K + 2));
            double prev = 0.0;
            for (long k = -K; k <= K; ++k) {
                const double t = static_cast<double>(k) * dt;
                const double pos = A * std::exp(-t * t / (2.0 * sigma * sigma));
                steps.push_back({pos - prev, dt});
                prev = pos;
            }
            steps.push_back({-prev, 0.0});
            return steps;
        }
    }
    return {};
}

double pulse_duration(const PulseSpec& spec, double t12_s) {
    double t = 0.0;
    for (const auto& step : pulse_schedule(spec, t12_s)) t += step.evolve_s;
    return t;
}

BandMatrix displacement_matrix(const BlochSolution& sol, double dx) {
    const Eigen::VectorXcd ph = shift_phases(sol.q, sol.cutoff(), dx);
    const Eigen::MatrixXcd c = sol.coefficients.cast<cd>();
    return c.transpose() * (ph.asDiagonal() * c);
}

Eigen::VectorXcd free_evolution(const BlochSolution& sol, double t_s, double angular_recoil) {
    if (!(t_s >= 0.0)) throw ValidationError("free_evolution: t must be >= 0");
    Eigen::VectorXcd u(sol.num_bands());
    for (int n = 0; n < sol.num_bands(); ++n) u(n) = std::polar(1.0, -sol.energies(n) * angular_recoil * t_s);
    return u;
}

BandAmplitudes BandAmplitudes::basis_state(const BlochSolution& sol, int band) {
    if (band < 1 || band > sol.num_bands()) throw ValidationError("band index out of range");
    BandAmplitudes s;
    s.q = sol.q;
    s.amps = Eigen::VectorXcd::Zero(sol.num_bands());
    s.amps(band - 1) = 1.0;
    return s;
}

PulseClock make_clock(const LatticeConfig& config, double t12_s) { return {config.angular_recoil(), t12_s}; }

Eigen::MatrixXcd propagate(std::span<const PulseStep> schedule, const BlochSolution& sol, double angular_recoil,
                           Eigen::MatrixXcd states) {
    const Eigen::MatrixXcd c = sol.coefficients.cast<cd>();
    const int M = sol.cutoff();
    Eigen::MatrixXcd pw(c.rows(), states.cols());
    for (const auto& step : schedule) {
        if (step.shift != 0.0) {
            pw.noalias() = c * states;
            pw = shift_phases(sol.q, M, step.shift).asDiagonal() * pw;
            states.noalias() = c.transpose() * pw;
        }
        if (step.evolve_s > 0.0) states = free_evolution(sol, step.evolve_s, angular_recoil).asDiagonal() * states;
    }
    return states;
}

BandMatrix pulse_operator(const PulseSpec& spec, const BlochSolution& sol, const PulseClock& clock) {
    const auto schedule = pulse_schedule(spec, clock.t12_s);
    const int nb = sol.num_bands();
    return propagate(schedule, sol, clock.angular_recoil, Eigen::MatrixXcd::Identity(nb, nb));
}

BandAmplitudes apply_pulse(const PulseSpec& spec, const BlochSolution& sol, const PulseClock& clock,
                           const BandAmplitudes& in) {
    if (in.amps.size() != sol.num_bands()) throw ValidationError("apply_pulse: state size does not match band count");
    if (std::abs(in.q - sol.q) > 1e-12) throw ValidationError("apply_pulse: state and Bloch solution differ in q");
    if (in.amps.squaredNorm() > 1.0 + 1e-9) throw ValidationError("apply_pulse: input state norm exceeds 1");
    const auto schedule = pulse_schedule(spec, clock.t12_s);
    BandAmplitudes out;
    out.q = in.q;
    out.amps = propagate(schedule, sol, clock.angular_recoil, in.amps).col(0);
    return out;
}

}  // namespace washboard
