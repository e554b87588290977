#include "washboard/echo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "washboard/errors.hpp"

namespace washboard {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// uniform in [0, 1) from (seed, member, attempt)
double counter_uniform(std::uint64_t seed, std::uint64_t member, std::uint64_t attempt) {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ member) ^ (attempt * 0x632be59bd9b4e019ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

void check_prep(double prep_dx) {
    if (!(prep_dx > 0.0 && prep_dx <= 0.5)) throw ValidationError("echo.prep_dx must lie in (0, 0.5]");
}

void check_times(std::span<const double> times) {
    if (times.empty()) throw ValidationError("echo: empty time grid");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0)) throw ValidationError("echo: sample times must be >= 0");
        if (i > 0 && !(times[i] > times[i - 1])) throw ValidationError("echo: sample times must increase");
    }
}

struct Window {
    double start = 0.0;
    double end = 0.0;
};

Window pulse_window(const EchoPulse& echo, double t0_s, double t12_s) {
    const double d = echo.spec ? pulse_duration(*echo.spec, t12_s) : 0.0;
    Window w{t0_s - 0.5 * d, t0_s + 0.5 * d};
    if (w.start < 0.0) throw ValidationError("echo: pulse would start before the preparation (t0 too small)");
    return w;
}

struct Plan {
    const EchoPulse* pulse = nullptr;
    std::vector<PulseStep> schedule;
    Window window;
    bool dephase = false;
};

struct Accumulator {
    std::vector<double> p1, p2, loss;
    double defect = 0.0;

    explicit Accumulator(std::size_t n) : p1(n, 0.0), p2(n, 0.0), loss(n, 0.0) {}
};

Eigen::VectorXcd phases(const Eigen::VectorXd& energies, double omega_t) {
    Eigen::VectorXcd ph(energies.size());
    for (Eigen::Index n = 0; n < energies.size(); ++n) ph(n) = std::polar(1.0, -energies(n) * omega_t);
    return ph;
}

// exp(-i E omega t) along a sample sequence; consecutive equal steps reuse the step phase
struct PhaseTracker {
    const Eigen::VectorXd& energies;
    double omega;
    double last = std::numeric_limits<double>::quiet_NaN();
    double dt = 0.0;
    int reused = 0;
    Eigen::VectorXcd ph{}, step{};

    const Eigen::VectorXcd& at(double t) {
        const double d = t - last;
        if (reused < 64 && dt > 0.0 && std::abs(d - dt) <= 1e-9 * dt) {
            ph = ph.cwiseProduct(step);
            ++reused;
        } else {
            ph = phases(energies, omega * t);
            if (d > 0.0 && std::abs(d - dt) > 1e-9 * dt) {
                dt = d;
                step = phases(energies, omega * d);
            }
            reused = 0;
        }
        last = t;
        return ph;
    }
};

void record(Accumulator& acc, std::size_t i, double weight, double a1, double a2, double rest, bool closure = true) {
    acc.p1[i] += weight * a1;
    acc.p2[i] += weight * a2;
    acc.loss[i] += weight * rest;
    if (closure) acc.defect = std::max(acc.defect, std::abs(1.0 - a1 - a2 - rest));
}

void accumulate_member(const LatticeModel& model, double omega, double prep_dx, std::span<const double> times,
                       const Plan* plan, double weight, Accumulator& acc) {
    const double wq = weight / static_cast<double>(model.bands.solutions.size());
    for (const auto& sol : model.bands.solutions) {
        const Eigen::Index nb = sol.energies.size();
        const Eigen::VectorXcd psi0 = displacement_matrix(sol, prep_dx).col(0);
        const BandMatrix readout = displacement_matrix(sol, -prep_dx);

        BandMatrix op;
        Eigen::VectorXcd after;
        BandMatrix rho;  // dephased: O diag(pops) O^dag
        if (plan) {
            const Eigen::VectorXcd at_start = phases(sol.energies, omega * plan->window.start).cwiseProduct(psi0);
            if (plan->pulse->unitary) {
                op = *plan->pulse->unitary;
                if (op.rows() != nb || op.cols() != nb)
                    throw ValidationError("echo: unitary size does not match num_bands");
            }
            if (plan->dephase) {
                if (!plan->pulse->unitary) op = propagate(plan->schedule, sol, omega, BandMatrix::Identity(nb, nb));
                rho = op * at_start.cwiseAbs2().asDiagonal() * op.adjoint();
            } else {
                after = plan->pulse->unitary ? Eigen::VectorXcd(op * at_start)
                                             : Eigen::VectorXcd(propagate(plan->schedule, sol, omega, at_start));
            }
        }

        PhaseTracker before{sol.energies, omega, std::numeric_limits<double>::quiet_NaN(), 0.0, 0, {}, {}};
        PhaseTracker since{sol.energies, omega, std::numeric_limits<double>::quiet_NaN(), 0.0, 0, {}, {}};
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            if (!plan || t < plan->window.end) {
                const Eigen::VectorXd p = (readout * before.at(t).cwiseProduct(psi0)).cwiseAbs2();
                record(acc, i, wq, p(0), p(1), p.tail(nb - 2).sum());
            } else if (!plan->dephase) {
                const Eigen::VectorXd p = (readout * since.at(t - plan->window.end).cwiseProduct(after)).cwiseAbs2();
                record(acc, i, wq, p(0), p(1), p.tail(nb - 2).sum());
            } else {
                const Eigen::VectorXcd& ph = since.at(t - plan->window.end);
                const Eigen::RowVectorXcd u1 = readout.row(0).cwiseProduct(ph.transpose());
                const Eigen::RowVectorXcd u2 = readout.row(1).cwiseProduct(ph.transpose());
                const double a1 = (u1 * rho * u1.adjoint()).real()(0, 0);
                const double a2 = (u2 * rho * u2.adjoint()).real()(0, 0);
                record(acc, i, wq, a1, a2, rho.trace().real() - a1 - a2, false);
            }
        }
    }
}

EchoTrace run(const Ensemble& ens, std::span<const std::size_t> members, double prep_dx,
              std::span<const double> times, const Plan* plan) {
    check_prep(prep_dx);
    check_times(times);
    Accumulator acc(times.size());
    const double omega = ens.base.angular_recoil();
    const double w = 1.0 / static_cast<double>(members.size());
    for (std::size_t m : members) accumulate_member(ens.members.at(m).model, omega, prep_dx, times, plan, w, acc);

    EchoTrace tr;
    tr.times.assign(times.begin(), times.end());
    tr.p1 = std::move(acc.p1);
    tr.p2 = std::move(acc.p2);
    tr.loss = std::move(acc.loss);
    for (auto* v : {&tr.p1, &tr.p2, &tr.loss})
        for (auto& x : *v) x = std::clamp(x, 0.0, 1.0);
    tr.meta.prep_dx = prep_dx;
    tr.meta.t12_center_s = ens.t12_center_s;
    tr.meta.members = static_cast<int>(members.size());
    tr.meta.rejected_members = ens.rejected;
    tr.meta.max_norm_defect = acc.defect;
    if (plan) {
        tr.meta.echo = *plan->pulse;
        tr.meta.pulse_start_s = plan->window.start;
        tr.meta.pulse_end_s = plan->window.end;
    }
    return tr;
}

std::vector<std::size_t> all_members(const Ensemble& ens) {
    std::vector<std::size_t> idx(ens.members.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

Plan make_plan(const Ensemble& ens, const EchoPulse& echo, double t0_s, bool dephase) {
    if (echo.spec.has_value() == echo.unitary.has_value())
        throw ValidationError("echo: exactly one of pulse spec or unitary must be given");
    Plan plan;
    plan.pulse = &echo;
    if (echo.spec) {
        echo.spec->validate();
        plan.schedule = pulse_schedule(*echo.spec, ens.t12_center_s);
    }
    plan.window = pulse_window(echo, t0_s, ens.t12_center_s);
    plan.dephase = dephase;
    return plan;
}

}  // namespace

void EnsembleSpec::validate() const {
    if (!(center_depth_s > 0.0)) throw ValidationError("echo.center_depth_s must be > 0");
    if (!(depth_sigma_s >= 0.0)) throw ValidationError("echo.depth_sigma_s must be >= 0");
    if (n_members < 1) throw ValidationError("echo.n_members must be >= 1");
    if (num_q < 2) throw ValidationError("echo.num_q must be >= 2");
    if (num_bands < 2) throw ValidationError("echo.num_bands must be >= 2");
}

Ensemble build_ensemble(const LatticeConfig& base, const EnsembleSpec& spec) {
    spec.validate();
    Ensemble ens;
    ens.spec = spec;
    ens.base = base;
    ens.base.depth_s = spec.center_depth_s;
    ens.base.num_bands = spec.num_bands;
    ens.base.validate();
    const LatticeModel center = make_model(ens.base);
    if (!second_band_bound(center.bands, spec.center_depth_s))
        throw ValidationError("echo.center_depth_s leaves band 2 unbound");
    ens.t12_center_s = center.t12_s;

    const boost::math::normal normal;
    const auto n = static_cast<std::size_t>(spec.n_members);
    ens.members.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool accepted = false;
        for (std::uint64_t attempt = 0; attempt < 64 && !accepted; ++attempt) {
            double depth = spec.center_depth_s;
            if (spec.depth_sigma_s > 0.0) {
                const double draw = counter_uniform(spec.seed, i, attempt);
                const double offset = spec.jitter ? draw : 0.5;
                double u = attempt == 0 ? (static_cast<double>(i) + offset) / static_cast<double>(n) : draw;
                u = std::clamp(u, 1e-12, 1.0 - 1e-12);
                depth += spec.depth_sigma_s * boost::math::quantile(normal, u);
            }
            if (depth <= 0.0) {
                ++ens.rejected;
                continue;
            }
            LatticeConfig cfg = ens.base;
            cfg.depth_s = depth;
            LatticeModel model = make_model(cfg, spec.num_q);
            if (!second_band_bound(model.bands, depth)) {
                ++ens.rejected;
                continue;
            }
            ens.members.push_back({depth, std::move(model)});
            accepted = true;
        }
        if (!accepted) throw NumericalError("echo: could not draw a bound ensemble member after 64 attempts");
    }
    return ens;
}

std::string EchoPulse::describe() const {
    if (unitary) return "unitary";
    if (!spec) return "none";
    std::ostringstream os;
    os << to_string(spec->kind) << "(A=" << spec->amplitude;
    if (spec->delay_scaled) os << ",tau=" << *spec->delay_scaled;
    if (spec->fwhm_scaled) os << ",fwhm=" << *spec->fwhm_scaled;
    os << ")";
    return os.str();
}

BandMatrix band_swap(int num_bands) {
    if (num_bands < 2) throw ValidationError("band_swap needs at least 2 bands");
    BandMatrix u = BandMatrix::Identity(num_bands, num_bands);
    u(0, 0) = u(1, 1) = 0.0;
    u(0, 1) = u(1, 0) = 1.0;
    return u;
}

std::vector<double> time_grid(double lo_s, double hi_s, double dt_s) {
    if (!(dt_s > 0.0) || !(hi_s > lo_s)) throw ValidationError("time grid needs dt > 0 and hi > lo");
    std::vector<double> t;
    const auto n = static_cast<long>(std::ceil((hi_s - lo_s) / dt_s - 1e-9));
    for (long i = 0; i < n; ++i) t.push_back(lo_s + static_cast<double>(i) * dt_s);
    return t;
}

EchoTrace simulate_population_trace(const Ensemble& ens, double prep_dx, std::span<const double> times) {
    return run(ens, all_members(ens), prep_dx, times, nullptr);
}

EchoTrace simulate_echo(const Ensemble& ens, double prep_dx, const EchoPulse& echo, double t0_s,
                        std::span<const double> times) {
    const Plan plan = make_plan(ens, echo, t0_s, false);
    auto tr = run(ens, all_members(ens), prep_dx, times, &plan);
    tr.meta.t0_s = t0_s;
    return tr;
}

EchoTrace simulate_baseline(const Ensemble& ens, double prep_dx, const EchoPulse& echo, double t0_s,
                            std::span<const double> times, BaselineMode mode, double late_time_s) {
    if (mode == BaselineMode::dephased) {
        const Plan plan = make_plan(ens, echo, t0_s, true);
        auto tr = run(ens, all_members(ens), prep_dx, times, &plan);
        tr.meta.t0_s = t0_s;
        tr.meta.baseline = mode;
        return tr;
    }
    if (!(late_time_s > t0_s)) throw ValidationError("echo: late baseline time must exceed t0");
    std::vector<double> shifted(times.begin(), times.end());
    for (auto& t : shifted) t += late_time_s - t0_s;
    const Plan plan = make_plan(ens, echo, late_time_s, false);
    auto tr = run(ens, all_members(ens), prep_dx, shifted, &plan);
    tr.times.assign(times.begin(), times.end());
    tr.meta.t0_s = t0_s;
    tr.meta.pulse_start_s -= late_time_s - t0_s;
    tr.meta.pulse_end_s -= late_time_s - t0_s;
    tr.meta.baseline = mode;
    return tr;
}

EchoTrace simulate_member(const Ensemble& ens, std::size_t member, double prep_dx, std::span<const double> times,
                          const std::optional<EchoPulse>& echo, double t0_s) {
    if (member >= ens.members.size()) throw ValidationError("echo: member index out of range");
    const std::size_t idx[] = {member};
    if (!echo) return run(ens, idx, prep_dx, times, nullptr);
    const Plan plan = make_plan(ens, *echo, t0_s, false);
    auto tr = run(ens, idx, prep_dx, times, &plan);
    tr.meta.t0_s = t0_s;
    return tr;
}

EnvelopeFit fit_envelope(const EchoTrace& trace) { return fit_envelope(trace.times, trace.p1); }

double envelope_peak_time(std::span<const double> times, std::span<const double> values, double period_s,
                          double width_s) {
    if (times.size() != values.size() || times.size() < 3) throw ValidationError("envelope peak: bad input");
    const double dt = times[1] - times[0];
    // |signal|^2 smoothed over one period, then correlated with a Gaussian of the expected width
    const auto half = static_cast<long>(std::max(1.0, std::round(0.5 * period_s / dt)));
    const auto n = static_cast<long>(values.size());
    std::vector<double> power(values.size(), 0.0);
    for (long i = 0; i < n; ++i) {
        double s = 0.0;
        long cnt = 0;
        for (long j = std::max(0L, i - half); j <= std::min(n - 1, i + half); ++j, ++cnt)
            s += values[static_cast<std::size_t>(j)] * values[static_cast<std::size_t>(j)];
        power[static_cast<std::size_t>(i)] = s / static_cast<double>(cnt);
    }
    const double sigma = std::max(width_s, dt) / std::sqrt(2.0);  // envelope^2 has width w / sqrt 2
    const auto reach = static_cast<long>(std::ceil(3.0 * sigma / dt));
    double best = -1.0;
    std::size_t best_i = 0;
    for (long i = 0; i < n; ++i) {
        double c = 0.0;
        for (long k = -reach; k <= reach; ++k) {
            const long j = i + k;
            if (j < 0 || j >= n) continue;
            const double u = static_cast<double>(k) * dt / sigma;
            c += power[static_cast<std::size_t>(j)] * std::exp(-0.5 * u * u);
        }
        if (c > best) {
            best = c;
            best_i = static_cast<std::size_t>(i);
        }
    }
    return times[best_i];
}

EchoAmplitude echo_amplitude(const EchoTrace& echo, const EchoTrace& baseline, const EnvelopeFit& original) {
    if (echo.times.size() != baseline.times.size())
        throw ValidationError("echo_amplitude: traces have different time grids");
    for (std::size_t i = 0; i < echo.times.size(); ++i) {
        if (std::abs(echo.times[i] - baseline.times[i]) > 1e-12)
            throw ValidationError("echo_amplitude: traces have different time grids");
    }
    if (!(original.amplitude > 0.0)) throw ValidationError("echo_amplitude: original amplitude must be > 0");

    std::vector<double> t, d;
    for (std::size_t i = 0; i < echo.times.size(); ++i) {
        if (echo.times[i] < echo.meta.pulse_end_s) continue;
        t.push_back(echo.times[i]);
        d.push_back(echo.p1[i] - baseline.p1[i]);
    }
    if (t.size() < 8) throw ValidationError("echo_amplitude: too few samples after the echo pulse");

    EchoAmplitude out;
    double peak = 0.0;
    for (double v : d) peak = std::max(peak, std::abs(v));
    if (peak < 1e-3 * original.amplitude) {
        out.below_resolution = true;
        out.envelope_peak_s = echo.meta.t0_s ? 2.0 * *echo.meta.t0_s : 0.0;
        return out;
    }
    out.envelope_peak_s = envelope_peak_time(t, d, original.period_s, original.gaussian_rms_s);
    FitOptions opt;
    opt.fit_center = true;
    opt.center_guess_s = out.envelope_peak_s;
    opt.period_guess_s = original.period_s;
    out.fit = fit_envelope(t, d, opt);
    // A free width can run off on a weak or noisy revival. The revival mirrors the
    // original dephasing, so refit with the original width when that happens.
    const double span = t.back() - t.front();
    const bool plausible = out.fit.center_s >= t.front() && out.fit.center_s <= t.back() &&
                           out.fit.gaussian_rms_s >= 0.5 * original.period_s && out.fit.gaussian_rms_s <= span &&
                           out.fit.amplitude <= 2.0 * peak;
    if (!plausible) {
        opt.fixed_width_s = original.gaussian_rms_s;
        out.fit = fit_envelope(t, d, opt);
        out.width_pinned = true;
    }
    out.ratio = out.fit.amplitude / original.amplitude;
    return out;
}

std::vector<double> calibration_times(double target_rms_s) {
    return time_grid(0.0, std::max(8.0 * target_rms_s, 1.5e-3), 4e-6);
}

Calibration calibrate_inhomogeneity(const LatticeConfig& base, const EnsembleSpec& spec, double prep_dx,
                                    double target_rms_s, double rel_tol) {
    if (!(target_rms_s > 0.0)) throw ValidationError("calibration target rms must be > 0");
    // the fit grid spans 8 target widths; beyond 10 ms it is far past any dephasing seen in these lattices
    if (target_rms_s > 10e-3) throw ValidationError("calibration target rms must be <= 10 ms");
    const auto times = calibration_times(target_rms_s);
    auto rms_at = [&](double sigma) {
        EnsembleSpec s = spec;
        s.depth_sigma_s = sigma;
        return fit_envelope(simulate_population_trace(build_ensemble(base, s), prep_dx, times));
    };

    Calibration cal;
    double lo = 0.0;
    double hi = 0.25 * spec.center_depth_s;
    const EnvelopeFit f_lo = rms_at(lo);
    if (f_lo.gaussian_rms_s < target_rms_s * (1.0 - rel_tol)) {
        std::ostringstream os;
        os << "calibration target " << target_rms_s << " s exceeds the sigma=0 coherence time "
           << f_lo.gaussian_rms_s << " s";
        throw ValidationError(os.str());
    }
    const EnvelopeFit f_hi = rms_at(hi);
    if (f_hi.gaussian_rms_s > target_rms_s * (1.0 + rel_tol)) {
        std::ostringstream os;
        os << "calibration target " << target_rms_s << " s is below the rms at sigma=" << hi;
        throw ValidationError(os.str());
    }
    cal.fit = f_lo;
    for (cal.iterations = 1; cal.iterations <= 40; ++cal.iterations) {
        const double mid = 0.5 * (lo + hi);
        cal.fit = rms_at(mid);
        cal.depth_sigma_s = mid;
        const double err = (cal.fit.gaussian_rms_s - target_rms_s) / target_rms_s;
        if (std::abs(err) <= rel_tol) return cal;
        if (err > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    throw NumericalError("calibration did not converge in 40 bisection steps");
}

std::vector<EchoVsT0Row> echo_vs_t0(const Ensemble& ens, double prep_dx, const EchoPulse& echo,
                                    std::span<const double> t0_grid, const EnvelopeFit& original) {
    std::vector<EchoVsT0Row> rows;
    const double w = original.gaussian_rms_s;
    for (double t0 : t0_grid) {
        const Window win = pulse_window(echo, t0, ens.t12_center_s);
        const double lo = std::max(win.end, 2.0 * t0 - 5.0 * w);
        const auto times = time_grid(lo, 2.0 * t0 + 5.0 * w, 4e-6);
        const auto tr = simulate_echo(ens, prep_dx, echo, t0, times);
        const auto base = simulate_baseline(ens, prep_dx, echo, t0, times);
        EchoVsT0Row row;
        row.t0_s = t0;
        row.amplitude = echo_amplitude(tr, base, original);
        row.residual_original = std::exp(-t0 * t0 / (2.0 * w * w));
        row.early = row.residual_original > 0.01;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace washboard
