#include "washboard/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "washboard/errors.hpp"

namespace washboard {

LatticeModel make_model(const LatticeConfig& config) { return make_model(config, config.num_q); }

LatticeModel make_model(const LatticeConfig& config, int n_q) {
    LatticeModel m;
    m.config = config;
    m.config.num_q = n_q;
    m.bands = band_structure(m.config, n_q);
    m.t12_s = mean_splitting_period(m.config, m.bands);
    return m;
}

namespace {

// Columns 0 and 1: q-averaged |O e_1|^2 and |O e_2|^2.
Eigen::MatrixXd averaged_columns(const LatticeModel& model, const PulseSpec& spec) {
    const auto schedule = pulse_schedule(spec, model.t12_s);
    const int nb = model.config.num_bands;
    const Eigen::MatrixXcd init = Eigen::MatrixXcd::Identity(nb, 2);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(nb, 2);
    for (const auto& sol : model.bands.solutions) {
        acc += propagate(schedule, sol, model.config.angular_recoil(), init).cwiseAbs2();
    }
    return acc / static_cast<double>(model.bands.solutions.size());
}

}  // namespace

CouplingResult coupling_probabilities(const LatticeModel& model, const PulseSpec& spec) {
    const Eigen::MatrixXd cols = averaged_columns(model, spec);
    CouplingResult r;
    r.p = cols.transpose();
    for (int i = 0; i < 2; ++i) r.loss_from[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - r.p(i, 0) - r.p(i, 1));
    return r;
}

CouplingResult coupling_probabilities(const LatticeConfig& config, const PulseSpec& spec) {
    return coupling_probabilities(make_model(config), spec);
}

Eigen::VectorXd transfer_probabilities(const LatticeModel& model, const PulseSpec& spec, int initial_band) {
    if (initial_band != 1 && initial_band != 2) throw ValidationError("initial_band must be 1 or 2");
    return coupling_probabilities(model, spec).p.row(initial_band - 1).transpose();
}

Eigen::VectorXd transfer_at_q(const LatticeModel& model, const PulseSpec& spec, std::size_t q_index,
                              int initial_band) {
    if (q_index >= model.bands.solutions.size()) throw ValidationError("q index out of range");
    const auto& sol = model.bands.solutions[q_index];
    const auto out = apply_pulse(spec, sol, model.clock(), BandAmplitudes::basis_state(sol, initial_band));
    return out.amps.cwiseAbs2();
}

PulseSpec PulseTemplate::with(double amplitude, double temporal_param) const {
    PulseSpec p;
    switch (kind) {
        case PulseKind::single_step: p = PulseSpec::single_step(amplitude); break;
        case PulseKind::square: p = PulseSpec::square(amplitude, temporal_param); break;
        case PulseKind::gaussian: p = PulseSpec::gaussian(amplitude, temporal_param); break;
    }
    p.step_dt_s = step_dt_s;
    p.truncation_sigmas = truncation_sigmas;
    return p;
}

std::vector<double> default_displacement_grid() {
    std::vector<double> g;
    for (int k = 0; k <= 36; ++k) g.push_back(k * phase_step_displacement);
    return g;
}

std::vector<ScanRow> scan_displacement(const LatticeModel& model, const PulseTemplate& family,
                                       std::span<const double> dx_grid) {
    std::vector<ScanRow> rows;
    rows.reserve(dx_grid.size());
    for (double dx : dx_grid) {
        if (!(dx >= 0.0 && dx <= 0.5)) throw ValidationError("scan_displacement: dx must lie in [0, 0.5]");
        rows.push_back({dx, coupling_probabilities(model, family.with(dx))});
    }
    return rows;
}

std::vector<ScanRow> scan_delay(const LatticeModel& model, double dx, std::span<const double> tau_grid) {
    std::vector<ScanRow> rows;
    rows.reserve(tau_grid.size());
    for (double tau : tau_grid) {
        if (!(tau >= 0.0)) throw ValidationError("scan_delay: tau must be >= 0");
        rows.push_back({tau, coupling_probabilities(model, PulseSpec::square(dx, tau))});
    }
    return rows;
}

std::vector<double> GridAxis::points() const {
    if (!(step > 0.0) || hi < lo) throw ValidationError("grid axis must have step > 0 and hi >= lo");
    std::vector<double> pts;
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) pts.push_back(lo + static_cast<double>(i) * step);
    return pts;
}

SearchGrid SearchGrid::defaults(PulseKind kind) {
    SearchGrid g;
    switch (kind) {
        case PulseKind::single_step: break;
        case PulseKind::square: g.temporal = {0.02, 1.0, 0.02}; break;
        case PulseKind::gaussian: g.temporal = {0.1, 0.6, 0.02}; break;
    }
    return g;
}

namespace {

struct Candidate {
    double amplitude = 0.0;
    double temporal = 0.0;
    double p12 = -1.0;
    CouplingResult result;
};

Candidate search(const LatticeModel& model, const PulseTemplate& family, const std::vector<double>& amps,
                 const std::vector<double>& temps) {
    Candidate best;
    for (double a : amps) {
        for (double t : temps) {
            auto r = coupling_probabilities(model, family.with(a, t));
            // amplitude-major, ascending: strict improvement keeps the gentler pulse on ties
            if (r.p12() > best.p12 + 1e-12) best = {a, t, r.p12(), std::move(r)};
        }
    }
    return best;
}

std::vector<double> refined(double centre, double coarse_step, int factor, double lo, double hi) {
    std::vector<double> pts;
    const double fine = coarse_step / factor;
    for (int k = -factor; k <= factor; ++k) {
        const double x = centre + k * fine;
        if (x >= lo - 1e-12 && x <= hi + 1e-12) pts.push_back(std::clamp(x, lo, hi));
    }
    return pts;
}

}  // namespace

PulseOptimum optimize_pulse(const LatticeModel& model, const PulseTemplate& family, const SearchGrid& grid) {
    if (grid.refine_factor < 1) throw ValidationError("refine_factor must be >= 1");
    const bool timed = family.kind != PulseKind::single_step;
    const auto amps = grid.amplitude.points();
    const std::vector<double> temps = timed ? grid.temporal.points() : std::vector<double>{0.0};
    if (amps.empty() || temps.empty()) throw ValidationError("optimize_pulse: empty search grid");

    const Candidate coarse = search(model, family, amps, temps);

    const double amp_lo = std::max(0.0, grid.amplitude.lo - grid.amplitude.step);
    const auto fine_amps = refined(coarse.amplitude, grid.amplitude.step, grid.refine_factor, amp_lo, 0.5);
    std::vector<double> fine_temps{0.0};
    if (timed) {
        const double t_lo = std::max(grid.temporal.step / grid.refine_factor, grid.temporal.lo - grid.temporal.step);
        fine_temps = refined(coarse.temporal, grid.temporal.step, grid.refine_factor, t_lo,
                             grid.temporal.hi + grid.temporal.step);
    }
    Candidate fine = search(model, family, fine_amps, fine_temps);
    if (fine.p12 < coarse.p12) fine = coarse;

    PulseOptimum out;
    out.spec = family.with(fine.amplitude, fine.temporal);
    out.result = fine.result;
    out.coarse_spec = family.with(coarse.amplitude, coarse.temporal);
    out.coarse_p12 = coarse.p12;
    out.fine_amplitude_step = grid.amplitude.step / grid.refine_factor;
    out.fine_temporal_step = timed ? grid.temporal.step / grid.refine_factor : 0.0;
    return out;
}

std::vector<DepthScanRow> depth_scan(const LatticeConfig& base, const PulseTemplate& family,
                                     std::span<const double> s_grid, const SearchGrid& grid) {
    std::vector<DepthScanRow> rows;
    for (double s : s_grid) {
        LatticeConfig cfg = base;
        cfg.depth_s = s;
        const LatticeModel model = make_model(cfg);
        if (!second_band_bound(model.bands, s)) {
            std::ostringstream os;
            os << "depth_scan: band 2 is not bound at s=" << s;
            throw ValidationError(os.str());
        }
        DepthScanRow row;
        row.depth_s = s;
        row.kind = family.kind;
        row.t12_s = model.t12_s;
        row.optimum = optimize_pulse(model, family, grid);
        if (family.kind == PulseKind::square) row.tau_min_opt = row.optimum.spec.delay_scaled;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<LossCurvePoint> loss_vs_coupling(const LatticeModel& model, const PulseTemplate& family,
                                             std::span<const double> dx_grid) {
    std::vector<LossCurvePoint> pts;
    pts.reserve(dx_grid.size());
    for (const auto& row : scan_displacement(model, family, dx_grid))
        pts.push_back({row.parameter, row.result.p12(), row.result.loss()});
    return pts;
}

std::optional<double> loss_at_coupling(std::span<const LossCurvePoint> curve, double p12) {
    for (std::size_t i = 1; i < curve.size(); ++i) {
        const auto& a = curve[i - 1];
        const auto& b = curve[i];
        if (b.p12 < a.p12) break;  // past the rising branch
        if (a.p12 <= p12 && p12 <= b.p12) {
            const double f = b.p12 > a.p12 ? (p12 - a.p12) / (b.p12 - a.p12) : 0.0;
            return a.loss + f * (b.loss - a.loss);
        }
    }
    return std::nullopt;
}

double mixture_loss(const CouplingResult& result, double band2_fraction) {
    if (!(band2_fraction >= 0.0 && band2_fraction <= 1.0)) throw ValidationError("band2_fraction must lie in [0, 1]");
    return (1.0 - band2_fraction) * result.loss_from[0] + band2_fraction * result.loss_from[1];
}

}  // namespace washboard
