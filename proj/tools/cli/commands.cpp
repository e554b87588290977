#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "washboard/errors.hpp"

namespace washboard::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double x) {
    if (!std::isfinite(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

std::string opt_num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row(header); }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }
    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    f << text;
    if (!f) throw IoError("write failed for " + path.string());
}

struct Run {
    Run(const RunConfig& c, std::string n) : cfg(c), name(std::move(n)), dir(c.output.path) {}

    const RunConfig& cfg;
    std::string name;
    fs::path dir;
    json hashes = json::object();
    json columns = json::object();
    json results = json::object();
    CommandOutput out;

    void csv(const std::string& stem, const Csv& table) {
        const fs::path p = dir / (stem + ".csv");
        write_file(p, table.str());
        out.files.push_back(p);
    }

    void grid(const std::string& key, const std::vector<double>& g) { hashes[key] = grid_hash(g); }

    void manifest() {
        json files = json::array();
        for (const auto& f : out.files) files.push_back(f.filename().string());
        const json m{{"tool", "washboard"},         {"version", tool_version}, {"command", name},
                     {"config", to_json(cfg)},      {"grid_hashes", hashes},   {"columns", columns},
                     {"results", results},          {"outputs", files}};
        const fs::path p = dir / (name + ".manifest.json");
        write_file(p, m.dump(2) + "\n");
        out.files.push_back(p);
    }
};

PulseTemplate template_of(const PulseSpec& p) {
    PulseTemplate t;
    t.kind = p.kind;
    if (p.kind == PulseKind::square) t.temporal = p.delay_scaled.value_or(0.0);
    if (p.kind == PulseKind::gaussian) t.temporal = p.fwhm_scaled.value_or(0.0);
    t.step_dt_s = p.step_dt_s;
    t.truncation_sigmas = p.truncation_sigmas;
    return t;
}

PulseTemplate family_template(PulseKind kind, const PulseSpec& p) {
    PulseTemplate t;
    t.kind = kind;
    t.step_dt_s = p.step_dt_s;
    t.truncation_sigmas = p.truncation_sigmas;
    return t;
}

SearchGrid search_grid(PulseKind kind, const SweepConfig& sweep) {
    SearchGrid g = SearchGrid::defaults(kind);
    if (sweep.dx) g.amplitude = *sweep.dx;
    if (kind == PulseKind::square && sweep.tau) g.temporal = *sweep.tau;
    if (kind == PulseKind::gaussian && sweep.fwhm) g.temporal = *sweep.fwhm;
    g.refine_factor = sweep.refine_factor;
    return g;
}

std::vector<double> dx_grid(const SweepConfig& sweep) {
    return sweep.dx ? sweep.dx->points() : default_displacement_grid();
}

std::optional<double> temporal_of(const PulseSpec& p) {
    if (p.kind == PulseKind::square) return p.delay_scaled;
    if (p.kind == PulseKind::gaussian) return p.fwhm_scaled;
    return std::nullopt;
}

json fit_json(const EnvelopeFit& f) {
    return json{{"amplitude", f.amplitude}, {"period_s", f.period_s},     {"gaussian_rms_s", f.gaussian_rms_s},
                {"offset", f.offset},       {"phase", f.phase},           {"center_s", f.center_s},
                {"residual_norm", f.residual_norm}};
}

void cmd_bands(Run& r) {
    const auto& L = r.cfg.lattice;
    const auto bs = band_structure(L, L.num_q);
    std::vector<std::string> header{"q"};
    for (int n = 1; n <= L.num_bands; ++n) header.push_back("E" + std::to_string(n));
    Csv t(header);
    for (const auto& sol : bs.solutions) {
        std::vector<std::string> cells{num(sol.q)};
        for (int n = 0; n < L.num_bands; ++n) cells.push_back(num(sol.energies(n)));
        t.row(cells);
    }
    r.grid("q", bs.q_grid);
    r.columns = {{"q", "k_L"}, {"E1..En", "E_R"}};
    r.results["t12_s"] = mean_splitting_period(L, bs);
    r.csv("bands", t);
}

void cmd_couple(Run& r) {
    const auto model = make_model(r.cfg.lattice);
    r.grid("q", model.bands.q_grid);
    r.results["t12_s"] = model.t12_s;
    if (r.cfg.sweep.scan == "dx") {
        const auto g = dx_grid(r.cfg.sweep);
        r.grid("dx", g);
        Csv t({"dx", "P11", "P12", "loss"});
        for (const auto& row : scan_displacement(model, template_of(r.cfg.pulse), g))
            t.row({num(row.parameter), num(row.result.p11()), num(row.result.p12()), num(row.result.loss())});
        r.columns = {{"dx", "a"}, {"P11", "1"}, {"P12", "1"}, {"loss", "1"}};
        r.csv("couple", t);
    } else {
        const auto g = r.cfg.sweep.tau ? r.cfg.sweep.tau->points() : GridAxis{0.0, 1.0, 0.02}.points();
        r.grid("tau", g);
        Csv t({"tau", "P12", "P11", "loss"});
        for (const auto& row : scan_delay(model, r.cfg.pulse.amplitude, g))
            t.row({num(row.parameter), num(row.result.p12()), num(row.result.p11()), num(row.result.loss())});
        r.columns = {{"tau", "T12"}, {"P12", "1"}, {"P11", "1"}, {"loss", "1"}};
        r.csv("couple", t);
    }
}

void cmd_optimize(Run& r) {
    const auto model = make_model(r.cfg.lattice);
    r.grid("q", model.bands.q_grid);
    r.results["t12_s"] = model.t12_s;
    Csv t({"family", "A_pulse", "W_pulse", "P12"});
    for (auto kind : r.cfg.sweep.families) {
        const auto grid = search_grid(kind, r.cfg.sweep);
        const auto opt = optimize_pulse(model, family_template(kind, r.cfg.pulse), grid);
        const std::string fam(to_string(kind));
        r.grid(fam + ".amplitude", grid.amplitude.points());
        if (kind != PulseKind::single_step) r.grid(fam + ".temporal", grid.temporal.points());
        t.row({fam, num(opt.spec.amplitude), opt_num(temporal_of(opt.spec)), num(opt.result.p12())});
        r.results[fam] = {{"coarse_amplitude", opt.coarse_spec.amplitude},
                          {"coarse_temporal", temporal_of(opt.coarse_spec) ? json(*temporal_of(opt.coarse_spec)) : json()},
                          {"coarse_p12", opt.coarse_p12},
                          {"p11", opt.result.p11()},
                          {"loss", opt.result.loss()}};
    }
    r.columns = {{"A_pulse", "a"}, {"W_pulse", "T12"}, {"P12", "1"}};
    r.csv("optimize", t);
}

void cmd_scan_depth(Run& r) {
    const auto depths = r.cfg.sweep.depth ? r.cfg.sweep.depth->points() : GridAxis{4.0, 30.0, 1.0}.points();
    r.grid("s", depths);
    Csv t({"s", "family", "A_opt", "W_opt", "P12_max", "tau_min_opt"});
    // depth-major rows
    std::map<PulseKind, std::vector<DepthScanRow>> by_family;
    for (auto kind : r.cfg.sweep.families)
        by_family[kind] = depth_scan(r.cfg.lattice, family_template(kind, r.cfg.pulse), depths,
                                     search_grid(kind, r.cfg.sweep));
    for (std::size_t i = 0; i < depths.size(); ++i) {
        for (auto kind : r.cfg.sweep.families) {
            const auto& row = by_family[kind][i];
            t.row({num(row.depth_s), std::string(to_string(kind)), num(row.optimum.spec.amplitude),
                   opt_num(temporal_of(row.optimum.spec)), num(row.optimum.result.p12()), opt_num(row.tau_min_opt)});
        }
    }
    r.columns = {{"s", "E_R"}, {"A_opt", "a"}, {"W_opt", "T12"}, {"P12_max", "1"}, {"tau_min_opt", "T12"}};
    r.csv("scan-depth", t);
}

void cmd_loss_curve(Run& r) {
    const auto model = make_model(r.cfg.lattice);
    const auto g = dx_grid(r.cfg.sweep);
    r.grid("q", model.bands.q_grid);
    r.grid("dx", g);
    Csv t({"dx", "P12", "loss"});
    for (const auto& p : loss_vs_coupling(model, template_of(r.cfg.pulse), g))
        t.row({num(p.amplitude), num(p.p12), num(p.loss)});
    r.columns = {{"dx", "a"}, {"P12", "1"}, {"loss", "1"}};
    r.csv("loss-curve", t);
}

void trace_csv(Run& r, const std::string& stem, const EchoTrace& tr) {
    Csv t({"t_s", "p1"});
    for (std::size_t i = 0; i < tr.times.size(); ++i) t.row({num(tr.times[i]), num(tr.p1[i])});
    r.csv(stem, t);
}

void cmd_echo(Run& r) {
    const auto& E = r.cfg.echo;
    EnsembleSpec spec = E.ensemble;
    if (E.target_rms_s) {
        const auto cal = calibrate_inhomogeneity(r.cfg.lattice, spec, E.prep_dx, *E.target_rms_s);
        spec.depth_sigma_s = cal.depth_sigma_s;
        r.results["calibrated_depth_sigma_s"] = cal.depth_sigma_s;
        r.results["calibration_fit"] = fit_json(cal.fit);
    }
    const auto ens = build_ensemble(r.cfg.lattice, spec);
    r.results["t12_center_s"] = ens.t12_center_s;
    r.results["rejected_members"] = ens.rejected;
    std::vector<double> depths;
    for (const auto& m : ens.members) depths.push_back(m.depth_s);
    r.grid("member_depths", depths);

    const auto times = time_grid(0.0, E.t_end_s, E.dt_s);
    r.grid("t", times);
    r.columns = {{"t_s", "s"}, {"p1", "1"}};

    if (!E.t0_s) {
        const auto tr = simulate_population_trace(ens, E.prep_dx, times);
        r.results["fit"] = fit_json(fit_envelope(tr));
        r.results["max_norm_defect"] = tr.meta.max_norm_defect;
        trace_csv(r, "echo", tr);
        return;
    }

    const auto pulse = EchoPulse::lattice(r.cfg.pulse);
    const auto tr = simulate_echo(ens, E.prep_dx, pulse, *E.t0_s, times);
    r.results["max_norm_defect"] = tr.meta.max_norm_defect;
    r.results["pulse_start_s"] = tr.meta.pulse_start_s;
    r.results["pulse_end_s"] = tr.meta.pulse_end_s;
    trace_csv(r, "echo", tr);

    // original oscillation: the part of the same run before the echo pulse
    std::vector<double> t_pre, p_pre;
    for (std::size_t i = 0; i < tr.times.size() && tr.times[i] < tr.meta.pulse_start_s; ++i) {
        t_pre.push_back(tr.times[i]);
        p_pre.push_back(tr.p1[i]);
    }
    const auto original = fit_envelope(t_pre, p_pre);
    r.results["original_fit"] = fit_json(original);

    if (E.baseline == "none") return;
    const auto mode = E.baseline == "late" ? BaselineMode::late : BaselineMode::dephased;
    const auto base = simulate_baseline(ens, E.prep_dx, pulse, *E.t0_s, times, mode, E.late_time_s);
    trace_csv(r, "echo_baseline", base);
    const auto amp = echo_amplitude(tr, base, original);
    r.results["echo"] = {{"ratio", amp.ratio},
                         {"envelope_peak_s", amp.envelope_peak_s},
                         {"below_resolution", amp.below_resolution},
                         {"width_pinned", amp.width_pinned},
                         {"fit", fit_json(amp.fit)}};

    if (r.cfg.sweep.t0) {
        const auto t0s = r.cfg.sweep.t0->points();
        r.grid("t0", t0s);
        Csv t({"t0_s", "echo_amplitude", "residual_original", "early"});
        for (const auto& row : echo_vs_t0(ens, E.prep_dx, pulse, t0s, original))
            t.row({num(row.t0_s), num(row.amplitude.ratio), num(row.residual_original), row.early ? "1" : "0"});
        r.csv("echo_vs_t0", t);
    }
}

void cmd_lz(Run& r) {
    const auto bs = band_structure(r.cfg.lattice, r.cfg.lattice.num_q);
    r.grid("q", bs.q_grid);
    Csv t({"n", "rate_hz", "lifetime_s"});
    json gaps = json::array();
    for (const auto& lz : lz_lifetimes(r.cfg.lattice, bs)) {
        if (lz.band > 3) break;  // the table covers n = 1, 2, 3
        t.row({std::to_string(lz.band), num(lz.rate_hz), num(lz.lifetime_s)});
        gaps.push_back(lz.gap);
    }
    r.results["gap_E_R"] = gaps;
    r.results["bloch_frequency_hz"] = bloch_frequency(r.cfg.lattice);
    r.columns = {{"n", "band"}, {"rate_hz", "Hz"}, {"lifetime_s", "s"}};
    r.csv("lz", t);
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"bands", "couple", "optimize", "scan-depth", "loss-curve", "echo", "lz"};
    return names;
}

std::string grid_hash(const std::vector<double>& grid) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : grid) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &x, sizeof x);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CommandOutput run_command(const std::string& name, const RunConfig& cfg) {
    Run r(cfg, name);
    std::error_code ec;
    fs::create_directories(r.dir, ec);
    if (ec || !fs::is_directory(r.dir)) throw IoError("cannot create output directory " + r.dir.string());

    if (name == "bands")
        cmd_bands(r);
    else if (name == "couple")
        cmd_couple(r);
    else if (name == "optimize")
        cmd_optimize(r);
    else if (name == "scan-depth")
        cmd_scan_depth(r);
    else if (name == "loss-curve")
        cmd_loss_curve(r);
    else if (name == "echo")
        cmd_echo(r);
    else if (name == "lz")
        cmd_lz(r);
    else
        throw ValidationError("unknown command '" + name + "'");
    r.manifest();
    return r.out;
}

}  // namespace washboard::cli
