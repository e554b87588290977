#include "config.hpp"

#include <fstream>
#include <sstream>

#include "washboard/errors.hpp"

namespace washboard::cli {

namespace {

enum class Kind { number, integer, boolean, string, optional_number, axis, families };

struct Key {
    std::string name;
    Kind kind;
};

const std::vector<Key>& schema() {
    static const std::vector<Key> keys{
        {"lattice.depth_s", Kind::number},
        {"lattice.recoil_frequency", Kind::number},
        {"lattice.wavelength_nm", Kind::number},
        {"lattice.beam_angle_deg", Kind::number},
        {"lattice.tilt_per_site", Kind::number},
        {"lattice.num_plane_waves", Kind::integer},
        {"lattice.num_bands", Kind::integer},
        {"lattice.num_q", Kind::integer},
        {"pulse.kind", Kind::string},
        {"pulse.amplitude", Kind::number},
        {"pulse.delay_scaled", Kind::optional_number},
        {"pulse.fwhm_scaled", Kind::optional_number},
        {"pulse.step_dt_s", Kind::number},
        {"pulse.truncation_sigmas", Kind::number},
        {"sweep.dx", Kind::axis},
        {"sweep.tau", Kind::axis},
        {"sweep.fwhm", Kind::axis},
        {"sweep.depth", Kind::axis},
        {"sweep.t0", Kind::axis},
        {"sweep.scan", Kind::string},
        {"sweep.families", Kind::families},
        {"sweep.refine_factor", Kind::integer},
        {"echo.center_depth_s", Kind::number},
        {"echo.depth_sigma_s", Kind::number},
        {"echo.n_members", Kind::integer},
        {"echo.num_q", Kind::integer},
        {"echo.num_bands", Kind::integer},
        {"echo.seed", Kind::integer},
        {"echo.jitter", Kind::boolean},
        {"echo.prep_dx", Kind::number},
        {"echo.t0_s", Kind::optional_number},
        {"echo.t_end_s", Kind::number},
        {"echo.dt_s", Kind::number},
        {"echo.baseline", Kind::string},
        {"echo.late_time_s", Kind::number},
        {"echo.target_rms_s", Kind::optional_number},
        {"output.path", Kind::string},
        {"output.format", Kind::string},
    };
    return keys;
}

const Key* find_key(const std::string& name) {
    for (const auto& k : schema())
        if (k.name == name) return &k;
    return nullptr;
}

[[noreturn]] void bad(const std::string& key, const std::string& what) { throw ValidationError(key + ": " + what); }

void check_type(const std::string& key, Kind kind, const json& v) {
    switch (kind) {
        case Kind::number:
            if (!v.is_number()) bad(key, "expected a number");
            break;
        case Kind::integer:
            if (!v.is_number_integer()) bad(key, "expected an integer");
            break;
        case Kind::boolean:
            if (!v.is_boolean()) bad(key, "expected true or false");
            break;
        case Kind::string:
            if (!v.is_string()) bad(key, "expected a string");
            break;
        case Kind::optional_number:
            if (!v.is_null() && !v.is_number()) bad(key, "expected a number or null");
            break;
        case Kind::axis:
            if (v.is_null()) break;
            if (!v.is_object()) bad(key, "expected {\"lo\", \"hi\", \"step\"} or null");
            for (const auto& [k, x] : v.items()) {
                if (k != "lo" && k != "hi" && k != "step") bad(key + "." + k, "unknown key");
                if (!x.is_number()) bad(key + "." + k, "expected a number");
            }
            if (!v.contains("lo") || !v.contains("hi") || !v.contains("step")) bad(key, "needs lo, hi and step");
            break;
        case Kind::families:
            if (!v.is_array() || v.empty()) bad(key, "expected a non-empty list of pulse families");
            for (const auto& x : v)
                if (!x.is_string()) bad(key, "expected family names");
            break;
    }
}

std::optional<GridAxis> read_axis(const std::string& key, const json& v) {
    if (v.is_null()) return std::nullopt;
    GridAxis a{v["lo"].get<double>(), v["hi"].get<double>(), v["step"].get<double>()};
    if (!(a.step > 0.0) || a.hi < a.lo) bad(key, "requires step > 0 and hi >= lo");
    return a;
}

json axis_json(const std::optional<GridAxis>& a) {
    if (!a) return nullptr;
    return json{{"lo", a->lo}, {"hi", a->hi}, {"step", a->step}};
}

json optional_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> read_optional(const json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double x = 0.0;
    try {
        x = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) bad(key, "expected a number, got '" + text + "'");
    return x;
}

long long parse_integer(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    long long x = 0;
    try {
        x = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) bad(key, "expected an integer, got '" + text + "'");
    return x;
}

}  // namespace

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& k : schema()) n.push_back(k.name);
        return n;
    }();
    return names;
}

json to_json(const RunConfig& c) {
    json families = json::array();
    for (auto f : c.sweep.families) families.push_back(std::string(to_string(f)));
    return json{
        {"lattice",
         {{"depth_s", c.lattice.depth_s},
          {"recoil_frequency", c.lattice.recoil_frequency},
          {"wavelength_nm", c.lattice.wavelength_nm},
          {"beam_angle_deg", c.lattice.beam_angle_deg},
          {"tilt_per_site", c.lattice.tilt_per_site},
          {"num_plane_waves", c.lattice.num_plane_waves},
          {"num_bands", c.lattice.num_bands},
          {"num_q", c.lattice.num_q}}},
        {"pulse",
         {{"kind", std::string(to_string(c.pulse.kind))},
          {"amplitude", c.pulse.amplitude},
          {"delay_scaled", optional_json(c.pulse.delay_scaled)},
          {"fwhm_scaled", optional_json(c.pulse.fwhm_scaled)},
          {"step_dt_s", c.pulse.step_dt_s},
          {"truncation_sigmas", c.pulse.truncation_sigmas}}},
        {"sweep",
         {{"dx", axis_json(c.sweep.dx)},
          {"tau", axis_json(c.sweep.tau)},
          {"fwhm", axis_json(c.sweep.fwhm)},
          {"depth", axis_json(c.sweep.depth)},
          {"t0", axis_json(c.sweep.t0)},
          {"scan", c.sweep.scan},
          {"families", families},
          {"refine_factor", c.sweep.refine_factor}}},
        {"echo",
         {{"center_depth_s", c.echo.ensemble.center_depth_s},
          {"depth_sigma_s", c.echo.ensemble.depth_sigma_s},
          {"n_members", c.echo.ensemble.n_members},
          {"num_q", c.echo.ensemble.num_q},
          {"num_bands", c.echo.ensemble.num_bands},
          {"seed", c.echo.ensemble.seed},
          {"jitter", c.echo.ensemble.jitter},
          {"prep_dx", c.echo.prep_dx},
          {"t0_s", optional_json(c.echo.t0_s)},
          {"t_end_s", c.echo.t_end_s},
          {"dt_s", c.echo.dt_s},
          {"baseline", c.echo.baseline},
          {"late_time_s", c.echo.late_time_s},
          {"target_rms_s", optional_json(c.echo.target_rms_s)}}},
        {"output", {{"path", c.output.path}, {"format", c.output.format}}},
    };
}

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ValidationError("config: top level must be an object");
    // start from defaults so omitted keys keep them
    json full = to_json(RunConfig{});
    for (const auto& [section, body] : doc.items()) {
        if (!full.contains(section)) bad(section, "unknown section");
        if (!body.is_object()) bad(section, "expected an object");
        for (const auto& [k, v] : body.items()) {
            const std::string name = section + "." + k;
            const Key* key = find_key(name);
            if (!key) bad(name, "unknown key");
            check_type(name, key->kind, v);
            full[section][k] = v;
        }
    }

    RunConfig c;
    const auto& L = full["lattice"];
    c.lattice.depth_s = L["depth_s"].get<double>();
    c.lattice.recoil_frequency = L["recoil_frequency"].get<double>();
    c.lattice.wavelength_nm = L["wavelength_nm"].get<double>();
    c.lattice.beam_angle_deg = L["beam_angle_deg"].get<double>();
    c.lattice.tilt_per_site = L["tilt_per_site"].get<double>();
    c.lattice.num_plane_waves = L["num_plane_waves"].get<int>();
    c.lattice.num_bands = L["num_bands"].get<int>();
    c.lattice.num_q = L["num_q"].get<int>();
    c.lattice.validate();

    const auto& P = full["pulse"];
    try {
        c.pulse.kind = parse_pulse_kind(P["kind"].get<std::string>());
    } catch (const ValidationError& e) {
        bad("pulse.kind", e.what());
    }
    c.pulse.amplitude = P["amplitude"].get<double>();
    c.pulse.delay_scaled = read_optional(P["delay_scaled"]);
    c.pulse.fwhm_scaled = read_optional(P["fwhm_scaled"]);
    c.pulse.step_dt_s = P["step_dt_s"].get<double>();
    c.pulse.truncation_sigmas = P["truncation_sigmas"].get<double>();
    c.pulse.validate();

    const auto& S = full["sweep"];
    c.sweep.dx = read_axis("sweep.dx", S["dx"]);
    c.sweep.tau = read_axis("sweep.tau", S["tau"]);
    c.sweep.fwhm = read_axis("sweep.fwhm", S["fwhm"]);
    c.sweep.depth = read_axis("sweep.depth", S["depth"]);
    c.sweep.t0 = read_axis("sweep.t0", S["t0"]);
    c.sweep.scan = S["scan"].get<std::string>();
    if (c.sweep.scan != "dx" && c.sweep.scan != "tau") bad("sweep.scan", "must be \"dx\" or \"tau\"");
    c.sweep.families.clear();
    for (const auto& f : S["families"]) {
        try {
            c.sweep.families.push_back(parse_pulse_kind(f.get<std::string>()));
        } catch (const ValidationError& e) {
            bad("sweep.families", e.what());
        }
    }
    c.sweep.refine_factor = S["refine_factor"].get<int>();
    if (c.sweep.refine_factor < 1) bad("sweep.refine_factor", "must be >= 1");

    const auto& E = full["echo"];
    c.echo.ensemble.center_depth_s = E["center_depth_s"].get<double>();
    c.echo.ensemble.depth_sigma_s = E["depth_sigma_s"].get<double>();
    c.echo.ensemble.n_members = E["n_members"].get<int>();
    c.echo.ensemble.num_q = E["num_q"].get<int>();
    c.echo.ensemble.num_bands = E["num_bands"].get<int>();
    if (E["seed"].get<long long>() < 0) bad("echo.seed", "must be >= 0");
    c.echo.ensemble.seed = E["seed"].get<std::uint64_t>();
    c.echo.ensemble.jitter = E["jitter"].get<bool>();
    c.echo.ensemble.validate();
    c.echo.prep_dx = E["prep_dx"].get<double>();
    if (!(c.echo.prep_dx > 0.0 && c.echo.prep_dx <= 0.5)) bad("echo.prep_dx", "must lie in (0, 0.5]");
    c.echo.t0_s = read_optional(E["t0_s"]);
    if (c.echo.t0_s && !(*c.echo.t0_s > 0.0)) bad("echo.t0_s", "must be > 0");
    c.echo.t_end_s = E["t_end_s"].get<double>();
    c.echo.dt_s = E["dt_s"].get<double>();
    if (!(c.echo.dt_s > 0.0)) bad("echo.dt_s", "must be > 0");
    if (!(c.echo.t_end_s > c.echo.dt_s)) bad("echo.t_end_s", "must exceed echo.dt_s");
    c.echo.baseline = E["baseline"].get<std::string>();
    if (c.echo.baseline != "none" && c.echo.baseline != "dephased" && c.echo.baseline != "late")
        bad("echo.baseline", "must be \"none\", \"dephased\" or \"late\"");
    c.echo.late_time_s = E["late_time_s"].get<double>();
    c.echo.target_rms_s = read_optional(E["target_rms_s"]);
    if (c.echo.target_rms_s && !(*c.echo.target_rms_s > 0.0)) bad("echo.target_rms_s", "must be > 0");

    const auto& O = full["output"];
    c.output.path = O["path"].get<std::string>();
    c.output.format = O["format"].get<std::string>();
    if (c.output.format != "csv") bad("output.format", "only \"csv\" is supported");
    if (c.output.path.empty()) bad("output.path", "must not be empty");
    return c;
}

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: " + path.string() + " is not valid JSON: " + e.what());
    }
    if (doc.is_object() && doc.contains("tool") && doc.contains("config")) return doc["config"];
    return doc;
}

void apply_override(json& doc, const std::string& key, const std::string& text) {
    const Key* k = find_key(key);
    if (!k) bad(key, "unknown key");
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    const std::string name = key.substr(dot + 1);
    if (!doc.is_object()) doc = json::object();
    json& slot = doc[section][name];
    switch (k->kind) {
        case Kind::number: slot = parse_number(key, text); break;
        case Kind::integer: slot = parse_integer(key, text); break;
        case Kind::boolean:
            if (text == "true" || text == "1")
                slot = true;
            else if (text == "false" || text == "0")
                slot = false;
            else
                bad(key, "expected true or false, got '" + text + "'");
            break;
        case Kind::string: slot = text; break;
        case Kind::optional_number:
            if (text == "null")
                slot = nullptr;
            else
                slot = parse_number(key, text);
            break;
        case Kind::axis: {
            if (text == "null") {
                slot = nullptr;
                break;
            }
            // lo:hi:step
            std::vector<std::string> parts;
            std::stringstream ss(text);
            for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
            if (parts.size() != 3) bad(key, "expected lo:hi:step, got '" + text + "'");
            slot = json{{"lo", parse_number(key, parts[0])},
                        {"hi", parse_number(key, parts[1])},
                        {"step", parse_number(key, parts[2])}};
            break;
        }
        case Kind::families: {
            json list = json::array();
            std::stringstream ss(text);
            for (std::string p; std::getline(ss, p, ',');) list.push_back(p);
            slot = list;
            break;
        }
    }
}

}  // namespace washboard::cli
