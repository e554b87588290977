#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "washboard/coupling.hpp"
#include "washboard/echo.hpp"
#include "washboard/lattice.hpp"
#include "washboard/pulse.hpp"

namespace washboard::cli {

using nlohmann::json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SweepConfig {
    std::optional<GridAxis> dx;
    std::optional<GridAxis> tau;
    std::optional<GridAxis> fwhm;
    std::optional<GridAxis> depth;
    std::optional<GridAxis> t0;
    std::string scan = "dx";  // couple: "dx" or "tau"
    std::vector<PulseKind> families{PulseKind::single_step, PulseKind::square, PulseKind::gaussian};
    int refine_factor = 10;
};

struct EchoConfig {
    EnsembleSpec ensemble;
    double prep_dx = 1.0 / 6.0;
    std::optional<double> t0_s;
    double t_end_s = 3e-3;
    double dt_s = 4e-6;
    std::string baseline = "none";  // none | dephased | late
    double late_time_s = 4e-3;
    std::optional<double> target_rms_s;  // calibrate depth_sigma_s first when set
};

struct OutputConfig {
    std::string path = ".";
    std::string format = "csv";
};

struct RunConfig {
    LatticeConfig lattice;
    PulseSpec pulse = PulseSpec::single_step(0.25);
    SweepConfig sweep;
    EchoConfig echo;
    OutputConfig output;
};

/// Every accepted dotted key, in a fixed order.
const std::vector<std::string>& known_keys();

/// Builds a RunConfig from a document, rejecting unknown keys and wrong types.
RunConfig parse_config(const json& doc);

/// Fully resolved document: every key with its effective value.
json to_json(const RunConfig& cfg);

/// Reads a config file. A run manifest is accepted too; its "config" section is used.
json load_config_file(const std::filesystem::path& path);

/// Sets a dotted key from command-line text, converting to the key's type.
void apply_override(json& doc, const std::string& key, const std::string& text);

}  // namespace washboard::cli
