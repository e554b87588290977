#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cli/commands.hpp"
#include "washboard/errors.hpp"

namespace {

using washboard::cli::json;

void error_line(const char* kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

const char* summary(const std::string& cmd) {
    static const std::map<std::string, const char*> text{
        {"bands", "band energies on the Brillouin-zone grid"},
        {"couple", "coupling probabilities over a displacement or delay scan"},
        {"optimize", "optimal pulse parameters per family"},
        {"scan-depth", "optimal coupling versus lattice depth"},
        {"loss-curve", "loss versus coupling along a displacement scan"},
        {"echo", "ensemble oscillation / pulse-echo trace"},
        {"lz", "Landau-Zener escape rates"},
    };
    return text.at(cmd);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace washboard;
    CLI::App app{"washboard: band coupling and pulse-echo simulations for shaken optical lattices"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(cli::tool_version));

    std::string config_path;
    std::map<std::string, std::string> overrides;
    for (const auto& name : cli::command_names()) {
        auto* sub = app.add_subcommand(name, summary(name));
        sub->add_option("-c,--config", config_path, "JSON config file (a run manifest also works)");
        for (const auto& key : cli::known_keys())
            sub->add_option_function<std::string>("--" + key, [&overrides, key](const std::string& v) {
                overrides[key] = v;
            }, "override " + key);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        error_line("usage", e.what());
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        json doc = config_path.empty() ? json::object() : cli::load_config_file(config_path);
        for (const auto& [key, value] : overrides) cli::apply_override(doc, key, value);
        const auto cfg = cli::parse_config(doc);
        for (const auto& f : cli::run_command(command, cfg).files) std::cout << f.string() << '\n';
    } catch (const ValidationError& e) {
        error_line("validation", e.what());
        return 3;
    } catch (const NumericalError& e) {
        error_line("numerical", e.what());
        return 4;
    } catch (const cli::IoError& e) {
        error_line("io", e.what());
        return 5;
    } catch (const std::exception& e) {
        error_line("internal", e.what());
        return 1;
    }
    return 0;
}
