// cavcat: command-line front end for the reflection simulations, figure sweeps and cat-state protocols.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure.

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cavcat/error.hpp"
#include "cavcat/experiments.hpp"
#include "cavcat/run_config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Flags are collected as text and applied through the same path as a config file.
struct Flag {
    const char* name;
    const char* key;
    const char* help;
    enum Kind { number, integer, text, list, complex } kind;
};

const std::vector<Flag>& flags() {
    static const std::vector<Flag> f = {
        {"--g", "g", "g/kappa values: x, a,b,c or start:stop:points", Flag::list},
        {"--kappa-t", "kappa_t", "kappa T values: x, a,b,c or start:stop:points", Flag::list},
        {"--gamma-s", "gamma_s", "spontaneous emission rate gamma_s/kappa", Flag::number},
        {"--alpha-sq", "alpha_sq", "input |alpha|^2 values: x, a,b,c or start:stop:points", Flag::list},
        {"--targets", "targets", "fig4b output |alpha_1|^2 values", Flag::list},
        {"--fock-cutoff", "fock_cutoff", "starting Fock cutoff", Flag::integer},
        {"--max-cutoff", "max_cutoff", "largest Fock cutoff tried", Flag::integer},
        {"--dt", "dt", "integration step (0 = stability bound)", Flag::number},
        {"--margin", "margin", "grid time after T (default max(20, T/10))", Flag::number},
        {"--protocol", "protocol", "multidimensional, multipartite or script", Flag::text},
        {"--rounds", "rounds", "multidimensional rounds", Flag::integer},
        {"--n-pulses", "n_pulses", "multipartite pulse count", Flag::integer},
        {"--alpha", "alpha", "protocol amplitude: re or re,im", Flag::complex},
        {"--noise", "noise", "ideal, lossy or simulated", Flag::text},
        {"--eta", "eta", "loss for the lossy channel", Flag::number},
        {"--postselect", "postselect", "+, - or none", Flag::text},
        {"--script", "script", "protocol script (JSON)", Flag::text},
        {"--state", "state", "cat state JSON for wigner", Flag::text},
        {"--mode", "mode", "mode label for wigner", Flag::text},
        {"--extent", "extent", "Wigner grid half width", Flag::number},
        {"--points", "points", "Wigner grid points per axis", Flag::integer},
        {"--out", "out", "output directory", Flag::text},
        {"--jobs", "jobs", "worker threads", Flag::integer},
    };
    return f;
}

nlohmann::json flag_value(const Flag& f, const std::string& text) {
    switch (f.kind) {
    case Flag::number: return cavcat::parse_number_list(text).at(0);
    case Flag::integer: {
        const double v = cavcat::parse_number_list(text).at(0);
        if (v != static_cast<int>(v)) throw cavcat::ConfigError(std::string(f.name) + " needs an integer");
        return static_cast<int>(v);
    }
    case Flag::list: return cavcat::parse_number_list(text);
    case Flag::complex: {
        const cavcat::cplx z = cavcat::parse_complex(text);
        return nlohmann::json::array({z.real(), z.imag()});
    }
    case Flag::text: break;
    }
    return text;
}

struct Command {
    CLI::App* app = nullptr;
    std::string config;
    bool quiet = false;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

void add_options(Command& c) {
    c.app->add_option("--config", c.config, "JSON config file (flags override it)");
    c.app->add_flag("-q,--quiet", c.quiet, "no progress output");
    for (const auto& f : flags()) c.options[f.key] = c.app->add_option(f.name, c.values[f.key], f.help);
}

int run(const std::string& name, Command& c) {
    using namespace cavcat;
    RunConfig config = RunConfig::defaults(experiment_from_string(name));
    if (!c.config.empty()) apply_config_file(config, c.config);
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& f : flags())
        if (c.options.at(f.key)->count() > 0) overrides[f.key] = flag_value(f, c.values.at(f.key));
    apply_json(config, overrides);

    ProgressFn progress;
    if (!c.quiet) progress = [](const std::string& s) { std::cerr << s << '\n'; };
    const RunRecord rec = run_experiment(config, progress);

    std::cout << name << ": " << (rec.failures.empty() ? "ok" : "FAILED") << ", record "
              << config.out_dir << "/run_record.json\n";
    if (rec.json.contains("summary") && !rec.json["summary"].empty()) std::cout << rec.json["summary"].dump(2) << '\n';
    for (const auto& f : rec.failures) std::cerr << "failure: " << f << '\n';
    return rec.exit_code();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cavity-QED reflection of coherent pulses and cat-state generation"};
    app.set_version_flag("--version", cavcat::version());
    app.require_subcommand(1);

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "single reflection run with trajectory and envelopes"},
        {"fig2", "input and output pulse shapes"},
        {"fig3", "fidelity versus |alpha|^2 without spontaneous emission"},
        {"fig4a", "fidelity versus |alpha|^2 with gamma_s = kappa"},
        {"fig4b", "fidelity versus g at fixed output |alpha_1|^2"},
        {"protocol", "multipartite or multidimensional cat-state protocol"},
        {"wigner", "Wigner function of one mode of a cat state"},
    };
    std::map<std::string, Command> cmds;
    for (const auto& [name, help] : commands) {
        Command& c = cmds[name];
        c.app = app.add_subcommand(name, help);
        add_options(c);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    for (auto& [name, c] : cmds) {
        if (!c.app->parsed()) continue;
        try {
            return run(name, c);
        } catch (const cavcat::ConfigError& e) {
            std::cerr << "configuration error: " << e.what() << '\n';
            return kExitConfig;
        } catch (const cavcat::NumericalError& e) {
            std::cerr << "numerical error: " << e.what() << '\n';
            return kExitNumerical;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitNumerical;
        }
    }
    return kExitConfig;
}
