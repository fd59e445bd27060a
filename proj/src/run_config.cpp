#include "cavcat/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

double parse_number(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("'" + text + "' is not a number");
    }
    if (used != text.size()) throw ConfigError("'" + text + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    if (!text.empty() && text.back() == sep) parts.emplace_back();
    return parts;
}

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
    try {
        return j.get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

std::vector<double> number_list(const nlohmann::json& j, const std::string& key) {
    if (j.is_number()) return {j.get<double>()};
    if (j.is_string()) return parse_number_list(j.get<std::string>());
    if (j.is_array()) return get_as<std::vector<double>>(j, key);
    if (j.is_object()) {
        if (!j.contains("start") || !j.contains("stop") || !j.contains("points"))
            throw ConfigError("range for '" + key + "' needs start, stop and points");
        return linspace(get_as<double>(j["start"], key), get_as<double>(j["stop"], key), get_as<int>(j["points"], key));
    }
    throw ConfigError("config key '" + key + "' must be a number, list or range");
}

template <class Proj>
std::vector<double> distinct(const std::vector<Curve>& curves, Proj proj) {
    std::vector<double> out;
    for (const auto& c : curves)
        if (std::find(out.begin(), out.end(), proj(c)) == out.end()) out.push_back(proj(c));
    return out;
}

std::optional<Outcome> parse_postselect(const std::string& s) {
    if (s == "+" || s == "plus") return Outcome::plus;
    if (s == "-" || s == "minus") return Outcome::minus;
    if (s == "none") return std::nullopt;
    throw ConfigError("postselect must be +, - or none");
}

} // namespace

const char* version() noexcept { return CAVCAT_VERSION; }

std::string to_string(Experiment e) {
    switch (e) {
    case Experiment::simulate: return "simulate";
    case Experiment::fig2: return "fig2";
    case Experiment::fig3: return "fig3";
    case Experiment::fig4a: return "fig4a";
    case Experiment::fig4b: return "fig4b";
    case Experiment::protocol: return "protocol";
    case Experiment::wigner: return "wigner";
    }
    return "unknown";
}

Experiment experiment_from_string(const std::string& s) {
    for (Experiment e : {Experiment::simulate, Experiment::fig2, Experiment::fig3, Experiment::fig4a, Experiment::fig4b,
                         Experiment::protocol, Experiment::wigner})
        if (to_string(e) == s) return e;
    throw ConfigError("unknown experiment '" + s + "'");
}

std::vector<double> linspace(double start, double stop, int points) {
    if (points < 1) throw ConfigError("a range needs at least one point");
    if (points == 1) return {start};
    if (!(stop > start)) throw ConfigError("range stop must exceed start");
    std::vector<double> v;
    for (int i = 0; i < points; ++i) v.push_back(start + (stop - start) * i / (points - 1));
    return v;
}

std::vector<double> parse_number_list(const std::string& text) {
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw ConfigError("range '" + text + "' must read start:stop:points");
        const double n = parse_number(parts[2]);
        if (n != std::floor(n)) throw ConfigError("range point count must be an integer");
        return linspace(parse_number(parts[0]), parse_number(parts[1]), static_cast<int>(n));
    }
    std::vector<double> v;
    for (const auto& p : split(text, ',')) v.push_back(parse_number(p));
    if (v.empty()) throw ConfigError("empty number list");
    return v;
}

cplx parse_complex(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() == 1) return {parse_number(parts[0]), 0.0};
    if (parts.size() == 2) return {parse_number(parts[0]), parse_number(parts[1])};
    throw ConfigError("complex value '" + text + "' must read re or re,im");
}

std::vector<Curve> curve_grid(const std::vector<double>& g, const std::vector<double>& kappa_t) {
    std::vector<Curve> c;
    for (double x : g)
        for (double t : kappa_t) c.push_back(Curve{x, t});
    return c;
}

RunConfig RunConfig::defaults(Experiment e) {
    RunConfig c;
    c.experiment = e;
    c.curves = {{6.0, 210.0}};
    c.alpha_sq = {1.0};
    switch (e) {
    case Experiment::simulate: break;
    case Experiment::fig2: c.curves = {{3.0, 210.0}, {6.0, 210.0}}; break;
    case Experiment::fig3:
        c.curves = {{3.0, 210.0}, {6.0, 210.0}, {6.0, 100.0}, {6.0, 400.0}};
        c.gamma_s = 0.0;
        c.alpha_sq = linspace(0.0, 25.0, 26);
        break;
    case Experiment::fig4a:
        c.curves = {{3.0, 210.0}, {6.0, 210.0}, {10.0, 210.0}};
        c.alpha_sq = linspace(0.0, 16.0, 26);
        break;
    case Experiment::fig4b:
        c.curves = curve_grid(linspace(1.0, 12.0, 23), {210.0});
        c.targets = {1.0, 3.0};
        break;
    case Experiment::protocol:
    case Experiment::wigner:
        // only read by the simulated noise channel
        c.curves = {{6.0, 210.0}};
        break;
    }
    return c;
}

void RunConfig::validate() const {
    const bool reflection = experiment != Experiment::protocol && experiment != Experiment::wigner;
    const bool simulated_noise = !reflection && noise == "simulated";
    if (reflection || simulated_noise) {
        if (curves.empty()) throw ConfigError("no (g, kappa T) points configured");
        for (const auto& c : curves) {
            if (!(c.g >= 0.0)) throw ConfigError("g must be non-negative");
            if (!(c.kappa_t > 0.0)) throw ConfigError("kappa T must be positive");
        }
        if (!(gamma_s >= 0.0)) throw ConfigError("gamma_s must be non-negative");
        if (fock_cutoff < 2) throw ConfigError("Fock cutoff must be at least 2");
        if (max_cutoff < fock_cutoff) throw ConfigError("max cutoff is below the starting cutoff");
        if (!(dt >= 0.0)) throw ConfigError("dt must be non-negative (0 selects the stability bound)");
        if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
        if (margin && !(*margin >= 0.0)) throw ConfigError("grid margin must be non-negative");
    }
    if (reflection && experiment != Experiment::fig4b) {
        if (alpha_sq.empty()) throw ConfigError("no |alpha|^2 values configured");
        for (double a : alpha_sq)
            if (!(a >= 0.0)) throw ConfigError("|alpha|^2 must be non-negative");
    }
    if (experiment == Experiment::fig3 && gamma_s != 0.0) throw ConfigError("fig3 is defined at gamma_s = 0");
    if (experiment == Experiment::fig4a || experiment == Experiment::fig4b) {
        if (gamma_s != 1.0) throw ConfigError(to_string(experiment) + " is defined at gamma_s = kappa");
        for (const auto& c : curves)
            if (c.kappa_t != 210.0) throw ConfigError(to_string(experiment) + " is defined at kappa T = 210");
    }
    if (experiment == Experiment::fig4b) {
        if (targets.empty()) throw ConfigError("fig4b needs at least one target |alpha_1|^2");
        for (double t : targets)
            if (!(t > 0.0)) throw ConfigError("target |alpha_1|^2 must be positive");
        if (!(target_tolerance > 0.0)) throw ConfigError("target tolerance must be positive");
    }
    if (!reflection) {
        if (protocol != "multidimensional" && protocol != "multipartite" && protocol != "script")
            throw ConfigError("protocol must be multidimensional, multipartite or script");
        if (protocol == "script" && script.empty()) throw ConfigError("protocol 'script' needs a script file");
        if (rounds < 1) throw ConfigError("rounds must be at least 1");
        if (n_pulses < 1) throw ConfigError("n_pulses must be at least 1");
        if (noise != "ideal" && noise != "lossy" && noise != "simulated")
            throw ConfigError("noise must be ideal, lossy or simulated");
        if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
        if (simulated_noise && curves.size() != 1) throw ConfigError("simulated noise needs exactly one (g, kappa T)");
    }
    if (experiment == Experiment::wigner) {
        if (points < 2) throw ConfigError("Wigner grid needs at least 2 points per axis");
        if (!(extent > 0.0)) throw ConfigError("Wigner grid extent must be positive");
    }
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (out_dir.empty()) throw ConfigError("output directory must not be empty");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json c = nlohmann::json::array();
    for (const auto& x : curves) c.push_back({x.g, x.kappa_t});
    nlohmann::json j = {{"experiment", to_string(experiment)},
                        {"curves", c},
                        {"kappa", 1.0},
                        {"gamma_s", gamma_s},
                        {"alpha_sq", alpha_sq},
                        {"targets", targets},
                        {"target_tolerance", target_tolerance},
                        {"fock_cutoff", fock_cutoff},
                        {"max_cutoff", max_cutoff},
                        {"dt", dt},
                        {"spacing", spacing},
                        {"margin", margin ? nlohmann::json(*margin) : nlohmann::json("max(20, T/10)")},
                        {"protocol", protocol},
                        {"rounds", rounds},
                        {"n_pulses", n_pulses},
                        {"alpha", {alpha.real(), alpha.imag()}},
                        {"noise", noise},
                        {"eta", eta},
                        {"shapes", shapes},
                        {"postselect", postselect ? to_string(*postselect) : "none"},
                        {"script", script},
                        {"state", state},
                        {"mode", mode},
                        {"extent", extent},
                        {"points", points},
                        {"out", out_dir},
                        {"jobs", jobs},
                        {"deterministic", true}};
    return j;
}

void apply_json(RunConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (j.contains("experiment") &&
        experiment_from_string(get_as<std::string>(j["experiment"], "experiment")) != c.experiment)
        throw ConfigError("config file is for experiment '" + j["experiment"].get<std::string>() + "', not '" +
                          to_string(c.experiment) + "'");
    for (const auto& [key, v] : j.items()) {
        if (key == "experiment") continue;
        if (key == "curves") {
            c.curves.clear();
            for (const auto& p : get_as<std::vector<std::vector<double>>>(v, key)) {
                if (p.size() != 2) throw ConfigError("curves entries must be [g, kappa_t] pairs");
                c.curves.push_back(Curve{p[0], p[1]});
            }
        } else if (key == "g") {
            c.curves = curve_grid(number_list(v, key), distinct(c.curves, [](const Curve& x) { return x.kappa_t; }));
        } else if (key == "kappa_t") {
            c.curves = curve_grid(distinct(c.curves, [](const Curve& x) { return x.g; }), number_list(v, key));
        } else if (key == "gamma_s") c.gamma_s = get_as<double>(v, key);
        else if (key == "alpha_sq") c.alpha_sq = number_list(v, key);
        else if (key == "targets") c.targets = number_list(v, key);
        else if (key == "target_tolerance") c.target_tolerance = get_as<double>(v, key);
        else if (key == "fock_cutoff") c.fock_cutoff = get_as<int>(v, key);
        else if (key == "max_cutoff") c.max_cutoff = get_as<int>(v, key);
        else if (key == "dt") c.dt = get_as<double>(v, key);
        else if (key == "spacing") c.spacing = get_as<double>(v, key);
        else if (key == "margin") c.margin = get_as<double>(v, key);
        else if (key == "protocol") c.protocol = get_as<std::string>(v, key);
        else if (key == "rounds") c.rounds = get_as<int>(v, key);
        else if (key == "n_pulses") c.n_pulses = get_as<int>(v, key);
        else if (key == "alpha") {
            if (v.is_array()) {
                const auto a = get_as<std::vector<double>>(v, key);
                if (a.size() != 2) throw ConfigError("alpha must be a number or [re, im]");
                c.alpha = {a[0], a[1]};
            } else {
                c.alpha = get_as<double>(v, key);
            }
        } else if (key == "noise") c.noise = get_as<std::string>(v, key);
        else if (key == "eta") c.eta = get_as<double>(v, key);
        else if (key == "shapes") c.shapes = get_as<bool>(v, key);
        else if (key == "postselect") c.postselect = parse_postselect(get_as<std::string>(v, key));
        else if (key == "script") c.script = get_as<std::string>(v, key);
        else if (key == "state") c.state = get_as<std::string>(v, key);
        else if (key == "mode") c.mode = get_as<std::string>(v, key);
        else if (key == "extent") c.extent = get_as<double>(v, key);
        else if (key == "points") c.points = get_as<int>(v, key);
        else if (key == "out") c.out_dir = get_as<std::string>(v, key);
        else if (key == "jobs") c.jobs = get_as<int>(v, key);
        else throw ConfigError("unknown config key '" + key + "'");
    }
}

void apply_config_file(RunConfig& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    apply_json(config, j);
}

} // namespace cavcat
