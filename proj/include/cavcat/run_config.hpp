// Experiment configuration: defaults per experiment, JSON config files and
// command-line overrides.
#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavcat/cat_state.hpp"

namespace cavcat {

const char* version() noexcept;

enum class Experiment { simulate, fig2, fig3, fig4a, fig4b, protocol, wigner };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);

/// One (g/kappa, kappa T) pair of a figure.
struct Curve {
    double g = 0.0;
    double kappa_t = 0.0;
    auto operator<=>(const Curve&) const = default;
};

/// All rates in units of kappa = 1.
struct RunConfig {
    Experiment experiment = Experiment::simulate;

    std::vector<Curve> curves;
    double gamma_s = 1.0;
    std::vector<double> alpha_sq;
    /// Fig. 4b output photon numbers |alpha_1|^2.
    std::vector<double> targets;
    double target_tolerance = 1e-3;

    /// Starting cutoff; escalated in steps of 5 up to max_cutoff.
    int fock_cutoff = 15;
    int max_cutoff = 40;
    /// Integration step; 0 selects the stability bound 0.05 / max(kappa, g, gamma_s).
    double dt = 0.0;
    double spacing = kDefaultSpacing;
    /// Time after T; empty selects max(20, T/10).
    std::optional<double> margin;

    std::string protocol = "multidimensional";
    int rounds = 2;
    int n_pulses = 2;
    cplx alpha{1.5, 0.0};
    /// ideal, lossy or simulated.
    std::string noise = "ideal";
    double eta = 0.0;
    bool shapes = true;
    std::optional<Outcome> postselect = Outcome::plus;
    std::string script;

    std::string state;
    std::string mode = "pulse";
    double extent = 5.0;
    int points = 101;

    std::string out_dir = "out";
    int jobs = 1;

    static RunConfig defaults(Experiment e);
    /// Throws ConfigError.
    void validate() const;
    nlohmann::json to_json() const;
};

/// Applies the keys of a JSON object on top of `config`; unknown keys are errors.
void apply_json(RunConfig& config, const nlohmann::json& j);
/// Reads a JSON config file and applies it.
void apply_config_file(RunConfig& config, const std::string& path);

/// "1,2,3" or "start:stop:points" (inclusive, evenly spaced).
std::vector<double> parse_number_list(const std::string& text);
/// "1.5" or "1.5,0.3" for re,im.
cplx parse_complex(const std::string& text);
std::vector<double> linspace(double start, double stop, int points);

/// Cartesian product of the g and kappa T lists.
std::vector<Curve> curve_grid(const std::vector<double>& g, const std::vector<double>& kappa_t);

} // namespace cavcat
