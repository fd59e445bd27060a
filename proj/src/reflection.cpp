#include "cavcat/reflection.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

// Slowest amplitude decay rate of the linearized atom-cavity system: the poles
// of r(w) sit at s = -i w with s^2 + s (kappa + gamma)/2 + kappa gamma/4 + g^2 = 0.
double slowest_decay_rate(double g, double kappa, double gamma_s) {
    if (g == 0.0) return 0.5 * kappa;
    const double mean = 0.25 * (kappa + gamma_s);
    const double disc = std::pow(0.25 * (kappa - gamma_s), 2) - g * g;
    if (disc <= 0.0) return mean;
    return mean - std::sqrt(disc);
}

} // namespace

OutputMode extract_output_mode(const Trajectory& traj, const SystemParams& params) {
    const ComplexEnvelope& f_in = params.pulse;
    if (!(traj.grid == f_in.grid())) throw ConfigError("trajectory and pulse are on different grids");
    if (!(params.kappa > 0.0)) throw ConfigError("output extraction needs kappa > 0");
    if (traj.diagnostics.ring_down_residual > 1e-8)
        throw NumericalError("cavity has not rung down by the end of the grid (residual " +
                             std::to_string(traj.diagnostics.ring_down_residual) + "); extend the grid margin");

    const double sk = std::sqrt(params.kappa);
    std::vector<cplx> u(f_in.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = params.alpha * f_in[i] + sk * traj.a_c_expect[i];
    ComplexEnvelope out(f_in.grid(), std::move(u));

    const double n2 = out.norm_squared();
    if (!(n2 > 0.0)) throw ConfigError("no output field: alpha f_in + sqrt(kappa) <a_c> vanishes");
    const cplx proj = inner_product(f_in, out);
    const double phase = std::abs(proj) > 0.0 ? std::arg(proj) : 0.0;
    const cplx alpha_out = std::polar(std::sqrt(n2), phase);
    return OutputMode{alpha_out, out.scaled(1.0 / alpha_out)};
}

cplx weak_drive_response(double g, double kappa, double gamma_s, double omega) {
    const cplx i{0.0, 1.0};
    const cplx atom = 0.5 * gamma_s - i * omega;
    cplx denom = 0.5 * kappa - i * omega;
    if (g != 0.0) denom += g * g / atom;
    return 1.0 - kappa / denom;
}

ComplexEnvelope weak_drive_filter(const ComplexEnvelope& f_in, double g, double kappa, double gamma_s) {
    const double rate = slowest_decay_rate(g, kappa, gamma_s);
    const double extent = f_in.grid().t_end() - f_in.grid().t_start();
    const double ring_down = rate > 0.0 ? std::min(20.0 / rate, 20.0 * extent) : 20.0 * extent;
    return apply_causal_filter(
        f_in, [=](double w) { return weak_drive_response(g, kappa, gamma_s, w); }, cplx{1.0, 0.0}, ring_down);
}

ReflectionOutcome compute_mismatch_figures(ReflectionOutcome outcome) {
    outcome.xi1 = mismatch(outcome.f_in, outcome.f_out_1);
    outcome.xi0 = mismatch(outcome.f_in, -outcome.f_out_0);
    return outcome;
}

ReflectionOutcome vacuum_outcome(const SystemParams& params) {
    params.validate();
    ReflectionOutcome o{cplx{}, cplx{}, params.pulse, params.pulse, empty_cavity_reflect(params.pulse, params.kappa),
                        cplx{}, cplx{}, 0.0, params, EvolutionDiagnostics{}, 0.0, {}};
    o.diagnostics.fock_cutoff = params.fock_cutoff;
    o.log.push_back("alpha = 0: no photons reflected, closed-form vacuum outcome");
    return compute_mismatch_figures(std::move(o));
}

ReflectionOutcome simulate_reflection(const SystemParams& params, int max_cutoff, std::optional<Trajectory>* trajectory) {
    if (params.alpha == cplx{}) return vacuum_outcome(params);
    std::vector<std::string> log;
    const Trajectory traj = evolve_reflection(params, max_cutoff, &log);
    SystemParams used = params;
    used.fock_cutoff = traj.diagnostics.fock_cutoff;
    const OutputMode mode = extract_output_mode(traj, used);
    ReflectionOutcome o{params.alpha,
                        mode.alpha_out,
                        params.pulse,
                        mode.f_out,
                        empty_cavity_reflect(params.pulse, params.kappa),
                        cplx{},
                        cplx{},
                        1.0 - std::norm(mode.alpha_out) / std::norm(params.alpha),
                        used,
                        traj.diagnostics,
                        coherence_diagnostic(traj),
                        std::move(log)};
    if (trajectory) *trajectory = traj;
    return compute_mismatch_figures(std::move(o));
}

double fidelity_eq7(cplx alpha, cplx xi0, double eta) {
    const double n = std::norm(alpha);
    const cplx sum = std::exp(-n * (1.0 - std::sqrt(1.0 - eta))) + std::exp(-n * xi0);
    return std::norm(0.5 * sum);
}

FidelityReport fidelity_exact(const ReflectionOutcome& o) {
    const double n_in = std::norm(o.alpha_in);
    const double n_out = std::norm(o.alpha_out);
    FidelityReport r;
    // <-alpha f_in | alpha f_out^(0)>
    r.branch_overlap_0 = std::exp(-n_in * o.xi0);
    // <alpha f_in | alpha_1 f_out^(1)> times the vacuum overlap of the loss mode
    const cplx shape = inner_product(o.f_in, o.f_out_1);
    r.branch_overlap_1 = std::exp(-0.5 * n_in - 0.5 * n_out + std::conj(o.alpha_in) * o.alpha_out * shape -
                                  0.5 * n_in * o.eta);
    r.F_exact = std::clamp(std::norm(0.5 * (r.branch_overlap_0 + r.branch_overlap_1)), 0.0, 1.0);
    r.F_eq7 = fidelity_eq7(o.alpha_in, o.xi0, o.eta);
    return r;
}

nlohmann::json to_json(const ReflectionOutcome& o, const FidelityReport& f, const std::string& envelope_prefix) {
    nlohmann::json j;
    j["alpha_in"] = complex_json(o.alpha_in);
    j["alpha_in_sq"] = std::norm(o.alpha_in);
    j["alpha_out"] = complex_json(o.alpha_out);
    j["alpha_out_sq"] = std::norm(o.alpha_out);
    j["xi0"] = complex_json(o.xi0);
    j["xi1"] = complex_json(o.xi1);
    j["eta"] = o.eta;
    j["F_exact"] = f.F_exact;
    j["F_eq7"] = f.F_eq7;
    j["branch_overlap_0"] = complex_json(f.branch_overlap_0);
    j["branch_overlap_1"] = complex_json(f.branch_overlap_1);
    j["params"] = {{"g", o.params.g},
                   {"kappa", o.params.kappa},
                   {"gamma_s", o.params.gamma_s},
                   {"kappa_t", o.params.duration},
                   {"fock_cutoff", o.params.fock_cutoff},
                   {"dt", o.params.dt},
                   {"grid", {{"t_start", o.f_in.grid().t_start()},
                             {"t_end", o.f_in.grid().t_end()},
                             {"n_samples", o.f_in.grid().size()}}}};
    j["diagnostics"] = {{"fock_cutoff", o.diagnostics.fock_cutoff},
                        {"step", o.diagnostics.step},
                        {"steps", o.diagnostics.steps},
                        {"max_trace_drift", o.diagnostics.max_trace_drift},
                        {"max_hermiticity_error", o.diagnostics.max_hermiticity_error},
                        {"min_eigenvalue", o.diagnostics.min_eigenvalue},
                        {"max_top_fock_pop", o.diagnostics.max_top_fock_pop},
                        {"ring_down_residual", o.diagnostics.ring_down_residual},
                        {"coherence", o.coherence}};
    j["log"] = o.log;
    if (!envelope_prefix.empty()) {
        j["envelopes"] = {{"f_in", envelope_prefix + "f_in.csv"},
                          {"f_out_0", envelope_prefix + "f_out_0.csv"},
                          {"f_out_1", envelope_prefix + "f_out_1.csv"}};
    }
    return j;
}

} // namespace cavcat
