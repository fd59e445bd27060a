// Output-mode extraction, mismatch and loss figures, and
// cat-state fidelity for one reflection of a coherent pulse.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cavcat/master_equation.hpp"
#include "cavcat/pulse.hpp"

namespace cavcat {

struct OutputMode {
    cplx alpha_out;          // alpha_1
    ComplexEnvelope f_out;   // normalized, with <f_in|f_out> real and positive
};

/// Forms u(t) = alpha f_in(t) + sqrt(kappa) <a_c(t)> and splits it into an
/// amplitude and a normalized shape. Throws NumericalError when the cavity has
/// not rung down by the end of the grid and ConfigError when there is no output.
OutputMode extract_output_mode(const Trajectory& traj, const SystemParams& params);

/// Linear response of the atom-cavity system to a weak drive,
/// r(w) = 1 - kappa / (kappa/2 - i w + g^2 / (gamma_s/2 - i w)).
cplx weak_drive_response(double g, double kappa, double gamma_s, double omega);

/// f_in filtered by r(w): the weak-drive prediction of alpha_1 f_out^(1) / alpha.
ComplexEnvelope weak_drive_filter(const ComplexEnvelope& f_in, double g, double kappa, double gamma_s);

struct ReflectionOutcome {
    cplx alpha_in;
    cplx alpha_out;
    ComplexEnvelope f_in;
    ComplexEnvelope f_out_1;
    ComplexEnvelope f_out_0;
    cplx xi0;   // 1 - <f_in| -f_out^(0)>
    cplx xi1;   // 1 - <f_in| f_out^(1)>
    double eta; // 1 - |alpha_1|^2 / |alpha|^2
    SystemParams params;
    EvolutionDiagnostics diagnostics;
    double coherence = 0.0;
    std::vector<std::string> log;
};

/// Fills xi0 and xi1 from the envelopes already present in `outcome`.
ReflectionOutcome compute_mismatch_figures(ReflectionOutcome outcome);

/// Full pipeline: evolve with the atom in |1>, extract the output mode,
/// reflect f_in off the empty cavity and compute the figures of merit.
/// The trajectory is copied to `trajectory` when given (left untouched for alpha = 0).
ReflectionOutcome simulate_reflection(const SystemParams& params, int max_cutoff = 40,
                                      std::optional<Trajectory>* trajectory = nullptr);

/// Closed form for alpha = 0, where nothing is reflected and F = 1.
ReflectionOutcome vacuum_outcome(const SystemParams& params);

/// |(exp(-|a|^2 (1 - sqrt(1 - eta))) + exp(-|a|^2 xi0)) / 2|^2.
double fidelity_eq7(cplx alpha, cplx xi0, double eta);

struct FidelityReport {
    double F_exact = 0.0;
    double F_eq7 = 0.0;
    cplx branch_overlap_0;
    cplx branch_overlap_1;
};

/// Overlap of the ideal entangled cat with the simulated (purified) state,
/// keeping the shape mismatch of both branches.
FidelityReport fidelity_exact(const ReflectionOutcome& outcome);

/// JSON record of all scalar fields; envelopes are referenced by file name.
nlohmann::json to_json(const ReflectionOutcome& outcome, const FidelityReport& fidelity,
                       const std::string& envelope_prefix = {});

} // namespace cavcat
