// Driven Jaynes-Cummings master equation on the
// truncated atom (x) Fock space.
//
//   d rho/dt = -i [H, rho] + kappa D[a] rho + gamma_s D[sigma_-] rho
//   H = g (sigma_+ a + sigma_- a^dag) + i sqrt(kappa) (eps* a - eps a^dag),  eps(t) = alpha f_in(t)
//
// The drive phase is fixed so that the mean field obeys the Langevin equation
//   d<a>/dt = -i g <sigma_-> - (kappa/2) <a> - sqrt(kappa) alpha f_in(t)
// for any complex alpha.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cavcat/pulse.hpp"

namespace cavcat {

/// Atomic levels: |0> is decoupled from the cavity, |1> <-> |e> is the cavity transition.
enum class Level { uncoupled, coupled, excited };

/// Composite space layout. Index = level_slot * (N + 1) + n (atom-major).
/// With two levels the slots are {|1>, |e>}; with three, {|0>, |1>, |e>}.
struct HilbertDims {
    int atom_levels = 2;
    int fock_cutoff = 15;

    void validate() const;
    int fock_dim() const noexcept { return fock_cutoff + 1; }
    int dimension() const noexcept { return atom_levels * fock_dim(); }
    bool has_level(Level l) const noexcept { return l != Level::uncoupled || atom_levels == 3; }
    int slot(Level l) const;
    int index(Level l, int n) const;
};

using Matrix = Eigen::MatrixXcd;

struct OperatorSet {
    Matrix a;            // cavity annihilation, identity on the atom
    Matrix a_dag;
    Matrix sigma_minus;  // |1><e|, identity on the field
    Matrix sigma_plus;   // |e><1|
    Matrix coupling;     // sigma_+ a + sigma_- a^dag
};

OperatorSet build_operators(const HilbertDims& dims);

class DensityMatrix {
public:
    DensityMatrix(HilbertDims dims, Matrix elements);

    /// |level> (x) |n><n|.
    static DensityMatrix product_state(const HilbertDims& dims, Level level, int photons = 0);

    const HilbertDims& dims() const noexcept { return dims_; }
    const Matrix& elements() const noexcept { return rho_; }

    double trace_error() const;
    double hermiticity_error() const;
    double min_eigenvalue() const;
    /// Throws NumericalError when any invariant exceeds the given tolerances.
    void check(double trace_tol = 1e-8, double herm_tol = 1e-10, double eig_floor = -1e-8) const;

private:
    HilbertDims dims_;
    Matrix rho_;
};

struct SystemParams {
    double g = 0.0;
    double kappa = 1.0;
    double gamma_s = 0.0;
    cplx alpha{0.0, 0.0};
    /// f_in sampled on the output grid; the trajectory is reported on this grid.
    ComplexEnvelope pulse = ComplexEnvelope::zeros(TimeGrid(0.0, 1.0, 2));
    /// Optional continuous form of f_in; cubic interpolation of `pulse` otherwise.
    PulseShape drive_shape;
    /// Pulse duration T, recorded for reporting only.
    double duration = 0.0;
    int fock_cutoff = 15;
    /// Maximum integration step; rounded down to divide the grid spacing.
    double dt = 0.05;

    void validate() const;
    /// Largest step allowed for the given rates, 0.05 / max(kappa, g, gamma_s).
    double max_stable_step() const;
    /// Step actually used: spacing / ceil(spacing / dt).
    double effective_step() const;
};

/// SystemParams for a Gaussian pulse of duration T with dt at the stability bound.
/// The grid margin defaults to default_margin(T).
SystemParams gaussian_params(double g, double gamma_s, double kappa_t, cplx alpha,
                             double spacing = kDefaultSpacing, int fock_cutoff = 15,
                             std::optional<double> margin = {});

struct EvolutionDiagnostics {
    int fock_cutoff = 0;
    double step = 0.0;
    std::size_t steps = 0;
    double max_trace_drift = 0.0;
    double max_hermiticity_error = 0.0;
    double min_eigenvalue = 0.0;
    double max_top_fock_pop = 0.0;
    /// Output-field energy still stored in the cavity at the end of the grid,
    /// relative to the input energy |alpha|^2 (1 when alpha = 0 and the cavity is not empty).
    double ring_down_residual = 0.0;
};

struct Trajectory {
    TimeGrid grid;
    std::vector<cplx> a_c_expect;
    std::vector<double> photon_number;
    std::vector<double> excited_pop;
    std::vector<double> top_fock_pop;
    EvolutionDiagnostics diagnostics;
    DensityMatrix final_state;
};

struct EvolveOptions {
    /// Abort when the highest Fock level ever holds more population than this.
    double max_top_fock_pop = 1e-6;
    /// Abort when |tr rho - 1| exceeds this.
    double max_trace_drift = 1e-6;
    /// Number of evenly spaced samples at which the spectrum of rho is checked.
    int eigen_checks = 10;
};

/// Integrates the master equation with fixed-step RK4 from `initial`.
/// Throws CutoffError on a Fock-cutoff breach and NumericalError on trace drift.
Trajectory evolve(const SystemParams& params, const DensityMatrix& initial, const EvolveOptions& options = {});

/// Atom in |1>, cavity empty, raising the cutoff in steps of 5 up to `max_cutoff`
/// while it is breached. Every escalation is appended to `log` when given.
Trajectory evolve_reflection(SystemParams params, int max_cutoff = 40, std::vector<std::string>* log = nullptr);

/// max_t (<a^dag a> - |<a>|^2).
double coherence_diagnostic(const Trajectory& traj);

/// CSV "t,re_a,im_a,n_phot,p_e,p_topfock".
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

} // namespace cavcat
