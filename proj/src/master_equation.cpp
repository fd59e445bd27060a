#include "cavcat/master_equation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "cavcat/error.hpp"

namespace cavcat {

// ---------------------------------------------------------------------------
// Hilbert space

void HilbertDims::validate() const {
    if (atom_levels != 2 && atom_levels != 3) throw ConfigError("atom_levels must be 2 or 3");
    if (fock_cutoff < 2) throw ConfigError("Fock cutoff must be at least 2");
}

int HilbertDims::slot(Level l) const {
    if (!has_level(l)) throw ConfigError("level |0> is not part of a two-level space");
    const int offset = atom_levels == 3 ? 1 : 0;
    switch (l) {
    case Level::uncoupled: return 0;
    case Level::coupled: return offset;
    case Level::excited: return offset + 1;
    }
    return -1;
}

int HilbertDims::index(Level l, int n) const {
    if (n < 0 || n > fock_cutoff) throw ConfigError("photon number outside the truncated space");
    return slot(l) * fock_dim() + n;
}

OperatorSet build_operators(const HilbertDims& dims) {
    dims.validate();
    const int d = dims.dimension();
    const int f = dims.fock_dim();
    OperatorSet ops;
    ops.a = Matrix::Zero(d, d);
    ops.sigma_minus = Matrix::Zero(d, d);
    for (int s = 0; s < dims.atom_levels; ++s)
        for (int n = 1; n < f; ++n) ops.a(s * f + n - 1, s * f + n) = std::sqrt(static_cast<double>(n));
    for (int n = 0; n < f; ++n)
        ops.sigma_minus(dims.index(Level::coupled, n), dims.index(Level::excited, n)) = 1.0;
    ops.a_dag = ops.a.adjoint();
    ops.sigma_plus = ops.sigma_minus.adjoint();
    ops.coupling = ops.sigma_plus * ops.a + ops.sigma_minus * ops.a_dag;
    return ops;
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(HilbertDims dims, Matrix elements) : dims_(dims), rho_(std::move(elements)) {
    dims_.validate();
    if (rho_.rows() != dims_.dimension() || rho_.cols() != dims_.dimension())
        throw ConfigError("density matrix size does not match the Hilbert space");
}

DensityMatrix DensityMatrix::product_state(const HilbertDims& dims, Level level, int photons) {
    dims.validate();
    Matrix rho = Matrix::Zero(dims.dimension(), dims.dimension());
    const int i = dims.index(level, photons);
    rho(i, i) = 1.0;
    return DensityMatrix(dims, std::move(rho));
}

double DensityMatrix::trace_error() const { return std::abs(rho_.trace() - cplx{1.0, 0.0}); }

double DensityMatrix::hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }

double DensityMatrix::min_eigenvalue() const {
    const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

void DensityMatrix::check(double trace_tol, double herm_tol, double eig_floor) const {
    if (trace_error() > trace_tol) throw NumericalError("density matrix trace differs from 1");
    if (hermiticity_error() > herm_tol) throw NumericalError("density matrix is not Hermitian");
    if (min_eigenvalue() < eig_floor) throw NumericalError("density matrix has a negative eigenvalue");
}

// ---------------------------------------------------------------------------
// Parameters

void SystemParams::validate() const {
    if (!(g >= 0.0) || !(kappa >= 0.0) || !(gamma_s >= 0.0)) throw ConfigError("rates must be non-negative");
    if (fock_cutoff < 2) throw ConfigError("Fock cutoff must be at least 2");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (dt > max_stable_step() * (1.0 + 1e-12))
        throw ConfigError("dt = " + std::to_string(dt) + " exceeds the stability bound 0.05/max(kappa, g, gamma_s) = " +
                          std::to_string(max_stable_step()));
    if (!std::isfinite(alpha.real()) || !std::isfinite(alpha.imag())) throw ConfigError("alpha must be finite");
}

double SystemParams::max_stable_step() const {
    const double rate = std::max({kappa, g, gamma_s});
    return rate > 0.0 ? 0.05 / rate : std::numeric_limits<double>::infinity();
}

double SystemParams::effective_step() const {
    const double h = pulse.grid().spacing();
    const double sub = std::ceil(h / dt * (1.0 - 1e-12));
    return h / std::max(sub, 1.0);
}

SystemParams gaussian_params(double g, double gamma_s, double kappa_t, cplx alpha, double spacing, int fock_cutoff,
                             std::optional<double> margin) {
    const TimeGrid grid = margin ? pulse_grid(kappa_t, spacing, *margin) : pulse_grid(kappa_t, spacing);
    const GaussianPulse shape = make_gaussian(kappa_t, grid);
    SystemParams p;
    p.g = g;
    p.kappa = 1.0;
    p.gamma_s = gamma_s;
    p.alpha = alpha;
    p.pulse = shape.sample(grid);
    p.drive_shape = shape;
    p.duration = kappa_t;
    p.fock_cutoff = fock_cutoff;
    p.dt = std::min(p.max_stable_step(), spacing);
    return p;
}

// ---------------------------------------------------------------------------
// Right-hand side

namespace {

class Liouvillian {
public:
    Liouvillian(const HilbertDims& dims, double g, double kappa, double gamma_s)
        : dims_(dims), g_(g), kappa_(kappa), gamma_(gamma_s), sqrt_kappa_(std::sqrt(kappa)),
          f_(dims.fock_dim()), levels_(dims.atom_levels), coupled_(dims.slot(Level::coupled)),
          excited_(dims.slot(Level::excited)), sq_(static_cast<std::size_t>(f_ + 1)) {
        for (int n = 0; n <= f_; ++n) sq_[static_cast<std::size_t>(n)] = std::sqrt(static_cast<double>(n));
        k_.resize(dims.dimension(), dims.dimension());
    }

    // out = L(eps) rho
    void apply(cplx eps, const Matrix& rho, Matrix& out) {
        const int d = dims_.dimension();
        const int N = f_ - 1;
        const cplx minus_i{0.0, -1.0};
        const cplx drive_down = sqrt_kappa_ * std::conj(eps); // coefficient of a
        const cplx drive_up = sqrt_kappa_ * eps;              // coefficient of a^dag

        // K = -i H_eff rho with H_eff = H - (i/2)(kappa a^dag a + gamma sigma_+ sigma_-)
        for (int c = 0; c < d; ++c) {
            const cplx* col = rho.data() + static_cast<std::ptrdiff_t>(c) * d;
            cplx* kcol = k_.data() + static_cast<std::ptrdiff_t>(c) * d;
            for (int l = 0; l < levels_; ++l) {
                const int base = l * f_;
                const double decay = l == excited_ ? gamma_ : 0.0;
                for (int n = 0; n <= N; ++n) {
                    const int r = base + n;
                    cplx v = -0.5 * (kappa_ * n + decay) * col[r];
                    if (n < N) v += drive_down * sq_[n + 1] * col[r + 1];
                    if (n > 0) v -= drive_up * sq_[n] * col[r - 1];
                    if (l == excited_ && n < N) v += minus_i * g_ * sq_[n + 1] * col[coupled_ * f_ + n + 1];
                    if (l == coupled_ && n > 0) v += minus_i * g_ * sq_[n] * col[excited_ * f_ + n - 1];
                    kcol[r] = v;
                }
            }
        }
        out.noalias() = k_ + k_.adjoint();

        // kappa a rho a^dag
        if (kappa_ > 0.0) {
            for (int l2 = 0; l2 < levels_; ++l2)
                for (int m = 0; m < N; ++m) {
                    const int c = l2 * f_ + m;
                    for (int l1 = 0; l1 < levels_; ++l1)
                        for (int n = 0; n < N; ++n) {
                            const int r = l1 * f_ + n;
                            out(r, c) += kappa_ * sq_[n + 1] * sq_[m + 1] * rho(r + 1, c + 1);
                        }
                }
        }
        // gamma sigma_- rho sigma_+
        if (gamma_ > 0.0) {
            for (int m = 0; m <= N; ++m)
                for (int n = 0; n <= N; ++n)
                    out(coupled_ * f_ + n, coupled_ * f_ + m) += gamma_ * rho(excited_ * f_ + n, excited_ * f_ + m);
        }
    }

private:
    HilbertDims dims_;
    double g_, kappa_, gamma_, sqrt_kappa_;
    int f_, levels_, coupled_, excited_;
    std::vector<double> sq_;
    Matrix k_;
};

struct Observables {
    cplx a;
    double photons;
    double excited;
    double top;
    double trace_drift;
};

Observables observe(const HilbertDims& dims, const Matrix& rho) {
    const int f = dims.fock_dim();
    const int N = dims.fock_cutoff;
    const int e = dims.slot(Level::excited);
    Observables o{};
    cplx tr{};
    for (int l = 0; l < dims.atom_levels; ++l) {
        for (int n = 0; n <= N; ++n) {
            const int r = l * f + n;
            const double p = rho(r, r).real();
            tr += rho(r, r);
            o.photons += n * p;
            if (l == e) o.excited += p;
            if (n == N) o.top += p;
            if (n < N) o.a += std::sqrt(static_cast<double>(n + 1)) * rho(r + 1, r);
        }
    }
    o.trace_drift = std::abs(tr - cplx{1.0, 0.0});
    return o;
}

} // namespace

// ---------------------------------------------------------------------------
// Evolution

Trajectory evolve(const SystemParams& params, const DensityMatrix& initial, const EvolveOptions& options) {
    params.validate();
    const HilbertDims dims = initial.dims();
    if (dims.fock_cutoff != params.fock_cutoff)
        throw ConfigError("initial state cutoff does not match SystemParams.fock_cutoff");
    initial.check();

    const TimeGrid& grid = params.pulse.grid();
    const PulseShape shape = params.drive_shape ? params.drive_shape : interpolate(params.pulse);
    const double h = params.effective_step();
    const auto substeps = static_cast<std::size_t>(std::llround(grid.spacing() / h));
    const cplx alpha = params.alpha;
    auto drive = [&](double t) { return alpha * shape(t); };

    Liouvillian rhs(dims, params.g, params.kappa, params.gamma_s);

    const std::size_t n = grid.size();
    Trajectory traj{grid, std::vector<cplx>(n), std::vector<double>(n), std::vector<double>(n),
                    std::vector<double>(n), EvolutionDiagnostics{}, initial};
    auto& diag = traj.diagnostics;
    diag.fock_cutoff = dims.fock_cutoff;
    diag.step = h;
    diag.min_eigenvalue = std::numeric_limits<double>::infinity();

    const int d = dims.dimension();
    Matrix rho = initial.elements();
    Matrix k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

    const int checks = std::max(options.eigen_checks, 2);
    std::vector<std::size_t> check_at;
    for (int k = 0; k < checks; ++k)
        check_at.push_back(static_cast<std::size_t>(
            std::llround(static_cast<double>(k) * static_cast<double>(n - 1) / static_cast<double>(checks - 1))));

    auto record = [&](std::size_t i) {
        const Observables o = observe(dims, rho);
        traj.a_c_expect[i] = o.a;
        traj.photon_number[i] = o.photons;
        traj.excited_pop[i] = o.excited;
        traj.top_fock_pop[i] = o.top;
        diag.max_trace_drift = std::max(diag.max_trace_drift, o.trace_drift);
        diag.max_top_fock_pop = std::max(diag.max_top_fock_pop, o.top);
        if (o.top > options.max_top_fock_pop)
            throw CutoffError("Fock cutoff " + std::to_string(dims.fock_cutoff) + " breached at t = " +
                                  std::to_string(grid.at(i)) + " (top-level population " + std::to_string(o.top) +
                                  "); increase the cutoff",
                              dims.fock_cutoff, o.top);
        if (o.trace_drift > options.max_trace_drift)
            throw NumericalError("trace drifted by " + std::to_string(o.trace_drift) + " at t = " +
                                 std::to_string(grid.at(i)) + "; reduce the integration step");
        if (std::binary_search(check_at.begin(), check_at.end(), i)) {
            diag.max_hermiticity_error = std::max(diag.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
            Eigen::SelfAdjointEigenSolver<Matrix> solver(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
            diag.min_eigenvalue = std::min(diag.min_eigenvalue, solver.eigenvalues().minCoeff());
        }
    };

    record(0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t0 = grid.at(i);
        for (std::size_t s = 0; s < substeps; ++s) {
            const double t = t0 + static_cast<double>(s) * h;
            const cplx e0 = drive(t);
            const cplx em = drive(t + 0.5 * h);
            const cplx e1 = drive(t + h);
            rhs.apply(e0, rho, k1);
            tmp = rho + (0.5 * h) * k1;
            rhs.apply(em, tmp, k2);
            tmp = rho + (0.5 * h) * k2;
            rhs.apply(em, tmp, k3);
            tmp = rho + h * k3;
            rhs.apply(e1, tmp, k4);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            ++diag.steps;
        }
        record(i + 1);
    }

    const double input_energy = std::norm(alpha);
    const double stored = std::norm(traj.a_c_expect.back());
    diag.ring_down_residual = input_energy > 0.0 ? stored / input_energy : traj.photon_number.back();
    traj.final_state = DensityMatrix(dims, std::move(rho));
    return traj;
}

Trajectory evolve_reflection(SystemParams params, int max_cutoff, std::vector<std::string>* log) {
    for (;;) {
        const HilbertDims dims{2, params.fock_cutoff};
        try {
            return evolve(params, DensityMatrix::product_state(dims, Level::coupled, 0));
        } catch (const CutoffError& e) {
            if (params.fock_cutoff + 5 > max_cutoff) throw;
            if (log)
                log->push_back("cutoff " + std::to_string(params.fock_cutoff) + " breached (top population " +
                               std::to_string(e.top_population()) + "), retrying with " +
                               std::to_string(params.fock_cutoff + 5));
            params.fock_cutoff += 5;
        }
    }
}

double coherence_diagnostic(const Trajectory& traj) {
    double m = 0.0;
    for (std::size_t i = 0; i < traj.photon_number.size(); ++i)
        m = std::max(m, traj.photon_number[i] - std::norm(traj.a_c_expect[i]));
    return m;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,re_a,im_a,n_phot,p_e,p_topfock\n" << std::setprecision(17);
    for (std::size_t i = 0; i < traj.grid.size(); ++i)
        os << traj.grid.at(i) << ',' << traj.a_c_expect[i].real() << ',' << traj.a_c_expect[i].imag() << ','
           << traj.photon_number[i] << ',' << traj.excited_pop[i] << ',' << traj.top_fock_pop[i] << '\n';
}

} // namespace cavcat
