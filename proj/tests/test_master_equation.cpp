#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cavcat/error.hpp"
#include "cavcat/master_equation.hpp"
#include "support/scalar_ode.hpp"

using namespace cavcat;

namespace {

constexpr double kCoherenceBaseline = 5.8375819003358963e-05;

SystemParams undriven(double g, double kappa, double gamma_s, double t_end, int cutoff) {
    SystemParams p;
    p.g = g;
    p.kappa = kappa;
    p.gamma_s = gamma_s;
    p.pulse = ComplexEnvelope::zeros(TimeGrid::with_spacing(0.0, t_end, 0.05));
    p.fock_cutoff = cutoff;
    p.dt = std::min(0.05, p.max_stable_step());
    return p;
}

} // namespace

TEST_CASE("operators: ladder, projectors and layout") {
    const HilbertDims dims{2, 5};
    const auto ops = build_operators(dims);
    CHECK(ops.a.rows() == 12);

    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(12);
    one(dims.index(Level::coupled, 1)) = 1.0;
    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(12);
    zero(dims.index(Level::coupled, 0)) = 1.0;
    CHECK((ops.a * one - zero).norm() < 1e-15);

    CHECK(std::abs(ops.a(dims.index(Level::excited, 2), dims.index(Level::excited, 3)) - std::sqrt(3.0)) < 1e-15);

    const Matrix proj = ops.sigma_plus * ops.sigma_minus;
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(12);
    e(dims.index(Level::excited, 4)) = 1.0;
    CHECK((proj * e - e).norm() < 1e-15);
    CHECK((proj * zero).norm() < 1e-15);

    // [a, a^dag] = 1 below the cutoff
    const Matrix comm = ops.a * ops.a_dag - ops.a_dag * ops.a;
    for (auto lvl : {Level::coupled, Level::excited})
        for (int n = 0; n < 5; ++n) {
            const int i = dims.index(lvl, n);
            CHECK(std::abs(comm(i, i) - 1.0) < 1e-14);
        }
    // sigma acts as identity on the photon number
    const Matrix ntot = ops.a_dag * ops.a;
    CHECK((ops.sigma_minus * ntot - ntot * ops.sigma_minus).norm() < 1e-14);
    CHECK((ops.coupling - ops.coupling.adjoint()).norm() < 1e-15);

    const HilbertDims three{3, 4};
    CHECK(three.dimension() == 15);
    CHECK(three.index(Level::uncoupled, 0) == 0);
    CHECK(three.index(Level::coupled, 0) == 5);
    CHECK_THROWS_AS(dims.index(Level::uncoupled, 0), ConfigError);
    CHECK_THROWS_AS((HilbertDims{4, 5}.validate()), ConfigError);
}

TEST_CASE("cavity decay from one photon") {
    const auto p = undriven(0.0, 1.0, 0.0, 10.0, 5);
    const auto traj = evolve(p, DensityMatrix::product_state({2, 5}, Level::coupled, 1));
    double err = 0.0;
    for (std::size_t i = 0; i < traj.grid.size(); ++i)
        err = std::max(err, std::abs(traj.photon_number[i] - std::exp(-traj.grid.at(i))));
    CHECK(err < 1e-6);
    CHECK(traj.diagnostics.max_trace_drift < 1e-12);
}

TEST_CASE("vacuum Rabi oscillation") {
    const double g = 1.3;
    auto p = undriven(g, 0.0, 0.0, 10.0, 4);
    p.dt = 0.01;
    const auto traj = evolve(p, DensityMatrix::product_state({2, 4}, Level::excited, 0));
    double err = 0.0;
    for (std::size_t i = 0; i < traj.grid.size(); ++i)
        err = std::max(err, std::abs(traj.excited_pop[i] - std::pow(std::cos(g * traj.grid.at(i)), 2)));
    CHECK(err < 1e-6);
}

TEST_CASE("spontaneous emission empties the excited level") {
    const auto p = undriven(0.0, 1.0, 0.7, 8.0, 3);
    const auto traj = evolve(p, DensityMatrix::product_state({2, 3}, Level::excited, 0));
    for (std::size_t i = 0; i < traj.grid.size(); i += 20)
        CHECK(std::abs(traj.excited_pop[i] - std::exp(-0.7 * traj.grid.at(i))) < 1e-8);
}

TEST_CASE("driven empty cavity follows the scalar Langevin equation") {
    const cplx alpha = std::polar(2.0, 0.6);
    const SystemParams p = gaussian_params(0.0, 1.0, 100.0, alpha);
    const auto traj = evolve(p, DensityMatrix::product_state({2, p.fock_cutoff}, Level::coupled, 0));
    const GaussianPulse shape = make_gaussian(100.0, p.pulse.grid());
    const auto ref = oracle::empty_cavity_field(p.pulse.grid(), [&](double t) { return alpha * shape(t); }, 1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(traj.a_c_expect[i] - ref[i]));
    CHECK(err < 1e-6);
    // a driven linear cavity stays coherent
    CHECK(coherence_diagnostic(traj) < 1e-8);
}

TEST_CASE("three-level space: the uncoupled level sees an empty cavity") {
    const double alpha = 1.5;
    SystemParams p = gaussian_params(6.0, 1.0, 60.0, alpha, 0.025, 12);
    const auto traj = evolve(p, DensityMatrix::product_state({3, 12}, Level::uncoupled, 0));
    const GaussianPulse shape = make_gaussian(60.0, p.pulse.grid());
    const auto ref = oracle::empty_cavity_field(p.pulse.grid(), [&](double t) { return alpha * shape(t); }, 1.0);
    double err = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(traj.a_c_expect[i] - ref[i]));
    CHECK(err < 1e-6);
    for (double pe : traj.excited_pop) CHECK(std::abs(pe) < 1e-14);
}

TEST_CASE("trajectory invariants under strong coupling") {
    const SystemParams p = gaussian_params(6.0, 1.0, 60.0, std::sqrt(8.0), 0.05, 15);
    const auto traj = evolve(p, DensityMatrix::product_state({2, 15}, Level::coupled, 0));
    const auto& d = traj.diagnostics;
    CHECK(d.max_trace_drift < 1e-8);
    CHECK(d.max_hermiticity_error < 1e-10);
    CHECK(d.min_eigenvalue > -1e-8);
    for (std::size_t i = 0; i < traj.grid.size(); ++i) {
        CHECK(traj.excited_pop[i] >= -1e-12);
        CHECK(traj.excited_pop[i] <= 1.0 + 1e-8);
        CHECK(traj.photon_number[i] >= std::norm(traj.a_c_expect[i]) - 1e-10);
    }
    traj.final_state.check();
}

TEST_CASE("coherence diagnostic") {
    SUBCASE("vacuum input stays vacuum") {
        const SystemParams p = gaussian_params(6.0, 1.0, 60.0, 0.0);
        const auto traj = evolve(p, DensityMatrix::product_state({2, 15}, Level::coupled, 0));
        CHECK(coherence_diagnostic(traj) < 1e-15);
    }
    SUBCASE("strongly coupled atom, regression baseline") {
        // value produced by this engine (N = 15, dt = 0.05/6, spacing 0.05);
        // a regression pin, not an independent reference
        const SystemParams p = gaussian_params(6.0, 1.0, 210.0, std::sqrt(10.0));
        const auto traj = evolve(p, DensityMatrix::product_state({2, 15}, Level::coupled, 0));
        const double c = coherence_diagnostic(traj);
        CHECK(c > 0.0);
        CHECK(c == doctest::Approx(kCoherenceBaseline).epsilon(1e-6));
    }
}

TEST_CASE("cutoff breach and escalation") {
    SystemParams p = gaussian_params(0.0, 1.0, 20.0, 4.0, 0.025, 3);
    CHECK_THROWS_AS(evolve(p, DensityMatrix::product_state({2, 3}, Level::coupled, 0)), CutoffError);
    std::vector<std::string> log;
    const auto traj = evolve_reflection(p, 40, &log);
    CHECK(traj.diagnostics.fock_cutoff > 3);
    CHECK(!log.empty());
    CHECK(traj.diagnostics.max_top_fock_pop <= 1e-6);
    CHECK_THROWS_AS(evolve_reflection(p, 5), CutoffError);
}

TEST_CASE("trace drift guard") {
    const SystemParams p = gaussian_params(6.0, 1.0, 30.0, 1.0, 0.05, 6);
    EvolveOptions strict;
    strict.max_trace_drift = 1e-30;
    const auto init = DensityMatrix::product_state({2, 6}, Level::coupled, 0);
    bool threw = false;
    try {
        evolve(p, init, strict);
    } catch (const NumericalError& e) {
        threw = std::string(e.what()).find("trace") != std::string::npos;
    }
    CHECK(threw);
}

TEST_CASE("parameter validation") {
    SystemParams p = gaussian_params(10.0, 1.0, 50.0, 1.0);
    CHECK(p.dt == doctest::Approx(0.005));
    CHECK(p.effective_step() == doctest::Approx(0.005));
    p.dt = 0.006;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.dt = 0.004;
    CHECK(p.effective_step() == doctest::Approx(0.05 / 13));
    p.g = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    SystemParams q = gaussian_params(1.0, 1.0, 50.0, 1.0);
    CHECK_THROWS_AS(evolve(q, DensityMatrix::product_state({2, 7}, Level::coupled, 0)), ConfigError);
    Matrix bad = Matrix::Zero(32, 32);
    bad(0, 0) = 0.5;
    CHECK_THROWS_AS(evolve(q, DensityMatrix({2, 15}, bad)), NumericalError);
}

TEST_CASE("trajectory CSV") {
    const auto p = undriven(0.0, 1.0, 0.0, 1.0, 3);
    const auto traj = evolve(p, DensityMatrix::product_state({2, 3}, Level::coupled, 1));
    std::stringstream ss;
    write_trajectory_csv(ss, traj);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "t,re_a,im_a,n_phot,p_e,p_topfock");
    int rows = 0;
    while (std::getline(ss, line)) ++rows;
    CHECK(rows == 21);
}
