#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "cavcat/error.hpp"
#include "cavcat/reflection.hpp"

using namespace cavcat;

namespace {

double sup_difference(const ComplexEnvelope& x, const ComplexEnvelope& y) { return x.max_abs_difference(y); }

ReflectionOutcome make_outcome(cplx alpha, cplx alpha_out, const ComplexEnvelope& f_in, const ComplexEnvelope& f1,
                               const ComplexEnvelope& f0) {
    ReflectionOutcome o{alpha, alpha_out, f_in, f1, f0, cplx{}, cplx{},
                        1.0 - std::norm(alpha_out) / std::norm(alpha), SystemParams{}, EvolutionDiagnostics{}, 0.0, {}};
    return compute_mismatch_figures(std::move(o));
}

} // namespace

TEST_CASE("weak-drive response identities") {
    const cplx i{0.0, 1.0};
    for (double w : {-3.0, -0.4, 0.0, 0.25, 2.0}) {
        const cplx empty = -(0.5 + i * w) / (0.5 - i * w);
        CHECK(std::abs(weak_drive_response(0.0, 1.0, 1.0, w) - empty) < 1e-15);
        CHECK(std::abs(std::abs(weak_drive_response(6.0, 1.0, 0.0, w)) - 1.0) < 1e-14);
        CHECK(std::abs(weak_drive_response(6.0, 1.0, 1.0, w)) <= 1.0 + 1e-15);
    }
    // g^2 / (gamma_s / 2) = 72 on top of kappa / 2
    const cplx r0 = weak_drive_response(6.0, 1.0, 1.0, 0.0);
    CHECK(std::abs(r0 - (1.0 - 1.0 / 72.5)) < 1e-15);
    CHECK(1.0 - std::norm(r0) == doctest::Approx(0.027397).epsilon(1e-4));
}

TEST_CASE("no spontaneous emission, no loss") {
    const auto o = simulate_reflection(gaussian_params(6.0, 0.0, 100.0, 1.0));
    CHECK(std::abs(o.eta) < 1e-4);
    CHECK(std::abs(o.f_out_1.norm_squared() - 1.0) < 1e-8);
    CHECK(std::abs(o.xi1.imag()) < 1e-12);
    CHECK(o.xi1.real() >= 0.0);
    CHECK(std::abs(o.xi1) < 0.1 * std::abs(o.xi0));
}

TEST_CASE("weak drive matches linear response") {
    const double a2 = 0.01;
    const auto o = simulate_reflection(gaussian_params(6.0, 1.0, 210.0, std::sqrt(a2)));
    const auto predicted = weak_drive_filter(o.f_in, 6.0, 1.0, 1.0);
    const auto simulated = o.f_out_1.scaled(o.alpha_out / o.alpha_in);
    const double diff = sup_difference(simulated, predicted);
    MESSAGE("weak drive sup difference " << diff << ", eta " << o.eta);
    CHECK(diff < 1e-3);
    const double eta_lr = 1.0 - std::norm(weak_drive_response(6.0, 1.0, 1.0, 0.0));
    CHECK(std::abs(o.eta - eta_lr) < 0.1 * eta_lr);
    // the same loss follows from the filtered pulse energy
    CHECK(std::abs(o.eta - (1.0 - predicted.norm_squared())) < 0.1 * eta_lr);
}

TEST_CASE("output shape is insensitive to g in the strong-coupling regime") {
    const auto o3 = simulate_reflection(gaussian_params(3.0, 1.0, 210.0, 1.0));
    const auto o6 = simulate_reflection(gaussian_params(6.0, 1.0, 210.0, 1.0));
    const double diff = sup_difference(o3.f_out_1, o6.f_out_1);
    MESSAGE("f_out_1 sup difference g=3 vs g=6: " << diff);
    CHECK(diff < 1e-3);
    CHECK(std::abs(o6.xi0) > 10.0 * std::abs(o6.xi1));
    CHECK(std::abs(o6.xi0 - mismatch(o6.f_in, -empty_cavity_reflect(o6.f_in, 1.0))) < 1e-15);
}

TEST_CASE("headline operating point") {
    const double a2 = 11.6;
    const auto o = simulate_reflection(gaussian_params(10.0, 1.0, 210.0, std::sqrt(a2)), 25);
    const auto f = fidelity_exact(o);
    MESSAGE("F_exact " << f.F_exact << ", F_eq7 " << f.F_eq7 << ", eta " << o.eta << ", N "
                       << o.diagnostics.fock_cutoff);
    CHECK(f.F_exact >= 0.85);
    CHECK(f.F_exact <= 0.95);
    CHECK(std::abs(f.F_exact - f.F_eq7) < 0.02);
    CHECK(o.eta >= 0.0);
    CHECK(o.eta == doctest::Approx(1.0 - std::norm(o.alpha_out) / a2).epsilon(1e-14));

    const auto j = to_json(o, f, "run_");
    CHECK(j.at("F_exact").get<double>() == f.F_exact);
    CHECK(j.at("envelopes").at("f_out_1").get<std::string>() == "run_f_out_1.csv");
    CHECK(j.at("params").at("g").get<double>() == 10.0);
}

TEST_CASE("vacuum input") {
    const auto o = simulate_reflection(gaussian_params(6.0, 1.0, 100.0, 0.0));
    const auto f = fidelity_exact(o);
    CHECK(f.F_exact == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(f.F_eq7 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(o.eta == 0.0);
}

TEST_CASE("closed-form fidelity") {
    CHECK(fidelity_eq7(1.0, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fidelity_eq7(1.0, 0.1, 0.0) == doctest::Approx(std::pow((1.0 + std::exp(-0.1)) / 2.0, 2)).epsilon(1e-15));
    CHECK(fidelity_eq7(1.0, 0.1, 0.0) == doctest::Approx(0.9071).epsilon(1e-4));
    for (double a : {1.0, 5.0, 40.0}) CHECK(fidelity_eq7(a, 0.0, 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(fidelity_eq7(30.0, 0.05, 0.1) < 1e-12);
    // with xi0 = 0 and eta > 0 only the lossless branch survives
    CHECK(fidelity_eq7(30.0, 0.0, 0.1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("exact fidelity reduces to the closed form") {
    const TimeGrid grid = pulse_grid(100.0, kDefaultSpacing);
    const auto f_in = make_gaussian_pulse(100.0, grid);
    const auto f0 = empty_cavity_reflect(f_in, 1.0);
    const double eta = 0.02;
    for (double a2 : {0.5, 2.0, 9.0}) {
        const cplx alpha = std::sqrt(a2);
        const auto o = make_outcome(alpha, alpha * std::sqrt(1.0 - eta), f_in, f_in, f0);
        CHECK(std::abs(o.xi1) < 1e-15);
        const auto f = fidelity_exact(o);
        CHECK(std::abs(f.F_exact - f.F_eq7) < 1e-12);
    }
}

TEST_CASE("exact fidelity is phase invariant") {
    const TimeGrid grid = pulse_grid(100.0, kDefaultSpacing);
    const auto f_in = make_gaussian_pulse(100.0, grid);
    const auto f0 = empty_cavity_reflect(f_in, 1.0);
    const auto f1 = weak_drive_filter(f_in, 4.0, 1.0, 1.0);
    const double a1 = std::sqrt(f1.norm_squared());
    const auto shape = f1.scaled(1.0 / a1);
    double ref = -1.0;
    for (double phi : {0.0, 0.7, 2.0, -2.9}) {
        const cplx rot = std::polar(1.0, phi);
        const auto f = fidelity_exact(make_outcome(2.0 * rot, 2.0 * a1 * rot, f_in, shape, f0));
        if (ref < 0.0) ref = f.F_exact;
        CHECK(f.F_exact == doctest::Approx(ref).epsilon(1e-12));
        CHECK(f.F_exact >= 0.0);
        CHECK(f.F_exact <= 1.0);
    }
}

TEST_CASE("extraction guards") {
    SystemParams p = gaussian_params(0.0, 0.0, 50.0, 1.0);
    auto traj = evolve_reflection(p);
    traj.diagnostics.ring_down_residual = 1e-6;
    CHECK_THROWS_AS(extract_output_mode(traj, p), NumericalError);
    SystemParams other = gaussian_params(0.0, 0.0, 60.0, 1.0);
    CHECK_THROWS_AS(extract_output_mode(evolve_reflection(p), other), ConfigError);
}
