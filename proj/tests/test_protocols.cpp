#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cavcat/error.hpp"
#include "cavcat/protocols.hpp"
#include "support/fock_oracle.hpp"

using namespace cavcat;


TEST_CASE("multipartite cat, ideal") {
    SUBCASE("one pulse before measurement is the entangled cat") {
        const auto r = multipartite_cat(1, 1.1, ReflectionChannel::ideal(), std::nullopt);
        const CatState expected({"pulse1"}, {Branch{std::sqrt(0.5), AtomLabel::zero, Eigen::VectorXcd::Constant(1, -1.1)},
                                             Branch{std::sqrt(0.5), AtomLabel::one, Eigen::VectorXcd::Constant(1, 1.1)}});
        CHECK(std::abs(overlap(expected, r.final_state) - 1.0) < 1e-14);
        CHECK(r.outcome_log.empty());
    }
    SUBCASE("two pulses, outcome +") {
        const auto r = multipartite_cat(2, 1.0, ReflectionChannel::ideal(), Outcome::plus);
        REQUIRE(r.outcome_log.size() == 1);
        CHECK(std::abs(r.outcome_log[0].probability - (1.0 + std::exp(-4.0)) / 2.0) < 1e-14);
        CHECK(std::abs(r.outcome_log[0].probability - 0.50916) < 1e-5);
        const auto& b = r.final_state.branches();
        REQUIRE(b.size() == 2);
        CHECK(std::abs(b[0].coeff - b[1].coeff) < 1e-15);
        CHECK((b[0].amplitudes + b[1].amplitudes).norm() < 1e-15);
        CHECK(std::abs(r.final_state.norm_squared() - 1.0) < 1e-12);
        CHECK(r.metadata.at("protocol") == "multipartite");
    }
    SUBCASE("two merged branches for any n") {
        for (int n : {1, 3, 6}) {
            const auto r = multipartite_cat(n, 0.8, ReflectionChannel::ideal(), Outcome::minus);
            CHECK(r.final_state.branches().size() == 2);
            CHECK(std::abs(r.outcome_log[0].p_plus + r.outcome_log[0].p_minus - 1.0) < 1e-10);
            CHECK(std::abs(r.final_state.norm_squared() - 1.0) < 1e-12);
        }
    }
    CHECK_THROWS_AS(multipartite_cat(0, 1.0, ReflectionChannel::ideal()), ConfigError);
}

TEST_CASE("multipartite cat with loss") {
    const double eta = 0.0274;
    const double a2 = 1.0;
    const auto r = multipartite_cat(3, std::sqrt(a2), ReflectionChannel::lossy(eta), Outcome::plus);
    CHECK(r.final_state.mode_count() == 6);
    // <branch0|branch1> = exp(-3 |alpha|^2 (1 + sqrt(1 - eta)))
    const double p = 0.5 * (1.0 + std::exp(-3.0 * a2 * (1.0 + std::sqrt(1.0 - eta))));
    CHECK(std::abs(r.outcome_log[0].probability - p) < 1e-14);
    for (const auto& b : r.final_state.branches()) {
        CHECK(std::abs(b.amplitudes.squaredNorm() - 3.0 * a2) < 1e-13);
        const double pulse = std::abs(b.amplitudes(0));
        CHECK((std::abs(pulse - 1.0) < 1e-15 || std::abs(pulse - std::sqrt(1.0 - eta)) < 1e-15));
    }
}

TEST_CASE("multidimensional cat, ideal") {
    const double alpha = 1.5;
    SUBCASE("one round") {
        const auto r = multidimensional_cat(1, alpha, ReflectionChannel::ideal());
        const auto& b = r.final_state.branches();
        REQUIRE(b.size() == 2);
        CHECK(std::abs(b[0].amplitudes(0) + alpha) < 1e-15);
        CHECK(std::abs(b[1].amplitudes(0) - alpha) < 1e-15);
    }
    SUBCASE("two rounds give four equal components") {
        const auto r = multidimensional_cat(2, alpha, ReflectionChannel::ideal());
        auto b = r.final_state.branches();
        REQUIRE(b.size() == 4);
        std::sort(b.begin(), b.end(), [](const Branch& x, const Branch& y) { return x.amplitudes(0).real() < y.amplitudes(0).real(); });
        const double expected[] = {-3.0, -1.0, 1.0, 3.0};
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(b[k].amplitudes(0) - expected[k] * alpha) < 1e-12);
            CHECK(std::abs(std::abs(b[k].coeff) - std::abs(b[0].coeff)) < 1e-12);
        }
        CHECK(std::abs(r.final_state.norm_squared() - 1.0) < 1e-12);
        CHECK(r.outcome_log.size() == 2);
    }
    SUBCASE("component count grows by two per round") {
        for (int rounds : {3, 4}) {
            const auto r = multidimensional_cat(rounds, cplx{0.9, 0.4}, ReflectionChannel::ideal());
            CHECK(r.final_state.branches().size() == static_cast<std::size_t>(2 * rounds));
            double top = 0.0;
            for (const auto& b : r.final_state.branches()) top = std::max(top, std::abs(b.amplitudes(0)));
            CHECK(std::abs(top - (2 * rounds - 1) * std::abs(cplx{0.9, 0.4})) < 1e-12);
        }
    }
}

TEST_CASE("multidimensional cat agrees with a Fock-basis simulation") {
    const cplx alpha = 1.0;
    const auto r = multidimensional_cat(2, alpha, ReflectionChannel::ideal(), Outcome::plus);
    oracle::FockProtocol fock(40, alpha);
    fock.round(false, 0.0);
    fock.round(true, 2.0 * alpha);
    REQUIRE(r.outcome_log.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(std::abs(r.outcome_log[k].probability - fock.probabilities[k]) < 1e-6);
    CHECK(std::abs(r.success_probability() - fock.probabilities[0] * fock.probabilities[1]) < 1e-6);
    // same final state, compared through its Wigner function
    for (cplx z : {cplx{0.0, 0.0}, cplx{1.0, 0.3}, cplx{-2.5, -0.2}})
        CHECK(std::abs(wigner(r.final_state, "pulse", z) - oracle::wigner(fock.field, z)) < 1e-8);
}

TEST_CASE("a simulated reflection channel reproduces the outcome fidelity") {
    const double a2 = 2.0;
    const auto outcome = simulate_reflection(gaussian_params(6.0, 1.0, 100.0, std::sqrt(a2)));
    const auto report = fidelity_exact(outcome);
    const auto ideal = multipartite_cat(1, std::sqrt(a2), ReflectionChannel::ideal(), std::nullopt);

    const auto shaped = multipartite_cat(1, std::sqrt(a2), ReflectionChannel::from_outcome(outcome), std::nullopt);
    CHECK(std::abs(fidelity(ideal.final_state, shaped.final_state) - report.F_exact) < 1e-10);
    CHECK(std::abs(shaped.final_state.norm_squared() - 1.0) < 1e-10);
    for (const auto& b : shaped.final_state.branches()) CHECK(std::abs(b.amplitudes.squaredNorm() - a2) < 1e-8);

    const auto loss_only = multipartite_cat(1, std::sqrt(a2), ReflectionChannel::from_outcome(outcome, false), std::nullopt);
    CHECK(std::abs(fidelity(ideal.final_state, loss_only.final_state) - fidelity_eq7(std::sqrt(a2), 0.0, outcome.eta)) <
          1e-12);
}

TEST_CASE("script runner") {
    SUBCASE("empty script") {
        const auto init = multidimensional_initial(0.7);
        const auto r = run_script({}, init);
        CHECK(std::abs(overlap(init, r.final_state) - 1.0) < 1e-15);
    }
    SUBCASE("equivalent to the convenience wrapper") {
        const auto a = multipartite_cat(2, 1.2, ReflectionChannel::lossy(0.05), Outcome::plus);
        const auto b = run_script({ProtocolStep::prepare(), ProtocolStep::reflect("pulse1", ReflectionChannel::lossy(0.05)),
                                   ProtocolStep::reflect("pulse2", ReflectionChannel::lossy(0.05)), ProtocolStep::measure()},
                                  multipartite_initial(2, 1.2));
        CHECK(a.final_state.modes() == b.final_state.modes());
        CHECK(std::abs(overlap(a.final_state, b.final_state) - 1.0) < 1e-15);
        CHECK(a.outcome_log[0].probability == b.outcome_log[0].probability);
    }
    SUBCASE("measurement on a product state") {
        const auto r = run_script({ProtocolStep::prepare(), ProtocolStep::measure()}, multidimensional_initial(1.0));
        CHECK(r.outcome_log[0].probability == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(r.outcome_log[0].p_minus < 1e-14);
    }
    SUBCASE("errors carry the step index") {
        const std::vector<ProtocolStep> steps{ProtocolStep::prepare(), ProtocolStep::displace("pulse", 1.0),
                                              ProtocolStep::measure(), ProtocolStep::reflect("pulse")};
        std::string msg;
        try {
            run_script(steps, multidimensional_initial(1.0));
        } catch (const ConfigError& e) {
            msg = e.what();
        }
        CHECK(msg.find("step 3 (reflect)") != std::string::npos);

        std::string zero;
        try {
            run_script({ProtocolStep::prepare(), ProtocolStep::measure(Outcome::minus)}, multidimensional_initial(1.0));
        } catch (const NumericalError& e) {
            zero = e.what();
        }
        CHECK(zero.find("step 1 (measure_atom)") != std::string::npos);
    }
}
