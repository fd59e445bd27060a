// Named cat-generation protocols and a step-list runner built on the cat algebra.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavcat/cat_state.hpp"

namespace cavcat {

enum class StepKind { prepare_atom, reflect, displace, measure_atom };

std::string to_string(StepKind k);

struct ProtocolStep {
    StepKind kind = StepKind::prepare_atom;
    std::string mode;                                          // reflect, displace
    cplx displacement{};                                       // displace
    AtomState target = AtomState::from_label(AtomLabel::plus); // prepare_atom
    Outcome outcome = Outcome::plus;                           // measure_atom
    ReflectionChannel channel = ReflectionChannel::ideal();    // reflect

    static ProtocolStep prepare(AtomState target = AtomState::from_label(AtomLabel::plus));
    static ProtocolStep reflect(std::string mode, ReflectionChannel channel = ReflectionChannel::ideal());
    static ProtocolStep displace(std::string mode, cplx d);
    static ProtocolStep measure(Outcome outcome = Outcome::plus);
};

struct MeasurementRecord {
    std::size_t step = 0;
    Outcome outcome = Outcome::plus;
    double probability = 0.0;   // of the selected outcome
    double p_plus = 0.0;
    double p_minus = 0.0;
};

struct ProtocolResult {
    CatState final_state;
    std::vector<MeasurementRecord> outcome_log;
    nlohmann::json metadata;

    /// Product of the selected outcome probabilities.
    double success_probability() const;
};

/// Applies `steps` in order. Errors are rethrown with the failing step index.
ProtocolResult run_script(const std::vector<ProtocolStep>& steps, const CatState& initial);

/// Atom |0> and `n` pulse modes "pulse1".."pulseN" in |alpha>.
CatState multipartite_initial(int n, cplx alpha);
std::vector<ProtocolStep> multipartite_script(int n, const ReflectionChannel& noise, std::optional<Outcome> postselect);

/// (|-alpha>^n +- |alpha>^n)/norm after an atom measurement, or the entangled
/// state itself when `postselect` is empty.
ProtocolResult multipartite_cat(int n, cplx alpha, const ReflectionChannel& noise,
                                std::optional<Outcome> postselect = Outcome::plus);

/// Atom |0> and one pulse mode "pulse" in |alpha>.
CatState multidimensional_initial(cplx alpha);
std::vector<ProtocolStep> multidimensional_script(int rounds, cplx alpha, const ReflectionChannel& noise,
                                                  Outcome postselect);

/// `rounds` rounds of [prepare |+>, reflect, measure, displace by 2 alpha], the
/// last round without the displacement. Leaves 2 * rounds components at
/// +-alpha, +-3 alpha, ..., +-(2 rounds - 1) alpha.
ProtocolResult multidimensional_cat(int rounds, cplx alpha, const ReflectionChannel& noise,
                                    Outcome postselect = Outcome::plus);

} // namespace cavcat
