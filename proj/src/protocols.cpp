#include "cavcat/protocols.hpp"

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

nlohmann::json noise_json(const ReflectionChannel& c) {
    return {{"ideal", c.is_ideal()},
            {"eta", c.eta()},
            {"distortion_modes", c.map_zero().size() - 1}};
}

nlohmann::json complex_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

std::string step_context(std::size_t i, StepKind k) { return "step " + std::to_string(i) + " (" + to_string(k) + "): "; }

} // namespace

std::string to_string(StepKind k) {
    switch (k) {
    case StepKind::prepare_atom: return "prepare_atom";
    case StepKind::reflect: return "reflect";
    case StepKind::displace: return "displace";
    case StepKind::measure_atom: return "measure_atom";
    }
    return "unknown";
}

ProtocolStep ProtocolStep::prepare(AtomState target) {
    ProtocolStep s;
    s.kind = StepKind::prepare_atom;
    s.target = target;
    return s;
}

ProtocolStep ProtocolStep::reflect(std::string mode, ReflectionChannel channel) {
    ProtocolStep s;
    s.kind = StepKind::reflect;
    s.mode = std::move(mode);
    s.channel = std::move(channel);
    return s;
}

ProtocolStep ProtocolStep::displace(std::string mode, cplx d) {
    ProtocolStep s;
    s.kind = StepKind::displace;
    s.mode = std::move(mode);
    s.displacement = d;
    return s;
}

ProtocolStep ProtocolStep::measure(Outcome outcome) {
    ProtocolStep s;
    s.kind = StepKind::measure_atom;
    s.outcome = outcome;
    return s;
}

double ProtocolResult::success_probability() const {
    double p = 1.0;
    for (const auto& r : outcome_log) p *= r.probability;
    return p;
}

ProtocolResult run_script(const std::vector<ProtocolStep>& steps, const CatState& initial) {
    CatState state = initial;
    std::vector<MeasurementRecord> log;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const ProtocolStep& s = steps[i];
        try {
            switch (s.kind) {
            case StepKind::prepare_atom: state = prepare_atom(state, s.target); break;
            case StepKind::reflect: state = reflect(state, s.mode, s.channel); break;
            case StepKind::displace: state = displace(state, s.mode, s.displacement); break;
            case StepKind::measure_atom: {
                const Measurement m = measure_atom(state);
                state = m.post(s.outcome);
                log.push_back(MeasurementRecord{i, s.outcome, m.probability(s.outcome), m.p_plus, m.p_minus});
                break;
            }
            }
        } catch (const ConfigError& e) {
            throw ConfigError(step_context(i, s.kind) + e.what());
        } catch (const NumericalError& e) {
            throw NumericalError(step_context(i, s.kind) + e.what());
        }
    }
    nlohmann::json meta = {{"steps", steps.size()}};
    return ProtocolResult{std::move(state), std::move(log), std::move(meta)};
}

CatState multipartite_initial(int n, cplx alpha) {
    if (n < 1) throw ConfigError("multipartite cat needs at least one pulse");
    std::vector<std::string> modes;
    for (int k = 1; k <= n; ++k) modes.push_back("pulse" + std::to_string(k));
    return CatState::coherent(std::move(modes), Eigen::VectorXcd::Constant(n, alpha), AtomLabel::zero);
}

std::vector<ProtocolStep> multipartite_script(int n, const ReflectionChannel& noise, std::optional<Outcome> postselect) {
    if (n < 1) throw ConfigError("multipartite cat needs at least one pulse");
    std::vector<ProtocolStep> steps{ProtocolStep::prepare()};
    for (int k = 1; k <= n; ++k) steps.push_back(ProtocolStep::reflect("pulse" + std::to_string(k), noise));
    if (postselect) steps.push_back(ProtocolStep::measure(*postselect));
    return steps;
}

ProtocolResult multipartite_cat(int n, cplx alpha, const ReflectionChannel& noise, std::optional<Outcome> postselect) {
    ProtocolResult r = run_script(multipartite_script(n, noise, postselect), multipartite_initial(n, alpha));
    r.metadata = {{"protocol", "multipartite"},
                  {"n", n},
                  {"alpha", complex_json(alpha)},
                  {"postselect", postselect ? to_string(*postselect) : "none"},
                  {"noise", noise_json(noise)},
                  {"steps", r.metadata["steps"]}};
    return r;
}

CatState multidimensional_initial(cplx alpha) {
    return CatState::coherent({"pulse"}, Eigen::VectorXcd::Constant(1, alpha), AtomLabel::zero);
}

std::vector<ProtocolStep> multidimensional_script(int rounds, cplx alpha, const ReflectionChannel& noise,
                                                  Outcome postselect) {
    if (rounds < 1) throw ConfigError("multidimensional cat needs at least one round");
    std::vector<ProtocolStep> steps;
    for (int r = 0; r < rounds; ++r) {
        if (r > 0) steps.push_back(ProtocolStep::displace("pulse", 2.0 * alpha));
        steps.push_back(ProtocolStep::prepare());
        steps.push_back(ProtocolStep::reflect("pulse", noise));
        steps.push_back(ProtocolStep::measure(postselect));
    }
    return steps;
}

ProtocolResult multidimensional_cat(int rounds, cplx alpha, const ReflectionChannel& noise, Outcome postselect) {
    ProtocolResult r =
        run_script(multidimensional_script(rounds, alpha, noise, postselect), multidimensional_initial(alpha));
    r.metadata = {{"protocol", "multidimensional"},
                  {"rounds", rounds},
                  {"alpha", complex_json(alpha)},
                  {"postselect", to_string(postselect)},
                  {"noise", noise_json(noise)},
                  {"steps", r.metadata["steps"]}};
    return r;
}

} // namespace cavcat
