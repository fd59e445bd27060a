#include "cavcat/serialization.hpp"

#include <iomanip>
#include <ostream>

#include "cavcat/error.hpp"

namespace cavcat {

namespace {

nlohmann::json pair(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

cplx complex_from(const nlohmann::json& j, const std::string& what) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw ConfigError(what + " must be a number or [re, im]");
}

const nlohmann::json& field(const nlohmann::json& j, const char* key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(what + " is missing '" + key + "'");
    return j.at(key);
}

std::string string_field(const nlohmann::json& j, const char* key, const std::string& what) {
    const auto& v = field(j, key, what);
    if (!v.is_string()) throw ConfigError(what + " field '" + key + "' must be a string");
    return v.get<std::string>();
}

Outcome outcome_from(const std::string& s) {
    if (s == "+") return Outcome::plus;
    if (s == "-") return Outcome::minus;
    throw ConfigError("measurement outcome must be + or -");
}

ProtocolStep step_from_json(const nlohmann::json& j, std::size_t index, const ChannelResolver& resolve) {
    const std::string what = "script step " + std::to_string(index);
    const std::string kind = string_field(j, "kind", what);
    if (kind == "prepare_atom") {
        if (!j.contains("target")) return ProtocolStep::prepare();
        const auto& t = j.at("target");
        if (t.is_string()) return ProtocolStep::prepare(AtomState::from_label(atom_label_from_string(t.get<std::string>())));
        if (t.is_array() && t.size() == 2)
            return ProtocolStep::prepare(AtomState{complex_from(t[0], what), complex_from(t[1], what)});
        throw ConfigError(what + ": target must be a label or [c0, c1]");
    }
    if (kind == "reflect")
        return ProtocolStep::reflect(string_field(j, "mode", what),
                                     j.contains("channel") ? resolve(j.at("channel")) : ReflectionChannel::ideal());
    if (kind == "displace") return ProtocolStep::displace(string_field(j, "mode", what), complex_from(field(j, "d", what), what));
    if (kind == "measure_atom")
        return ProtocolStep::measure(j.contains("outcome") ? outcome_from(j.at("outcome").get<std::string>()) : Outcome::plus);
    throw ConfigError(what + ": unknown kind '" + kind + "'");
}

} // namespace

nlohmann::json to_json(const CatState& s) {
    nlohmann::json branches = nlohmann::json::array();
    for (const auto& b : s.branches()) {
        nlohmann::json amps = nlohmann::json::array();
        for (Eigen::Index i = 0; i < b.amplitudes.size(); ++i) amps.push_back(pair(b.amplitudes(i)));
        branches.push_back(
            {{"coeff_re", b.coeff.real()}, {"coeff_im", b.coeff.imag()}, {"atom", to_string(b.atom)}, {"amplitudes", amps}});
    }
    return {{"modes", s.modes()}, {"branches", branches}};
}

CatState cat_state_from_json(const nlohmann::json& j) {
    const std::string what = "cat state";
    const auto& modes_j = field(j, "modes", what);
    if (!modes_j.is_array()) throw ConfigError("cat state modes must be a list");
    std::vector<std::string> modes;
    for (const auto& m : modes_j) {
        if (!m.is_string()) throw ConfigError("cat state mode labels must be strings");
        modes.push_back(m.get<std::string>());
    }
    std::vector<Branch> branches;
    for (const auto& b : field(j, "branches", what)) {
        const auto& amps = field(b, "amplitudes", what);
        Eigen::VectorXcd a(static_cast<Eigen::Index>(amps.size()));
        for (std::size_t i = 0; i < amps.size(); ++i) a(static_cast<Eigen::Index>(i)) = complex_from(amps[i], "amplitude");
        const auto& re = field(b, "coeff_re", what);
        const auto& im = field(b, "coeff_im", what);
        if (!re.is_number() || !im.is_number()) throw ConfigError("branch coefficients must be numbers");
        branches.push_back(Branch{{re.get<double>(), im.get<double>()},
                                  atom_label_from_string(string_field(b, "atom", what)),
                                  std::move(a)});
    }
    if (branches.empty()) throw ConfigError("cat state has no branches");
    return CatState(std::move(modes), std::move(branches));
}

nlohmann::json to_json(const ProtocolStep& s) {
    nlohmann::json j = {{"kind", to_string(s.kind)}};
    switch (s.kind) {
    case StepKind::prepare_atom: j["target"] = {pair(s.target.c0), pair(s.target.c1)}; break;
    case StepKind::reflect:
        j["mode"] = s.mode;
        j["channel"] = {{"ideal", s.channel.is_ideal()}, {"eta", s.channel.eta()}};
        break;
    case StepKind::displace:
        j["mode"] = s.mode;
        j["d"] = pair(s.displacement);
        break;
    case StepKind::measure_atom: j["outcome"] = to_string(s.outcome); break;
    }
    return j;
}

nlohmann::json to_json(const ProtocolResult& r) {
    nlohmann::json log = nlohmann::json::array();
    for (const auto& m : r.outcome_log)
        log.push_back({{"step", m.step},
                       {"outcome", to_string(m.outcome)},
                       {"probability", m.probability},
                       {"p_plus", m.p_plus},
                       {"p_minus", m.p_minus}});
    return {{"final_state", to_json(r.final_state)},
            {"norm", std::sqrt(r.final_state.norm_squared())},
            {"outcome_log", log},
            {"success_probability", r.success_probability()},
            {"metadata", r.metadata}};
}

ReflectionChannel default_channel(const nlohmann::json& entry) {
    if (entry.is_string() && entry.get<std::string>() == "ideal") return ReflectionChannel::ideal();
    if (entry.is_object() && entry.size() == 1 && entry.contains("eta") && entry["eta"].is_number())
        return ReflectionChannel::lossy(entry["eta"].get<double>());
    throw ConfigError("reflection channel must be \"ideal\" or {\"eta\": x}");
}

Script script_from_json(const nlohmann::json& j, const ChannelResolver& resolve) {
    Script s;
    const nlohmann::json* steps = &j;
    if (j.is_object()) {
        for (const auto& [key, v] : j.items())
            if (key != "initial" && key != "steps") throw ConfigError("unknown script key '" + key + "'");
        if (j.contains("initial")) s.initial = cat_state_from_json(j.at("initial"));
        steps = &field(j, "steps", "script");
    }
    if (!steps->is_array()) throw ConfigError("script steps must be a list");
    for (std::size_t i = 0; i < steps->size(); ++i) s.steps.push_back(step_from_json((*steps)[i], i, resolve));
    return s;
}

void write_wigner_csv(std::ostream& os, const WignerGrid& g) {
    os << "re_z,im_z,w\n" << std::setprecision(17);
    for (std::size_t i = 0; i < g.re.size(); ++i)
        for (std::size_t k = 0; k < g.im.size(); ++k) os << g.re[i] << ',' << g.im[k] << ',' << g.values[i * g.im.size() + k] << '\n';
}

} // namespace cavcat
