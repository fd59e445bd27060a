// JSON and CSV forms of cat states, protocol scripts and results, and Wigner grids.
#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cavcat/cat_state.hpp"
#include "cavcat/protocols.hpp"

namespace cavcat {

/// {modes: [...], branches: [{coeff_re, coeff_im, atom, amplitudes: [[re, im], ...]}]}.
nlohmann::json to_json(const CatState& state);
CatState cat_state_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ProtocolResult& result);
nlohmann::json to_json(const ProtocolStep& step);

/// Turns the "channel" entry of a reflect step into a channel. The default
/// understands "ideal" and {"eta": x}.
using ChannelResolver = std::function<ReflectionChannel(const nlohmann::json&)>;
ReflectionChannel default_channel(const nlohmann::json& entry);

struct Script {
    std::optional<CatState> initial;
    std::vector<ProtocolStep> steps;
};

/// Either a bare list of steps or {"initial": state, "steps": [...]}. Step records:
///   {"kind": "prepare_atom", "target": "+" | [[re, im], [re, im]]}
///   {"kind": "reflect", "mode": m, "channel": ...}
///   {"kind": "displace", "mode": m, "d": x | [re, im]}
///   {"kind": "measure_atom", "outcome": "+" | "-"}
Script script_from_json(const nlohmann::json& j, const ChannelResolver& resolve = default_channel);

/// CSV "re_z,im_z,w" with one row per grid point.
void write_wigner_csv(std::ostream& os, const WignerGrid& grid);

} // namespace cavcat
