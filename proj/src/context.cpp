#include "respec/context.hpp"

#include <algorithm>

#include "respec/error.hpp"

namespace respec {

AutomatonSlot make_slot(std::shared_ptr<const BuchiAutomaton> b, int state, std::string origin) {
    AutomatonSlot slot;
    slot.distance = std::make_shared<const std::vector<int>>(distance_to_acceptance(*b));
    slot.on_cycle = std::make_shared<const std::vector<bool>>(accepting_on_cycle(*b));
    slot.automaton = std::move(b);
    slot.state = state;
    slot.origin = std::move(origin);
    return slot;
}

void merge_props(RuntimeContext& ctx, const std::vector<AbstractProposition>& props,
                 const std::vector<BarrierTemplate>& templates) {
    for (const auto& p : props) {
        if (find_prop(ctx.props, p.id)) {
            if (p.kind == PropKind::Event) continue;
            throw Error(ErrorCode::InvalidConfig, "proposition id '" + p.id + "' is already in use");
        }
        ctx.props.push_back(p);
    }
    for (const auto& t : templates) ctx.templates[t.prop] = t;
}

const Clause* clause_of(const SpecState& spec, const std::string& prop_id) {
    const Clause* base = nullptr;
    for (const auto& c : spec.clauses) {
        if (c.ns.empty()) base = &c;
        else if (prop_id.compare(0, c.ns.size(), c.ns) == 0) return &c;
    }
    return base;
}

} // namespace respec
