#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "respec/abstraction.hpp"
#include "respec/cbf.hpp"
#include "respec/monitor.hpp"

namespace respec {

struct RuntimeConfig {
    AbstractionConfig abstraction;
    ControlConfig control;
    ChoiceMethod method = ChoiceMethod::Reevaluate;
    /// Structural modifications estimated above this fraction of the control
    /// period freeze the clock while they are applied.
    double pause_budget = 0.5;
};

/// One top-level clause of the running specification: the original formula
/// or a formula attached later by conjunction or disjunction.
struct Clause {
    /// Proposition id prefix ("" for the original formula, then "c1:", "c2:", ...).
    std::string ns;
    SpecFormula formula;
    /// Position of the clause root inside the combined formula.
    Selector path;
    /// Simulation time the clause was attached.
    double since = 0.0;
};

struct SpecState {
    Schema schema;
    /// Combined formula; the clauses sit at their paths.
    SpecFormula formula;
    std::vector<Clause> clauses;
    int next_clause = 1;
};

/// One automaton of B_set with its current state.
struct AutomatonSlot {
    std::shared_ptr<const BuchiAutomaton> automaton;
    std::shared_ptr<const std::vector<int>> distance;
    std::shared_ptr<const std::vector<bool>> on_cycle;
    int state = 0;
    /// How the automaton was formed, e.g. "B x c1:".
    std::string origin;
};

AutomatonSlot make_slot(std::shared_ptr<const BuchiAutomaton> b, int state, std::string origin);

/// Everything Algorithms 1 and 2 read and write. Invariant: every proposition
/// with a live instance has a barrier; every automaton's alphabet is covered by props.
struct RuntimeContext {
    RuntimeConfig config;
    SpecState spec;
    std::vector<AbstractProposition> props;
    std::map<std::string, BarrierTemplate> templates;
    std::vector<AutomatonSlot> automata;
    MonitorState monitor;
    std::map<std::string, BarrierInstance> barriers;
    /// Activated set of the previous step (entering it re-anchors reach schedules).
    std::set<std::string> activated;
    /// Violated instances per proposition (revivals subtract).
    std::map<std::string, int> violations;
    double t = 0.0;
    long step = 0;
    double prep_ms = 0.0;
};

/// Adds props (deduplicating shared event atoms) and their templates.
void merge_props(RuntimeContext& ctx, const std::vector<AbstractProposition>& props,
                 const std::vector<BarrierTemplate>& templates);

/// Clause owning a proposition id.
const Clause* clause_of(const SpecState& spec, const std::string& prop_id);

} // namespace respec
