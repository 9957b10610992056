#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "respec/buchi.hpp"
#include "respec/formula.hpp"
#include "respec/ltl.hpp"

namespace respec {

enum class PropKind { Eventually, Always, Until, Event, TriggerPred };

const char* to_string(PropKind kind);

inline bool is_obligation(PropKind k) {
    return k == PropKind::Eventually || k == PropKind::Always || k == PropKind::Until;
}

/// One abstract proposition of the LTL skeleton.
///
/// Obligations (Eventually / Always / Until) stand for one timed operator,
/// or one disjunct of it when its state formula is not a plain conjunction.
/// Their `reach` predicates must hold together inside the window; Until also
/// carries `hold` predicates that must stay true until then. Event atoms
/// carry nothing; trigger predicates carry their single predicate in `reach`.
struct AbstractProposition {
    std::string id;
    PropKind kind = PropKind::Event;
    Bounds window;
    std::vector<Predicate> reach;
    std::vector<Predicate> hold;
    /// Path of the originating node, relative to the root of its clause.
    Selector origin;
    /// Clause namespace ("" for the original specification).
    std::string ns;
    /// Conjunction of the enclosing trigger conditions over event and
    /// trigger-predicate ids; true for unguarded obligations.
    Ltl guard;
};

struct AbstractionConfig {
    /// Satisfaction margin targeted at the deadline.
    double delta_sat = 0.05;
    /// Initial slack below the current margin at activation.
    double epsilon = 0.05;
    /// Class-K gain (1/s).
    double gain = 1.0;
};

struct PredicateTemplate {
    Expr h;
    double delta_sat = 0.05;
    double epsilon = 0.05;
};

/// Uninstantiated barrier for one obligation.
struct BarrierTemplate {
    std::string prop;
    PropKind kind = PropKind::Eventually;
    Bounds window;
    std::vector<PredicateTemplate> reach;
    std::vector<PredicateTemplate> hold;
    double gain = 1.0;
};

using PredicateFunctionSet = std::map<std::string, std::vector<Expr>>;

struct AbstractionResult {
    Ltl gamma;
    std::vector<AbstractProposition> props;
    PredicateFunctionSet functions;
    std::vector<BarrierTemplate> templates;
    std::shared_ptr<const BuchiAutomaton> automaton;
    int initial = 0;
    double prep_ms = 0.0;
};

/// Maps a timed formula to an untimed LTL skeleton. Ids are derived from
/// selectors: obligations get ns + "p" + path, trigger predicates ns + "t" + path,
/// with "#k" appended per disjunct when a state formula splits.
struct AbstractFormula {
    Ltl gamma;
    std::vector<AbstractProposition> props;
};

AbstractFormula abstract_formula(const SpecFormula& psi, const std::string& ns = "");

/// Satisfaction margin for a predicate: the configured delta, reduced to half
/// the threshold for `expr < c` with constant c > 0 so the target stays reachable
/// for nonnegative left-hand sides.
double satisfaction_margin(const Predicate& mu, double delta);

std::vector<BarrierTemplate> make_templates(const std::vector<AbstractProposition>& props,
                                            const AbstractionConfig& config = {});

/// Abstraction, translation to an automaton, predicate functions and templates.
AbstractionResult prep_spec(const SpecFormula& psi, const AbstractionConfig& config = {}, const std::string& ns = "");

const AbstractProposition* find_prop(const std::vector<AbstractProposition>& props, const std::string& id);

} // namespace respec
