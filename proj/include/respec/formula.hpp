#pragma once

#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "respec/expr.hpp"

namespace respec {

enum class Relation { Less, Greater };

/// mu: lhs < rhs or lhs > rhs, with margin h >= 0 exactly when mu holds.
struct Predicate {
    Expr lhs;
    Relation relation = Relation::Less;
    Expr rhs;

    double margin(const WorldState& world) const;
    /// h = rhs - lhs for <, lhs - rhs for >.
    Expr margin_expr() const;
    Predicate negated() const { return {lhs, relation == Relation::Less ? Relation::Greater : Relation::Less, rhs}; }
};

bool structurally_equal(const Predicate& a, const Predicate& b);
std::string print_predicate(const Predicate& p);

struct PredicateValue {
    double h = 0.0;
    bool truth = false;
};

PredicateValue eval_predicate(const Predicate& mu, const WorldState& world);

/// Closed time window [lower, upper] in seconds; upper may be +inf for untimed G.
struct Bounds {
    double lower = 0.0;
    double upper = 0.0;

    bool unbounded() const { return upper == std::numeric_limits<double>::infinity(); }
    bool operator==(const Bounds&) const = default;
};

std::string print_bounds(const Bounds& b);

// ---------------------------------------------------------------------------
// State formulas (phi): predicates, negated predicates, and/or.

enum class StateKind { Pred, Not, And, Or };

struct StateNode;
using StateFormula = std::shared_ptr<const StateNode>;

/// Child indices: And/Or: 0 and 1; Not: 0 selects the negated predicate.
struct StateNode {
    StateKind kind = StateKind::Pred;
    Predicate pred;                     // Pred, Not (the negated predicate)
    std::vector<StateFormula> children; // And/Or: 2
};

StateFormula state_pred(Predicate p);
StateFormula state_not(Predicate p);
StateFormula state_and(StateFormula a, StateFormula b);
StateFormula state_or(StateFormula a, StateFormula b);

// ---------------------------------------------------------------------------
// Event formulas (alpha): event atoms, state predicates used as triggers, not, and.

enum class EventKind { Atom, Pred, Not, And };

struct EventNode;
using EventFormula = std::shared_ptr<const EventNode>;

/// Child indices: Not: 0, And: 0 and 1.
struct EventNode {
    EventKind kind = EventKind::Atom;
    std::string atom;
    Predicate pred;
    std::vector<EventFormula> children;
};

EventFormula event_atom(std::string name);
EventFormula event_pred(Predicate p);
EventFormula event_not(EventFormula a);
EventFormula event_and(EventFormula a, EventFormula b);

// ---------------------------------------------------------------------------
// Specification formulas (Psi).

enum class SpecKind { Always, Eventually, Until, Trigger, And, Or };

struct SpecNode;
using SpecFormula = std::shared_ptr<const SpecNode>;

/// Child indices: Always/Eventually: 0 = phi. Until: 0 = phi1 (hold), 1 = phi2 (reach).
/// Trigger G(alpha => Psi): 0 = alpha, 1 = Psi. And/Or: 0, 1.
struct SpecNode {
    SpecKind kind = SpecKind::Always;
    Bounds bounds;
    std::vector<StateFormula> state;  // Always/Eventually: 1, Until: 2
    EventFormula trigger;             // Trigger
    std::vector<SpecFormula> children; // Trigger: 1 (the body), And/Or: 2
};

SpecFormula spec_always(Bounds b, StateFormula phi);
SpecFormula spec_eventually(Bounds b, StateFormula phi);
SpecFormula spec_until(Bounds b, StateFormula hold, StateFormula reach);
SpecFormula spec_trigger(EventFormula alpha, SpecFormula body);
SpecFormula spec_and(SpecFormula a, SpecFormula b);
SpecFormula spec_or(SpecFormula a, SpecFormula b);

bool structurally_equal(const StateFormula& a, const StateFormula& b);
bool structurally_equal(const EventFormula& a, const EventFormula& b);
bool structurally_equal(const SpecFormula& a, const SpecFormula& b);

/// Same tree shape, allowing predicates and bounds to differ.
bool same_shape(const SpecFormula& a, const SpecFormula& b);

std::string print_state(const StateFormula& f);
std::string print_event(const EventFormula& f);
std::string print_formula(const SpecFormula& f);

// ---------------------------------------------------------------------------
// Selectors: paths of child indices from the root.

using Selector = std::vector<int>;

std::string selector_to_string(const Selector& s);
Selector parse_selector(const std::string& text);
Selector prefixed(int head, const Selector& tail);

using NodeRef = std::variant<SpecFormula, StateFormula, EventFormula, Predicate>;

/// Resolves a selector; throws NotFound for a path that leaves the tree.
NodeRef select_node(const SpecFormula& root, const Selector& s);

/// Rebuilds the tree with the node at `s` replaced. The replacement must have
/// the same node category as the node it replaces.
SpecFormula replace_node(const SpecFormula& root, const Selector& s, const NodeRef& replacement);

SpecFormula with_bounds(const SpecFormula& root, const Selector& s, Bounds bounds);

/// Applies a function to every predicate in the tree.
template <class F>
void for_each_predicate(const StateFormula& f, F&& fn) {
    if (f->kind == StateKind::Pred || f->kind == StateKind::Not) fn(f->pred);
    for (const auto& c : f->children) for_each_predicate(c, fn);
}

/// Rewrites every expression in every predicate of the tree.
SpecFormula map_expressions(const SpecFormula& f, const Expr& pattern, const Expr& replacement);

/// Replaces every predicate structurally equal to `pattern`.
SpecFormula map_predicates(const SpecFormula& f, const Predicate& pattern, const Predicate& replacement);

// ---------------------------------------------------------------------------
// Documents: declarations plus the formula.

/// Names known to the parser: expression aliases, event atoms and entities.
/// Empty event / entity sets mean "not declared" and leave that namespace open.
struct Schema {
    std::map<std::string, Expr> aliases;
    std::vector<std::string> alias_order;
    std::set<std::string> events;
    std::set<std::string> entities;

    void merge(const Schema& other);
};

struct SpecDocument {
    Schema schema;
    SpecFormula formula;
};

// ---------------------------------------------------------------------------
// Modification commands.

struct AddConjunction {
    SpecFormula clause;
};
struct AddDisjunction {
    SpecFormula clause;
};
struct SetBounds {
    Selector target;
    Bounds bounds;
};
/// Either a selector plus a new predicate, or a pattern (predicate or
/// expression) replaced everywhere.
struct SetPredicate {
    std::optional<Selector> target;
    std::optional<Predicate> predicate;
    std::optional<Predicate> pattern_pred;
    Expr pattern_expr;
    Expr replacement_expr;
};
struct ReplaceFull {
    SpecFormula formula;
};

using ModificationCommand = std::variant<AddConjunction, AddDisjunction, SetBounds, SetPredicate, ReplaceFull>;

std::string command_kind(const ModificationCommand& cmd);

} // namespace respec
