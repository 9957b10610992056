#include "respec/formula.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "respec/error.hpp"

namespace respec {

// ---------------------------------------------------------------------------
// Predicates

Expr Predicate::margin_expr() const {
    return relation == Relation::Less ? make_binary(ExprKind::Subtract, rhs, lhs)
                                      : make_binary(ExprKind::Subtract, lhs, rhs);
}

double Predicate::margin(const WorldState& world) const {
    double l = evaluate(lhs, world);
    double r = evaluate(rhs, world);
    return relation == Relation::Less ? r - l : l - r;
}

PredicateValue eval_predicate(const Predicate& mu, const WorldState& world) {
    double h = mu.margin(world);
    return {h, h >= 0.0};
}

bool structurally_equal(const Predicate& a, const Predicate& b) {
    return a.relation == b.relation && structurally_equal(a.lhs, b.lhs) && structurally_equal(a.rhs, b.rhs);
}

std::string print_predicate(const Predicate& p) {
    return print_expr(p.lhs) + (p.relation == Relation::Less ? " < " : " > ") + print_expr(p.rhs);
}

namespace {

std::string format_bound(double v) {
    if (std::isinf(v)) return "inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace

std::string print_bounds(const Bounds& b) { return "[" + format_bound(b.lower) + "," + format_bound(b.upper) + "]"; }

// ---------------------------------------------------------------------------
// Constructors

StateFormula state_pred(Predicate p) {
    auto n = std::make_shared<StateNode>();
    n->kind = StateKind::Pred;
    n->pred = std::move(p);
    return n;
}

StateFormula state_not(Predicate p) {
    auto n = std::make_shared<StateNode>();
    n->kind = StateKind::Not;
    n->pred = std::move(p);
    return n;
}

StateFormula state_and(StateFormula a, StateFormula b) {
    auto n = std::make_shared<StateNode>();
    n->kind = StateKind::And;
    n->children = {std::move(a), std::move(b)};
    return n;
}

StateFormula state_or(StateFormula a, StateFormula b) {
    auto n = std::make_shared<StateNode>();
    n->kind = StateKind::Or;
    n->children = {std::move(a), std::move(b)};
    return n;
}

EventFormula event_atom(std::string name) {
    auto n = std::make_shared<EventNode>();
    n->kind = EventKind::Atom;
    n->atom = std::move(name);
    return n;
}

EventFormula event_pred(Predicate p) {
    auto n = std::make_shared<EventNode>();
    n->kind = EventKind::Pred;
    n->pred = std::move(p);
    return n;
}

EventFormula event_not(EventFormula a) {
    auto n = std::make_shared<EventNode>();
    n->kind = EventKind::Not;
    n->children = {std::move(a)};
    return n;
}

EventFormula event_and(EventFormula a, EventFormula b) {
    auto n = std::make_shared<EventNode>();
    n->kind = EventKind::And;
    n->children = {std::move(a), std::move(b)};
    return n;
}

namespace {

void check_bounds(const Bounds& b, bool allow_unbounded) {
    if (!(b.lower >= 0.0) || std::isinf(b.lower))
        throw Error(ErrorCode::BoundsReversed, "lower bound must be finite and non-negative");
    if (b.upper < b.lower) throw Error(ErrorCode::BoundsReversed, "bounds " + print_bounds(b) + " are reversed");
    if (!allow_unbounded && std::isinf(b.upper))
        throw Error(ErrorCode::BoundsReversed, "only G may have an unbounded window");
}

std::shared_ptr<SpecNode> spec_node(SpecKind kind) {
    auto n = std::make_shared<SpecNode>();
    n->kind = kind;
    return n;
}

} // namespace

SpecFormula spec_always(Bounds b, StateFormula phi) {
    check_bounds(b, true);
    auto n = spec_node(SpecKind::Always);
    n->bounds = b;
    n->state = {std::move(phi)};
    return n;
}

SpecFormula spec_eventually(Bounds b, StateFormula phi) {
    check_bounds(b, false);
    auto n = spec_node(SpecKind::Eventually);
    n->bounds = b;
    n->state = {std::move(phi)};
    return n;
}

SpecFormula spec_until(Bounds b, StateFormula hold, StateFormula reach) {
    check_bounds(b, false);
    auto n = spec_node(SpecKind::Until);
    n->bounds = b;
    n->state = {std::move(hold), std::move(reach)};
    return n;
}

SpecFormula spec_trigger(EventFormula alpha, SpecFormula body) {
    auto n = spec_node(SpecKind::Trigger);
    n->trigger = std::move(alpha);
    n->children = {std::move(body)};
    return n;
}

SpecFormula spec_and(SpecFormula a, SpecFormula b) {
    auto n = spec_node(SpecKind::And);
    n->children = {std::move(a), std::move(b)};
    return n;
}

SpecFormula spec_or(SpecFormula a, SpecFormula b) {
    auto n = spec_node(SpecKind::Or);
    n->children = {std::move(a), std::move(b)};
    return n;
}

// ---------------------------------------------------------------------------
// Equality

bool structurally_equal(const StateFormula& a, const StateFormula& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    if (a->kind == StateKind::Pred || a->kind == StateKind::Not) return structurally_equal(a->pred, b->pred);
    return structurally_equal(a->children[0], b->children[0]) && structurally_equal(a->children[1], b->children[1]);
}

bool structurally_equal(const EventFormula& a, const EventFormula& b) {
    if (a == b) return true;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
    case EventKind::Atom: return a->atom == b->atom;
    case EventKind::Pred: return structurally_equal(a->pred, b->pred);
    case EventKind::Not: return structurally_equal(a->children[0], b->children[0]);
    case EventKind::And:
        return structurally_equal(a->children[0], b->children[0]) && structurally_equal(a->children[1], b->children[1]);
    }
    return false;
}

bool structurally_equal(const SpecFormula& a, const SpecFormula& b) {
    if (a == b) return true;
    if (a->kind != b->kind || !(a->bounds == b->bounds)) return false;
    for (std::size_t i = 0; i < a->state.size(); ++i)
        if (!structurally_equal(a->state[i], b->state[i])) return false;
    if (a->kind == SpecKind::Trigger && !structurally_equal(a->trigger, b->trigger)) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!structurally_equal(a->children[i], b->children[i])) return false;
    return true;
}

namespace {

bool same_shape(const StateFormula& a, const StateFormula& b) {
    if (a->kind != b->kind) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!same_shape(a->children[i], b->children[i])) return false;
    return true;
}

bool same_shape(const EventFormula& a, const EventFormula& b) {
    if (a->kind != b->kind) return false;
    if (a->kind == EventKind::Atom && a->atom != b->atom) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!same_shape(a->children[i], b->children[i])) return false;
    return true;
}

} // namespace

bool same_shape(const SpecFormula& a, const SpecFormula& b) {
    if (a->kind != b->kind) return false;
    if (a->bounds.unbounded() != b->bounds.unbounded()) return false;
    for (std::size_t i = 0; i < a->state.size(); ++i)
        if (!same_shape(a->state[i], b->state[i])) return false;
    if (a->kind == SpecKind::Trigger && !same_shape(a->trigger, b->trigger)) return false;
    for (std::size_t i = 0; i < a->children.size(); ++i)
        if (!same_shape(a->children[i], b->children[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Printing

std::string print_state(const StateFormula& f) {
    switch (f->kind) {
    case StateKind::Pred: return print_predicate(f->pred);
    case StateKind::Not: return "!(" + print_predicate(f->pred) + ")";
    case StateKind::And: return "(" + print_state(f->children[0]) + ") & (" + print_state(f->children[1]) + ")";
    case StateKind::Or: return "(" + print_state(f->children[0]) + ") | (" + print_state(f->children[1]) + ")";
    }
    return {};
}

std::string print_event(const EventFormula& f) {
    switch (f->kind) {
    case EventKind::Atom: return f->atom;
    case EventKind::Pred: return print_predicate(f->pred);
    case EventKind::Not: return "!(" + print_event(f->children[0]) + ")";
    case EventKind::And: return "(" + print_event(f->children[0]) + ") & (" + print_event(f->children[1]) + ")";
    }
    return {};
}

std::string print_formula(const SpecFormula& f) {
    switch (f->kind) {
    case SpecKind::Always: return "G" + print_bounds(f->bounds) + "(" + print_state(f->state[0]) + ")";
    case SpecKind::Eventually: return "F" + print_bounds(f->bounds) + "(" + print_state(f->state[0]) + ")";
    case SpecKind::Until:
        return "(" + print_state(f->state[0]) + ") U" + print_bounds(f->bounds) + " (" + print_state(f->state[1]) + ")";
    case SpecKind::Trigger: return "G(" + print_event(f->trigger) + " => " + print_formula(f->children[0]) + ")";
    case SpecKind::And: return "(" + print_formula(f->children[0]) + ") & (" + print_formula(f->children[1]) + ")";
    case SpecKind::Or: return "(" + print_formula(f->children[0]) + ") | (" + print_formula(f->children[1]) + ")";
    }
    return {};
}

// ---------------------------------------------------------------------------
// Selectors

std::string selector_to_string(const Selector& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += '.';
        out += std::to_string(s[i]);
    }
    return out;
}

Selector parse_selector(const std::string& text) {
    Selector s;
    std::string t = !text.empty() && text[0] == '@' ? text.substr(1) : text;
    if (t.empty() || t == "root") return s;
    std::stringstream ss(t);
    std::string part;
    while (std::getline(ss, part, '.')) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc() || ptr != part.data() + part.size() || v < 0)
            throw Error(ErrorCode::Syntax, "bad selector '" + text + "'");
        s.push_back(v);
    }
    return s;
}

Selector prefixed(int head, const Selector& tail) {
    Selector s{head};
    s.insert(s.end(), tail.begin(), tail.end());
    return s;
}

namespace {

[[noreturn]] void not_found(const Selector& s) {
    throw Error(ErrorCode::NotFound, "selector @" + selector_to_string(s) + " does not name a node");
}

NodeRef select_state(const StateFormula& f, const Selector& s, std::size_t i) {
    if (i == s.size()) return f;
    int c = s[i];
    if (f->kind == StateKind::Not && c == 0 && i + 1 == s.size()) return f->pred;
    if ((f->kind == StateKind::And || f->kind == StateKind::Or) && (c == 0 || c == 1))
        return select_state(f->children[c], s, i + 1);
    not_found(s);
}

NodeRef select_event(const EventFormula& f, const Selector& s, std::size_t i) {
    if (i == s.size()) return f;
    int c = s[i];
    if (c >= 0 && static_cast<std::size_t>(c) < f->children.size()) return select_event(f->children[c], s, i + 1);
    not_found(s);
}

NodeRef select_spec(const SpecFormula& f, const Selector& s, std::size_t i) {
    if (i == s.size()) return f;
    int c = s[i];
    switch (f->kind) {
    case SpecKind::Always:
    case SpecKind::Eventually:
        if (c == 0) return select_state(f->state[0], s, i + 1);
        break;
    case SpecKind::Until:
        if (c == 0 || c == 1) return select_state(f->state[c], s, i + 1);
        break;
    case SpecKind::Trigger:
        if (c == 0) return select_event(f->trigger, s, i + 1);
        if (c == 1) return select_spec(f->children[0], s, i + 1);
        break;
    case SpecKind::And:
    case SpecKind::Or:
        if (c == 0 || c == 1) return select_spec(f->children[c], s, i + 1);
        break;
    }
    not_found(s);
}

StateFormula replace_state(const StateFormula& f, const Selector& s, std::size_t i, const NodeRef& r) {
    if (i == s.size()) {
        if (auto p = std::get_if<StateFormula>(&r)) return *p;
        if (auto p = std::get_if<Predicate>(&r)) return f->kind == StateKind::Not ? state_not(*p) : state_pred(*p);
        throw Error(ErrorCode::TypeMismatch, "replacement is not a state formula");
    }
    int c = s[i];
    if (f->kind == StateKind::Not && c == 0 && i + 1 == s.size()) {
        if (auto p = std::get_if<Predicate>(&r)) return state_not(*p);
        throw Error(ErrorCode::TypeMismatch, "replacement is not a predicate");
    }
    if ((f->kind == StateKind::And || f->kind == StateKind::Or) && (c == 0 || c == 1)) {
        auto a = f->children[0];
        auto b = f->children[1];
        (c == 0 ? a : b) = replace_state(f->children[c], s, i + 1, r);
        return f->kind == StateKind::And ? state_and(a, b) : state_or(a, b);
    }
    not_found(s);
}

EventFormula replace_event(const EventFormula& f, const Selector& s, std::size_t i, const NodeRef& r) {
    if (i == s.size()) {
        if (auto p = std::get_if<EventFormula>(&r)) return *p;
        if (auto p = std::get_if<Predicate>(&r)) return event_pred(*p);
        throw Error(ErrorCode::TypeMismatch, "replacement is not an event formula");
    }
    int c = s[i];
    if (f->kind == EventKind::Not && c == 0) return event_not(replace_event(f->children[0], s, i + 1, r));
    if (f->kind == EventKind::And && (c == 0 || c == 1)) {
        auto a = f->children[0];
        auto b = f->children[1];
        (c == 0 ? a : b) = replace_event(f->children[c], s, i + 1, r);
        return event_and(a, b);
    }
    not_found(s);
}

SpecFormula rebuild(const SpecFormula& f, std::vector<StateFormula> state, EventFormula trigger,
                    std::vector<SpecFormula> children) {
    auto n = std::make_shared<SpecNode>(*f);
    n->state = std::move(state);
    n->trigger = std::move(trigger);
    n->children = std::move(children);
    return n;
}

SpecFormula replace_spec(const SpecFormula& f, const Selector& s, std::size_t i, const NodeRef& r) {
    if (i == s.size()) {
        if (auto p = std::get_if<SpecFormula>(&r)) return *p;
        throw Error(ErrorCode::TypeMismatch, "replacement is not a specification formula");
    }
    int c = s[i];
    auto state = f->state;
    auto trigger = f->trigger;
    auto children = f->children;
    switch (f->kind) {
    case SpecKind::Always:
    case SpecKind::Eventually:
    case SpecKind::Until:
        if (c < 0 || static_cast<std::size_t>(c) >= state.size()) not_found(s);
        state[c] = replace_state(state[c], s, i + 1, r);
        break;
    case SpecKind::Trigger:
        if (c == 0) trigger = replace_event(trigger, s, i + 1, r);
        else if (c == 1) children[0] = replace_spec(children[0], s, i + 1, r);
        else not_found(s);
        break;
    case SpecKind::And:
    case SpecKind::Or:
        if (c != 0 && c != 1) not_found(s);
        children[c] = replace_spec(children[c], s, i + 1, r);
        break;
    }
    return rebuild(f, std::move(state), std::move(trigger), std::move(children));
}

} // namespace

NodeRef select_node(const SpecFormula& root, const Selector& s) { return select_spec(root, s, 0); }

SpecFormula replace_node(const SpecFormula& root, const Selector& s, const NodeRef& replacement) {
    return replace_spec(root, s, 0, replacement);
}

SpecFormula with_bounds(const SpecFormula& root, const Selector& s, Bounds bounds) {
    NodeRef ref = select_node(root, s);
    auto node = std::get_if<SpecFormula>(&ref);
    if (!node || !(*node)->state.size())
        throw Error(ErrorCode::NotFound, "selector @" + selector_to_string(s) + " is not a temporal operator");
    const SpecFormula& op = *node;
    SpecFormula updated;
    switch (op->kind) {
    case SpecKind::Always: updated = spec_always(bounds, op->state[0]); break;
    case SpecKind::Eventually: updated = spec_eventually(bounds, op->state[0]); break;
    default: updated = spec_until(bounds, op->state[0], op->state[1]); break;
    }
    return replace_node(root, s, updated);
}

namespace {

template <class PredFn>
StateFormula map_state(const StateFormula& f, PredFn&& fn) {
    switch (f->kind) {
    case StateKind::Pred: return state_pred(fn(f->pred));
    case StateKind::Not: return state_not(fn(f->pred));
    case StateKind::And: return state_and(map_state(f->children[0], fn), map_state(f->children[1], fn));
    case StateKind::Or: return state_or(map_state(f->children[0], fn), map_state(f->children[1], fn));
    }
    return f;
}

template <class PredFn>
EventFormula map_event(const EventFormula& f, PredFn&& fn) {
    switch (f->kind) {
    case EventKind::Atom: return f;
    case EventKind::Pred: return event_pred(fn(f->pred));
    case EventKind::Not: return event_not(map_event(f->children[0], fn));
    case EventKind::And: return event_and(map_event(f->children[0], fn), map_event(f->children[1], fn));
    }
    return f;
}

template <class PredFn>
SpecFormula map_spec(const SpecFormula& f, PredFn&& fn) {
    std::vector<StateFormula> state;
    for (const auto& s : f->state) state.push_back(map_state(s, fn));
    EventFormula trigger = f->trigger ? map_event(f->trigger, fn) : nullptr;
    std::vector<SpecFormula> children;
    for (const auto& c : f->children) children.push_back(map_spec(c, fn));
    auto out = rebuild(f, std::move(state), std::move(trigger), std::move(children));
    // Keep the original node when nothing changed so unchanged subtrees stay shared.
    return structurally_equal(out, f) ? f : out;
}

} // namespace

SpecFormula map_expressions(const SpecFormula& f, const Expr& pattern, const Expr& replacement) {
    return map_spec(f, [&](const Predicate& p) {
        return Predicate{substitute(p.lhs, pattern, replacement), p.relation, substitute(p.rhs, pattern, replacement)};
    });
}

SpecFormula map_predicates(const SpecFormula& f, const Predicate& pattern, const Predicate& replacement) {
    return map_spec(f, [&](const Predicate& p) { return structurally_equal(p, pattern) ? replacement : p; });
}

void Schema::merge(const Schema& other) {
    for (const auto& name : other.alias_order) {
        if (!aliases.count(name)) alias_order.push_back(name);
        aliases[name] = other.aliases.at(name);
    }
    events.insert(other.events.begin(), other.events.end());
    entities.insert(other.entities.begin(), other.entities.end());
}

std::string command_kind(const ModificationCommand& cmd) {
    return std::visit(
        [](const auto& c) -> std::string {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, AddConjunction>) return "add-conj";
            else if constexpr (std::is_same_v<T, AddDisjunction>) return "add-disj";
            else if constexpr (std::is_same_v<T, SetBounds>) return "set-bounds";
            else if constexpr (std::is_same_v<T, SetPredicate>) return "set-pred";
            else return "replace";
        },
        cmd);
}

} // namespace respec
