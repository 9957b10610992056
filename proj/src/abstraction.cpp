#include "respec/abstraction.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "respec/error.hpp"

namespace respec {

const char* to_string(PropKind kind) {
    switch (kind) {
    case PropKind::Eventually: return "EVENTUALLY";
    case PropKind::Always: return "ALWAYS";
    case PropKind::Until: return "UNTIL";
    case PropKind::Event: return "EVENT";
    case PropKind::TriggerPred: return "TRIGGER_PRED";
    }
    return "?";
}

namespace {

using Conjunction = std::vector<Predicate>;

/// Disjunctive normal form of a state formula; negated leaves flip the relation.
std::vector<Conjunction> dnf(const StateFormula& f) {
    switch (f->kind) {
    case StateKind::Pred: return {{f->pred}};
    case StateKind::Not: return {{f->pred.negated()}};
    case StateKind::Or: {
        auto a = dnf(f->children[0]);
        auto b = dnf(f->children[1]);
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
    case StateKind::And: {
        auto a = dnf(f->children[0]);
        auto b = dnf(f->children[1]);
        std::vector<Conjunction> out;
        for (const auto& x : a)
            for (const auto& y : b) {
                Conjunction c = x;
                c.insert(c.end(), y.begin(), y.end());
                out.push_back(std::move(c));
            }
        return out;
    }
    }
    return {};
}

class Abstractor {
public:
    explicit Abstractor(std::string ns) : ns_(std::move(ns)) {}

    AbstractFormula run(const SpecFormula& psi) {
        AbstractFormula out;
        out.gamma = spec(psi, {}, ltl_true());
        out.props = std::move(props_);
        std::set<std::string> generated;
        for (const auto& p : out.props)
            if (p.kind != PropKind::Event) generated.insert(p.id);
        for (const auto& p : out.props)
            if (p.kind == PropKind::Event && generated.count(p.id))
                throw Error(ErrorCode::InvalidConfig, "event name '" + p.id + "' collides with a generated proposition id");
        return out;
    }

private:
    std::string ns_;
    std::vector<AbstractProposition> props_;
    std::set<std::string> events_;

    Ltl obligation(PropKind kind, const SpecFormula& f, const Selector& sel, const Ltl& guard,
                   const std::vector<Conjunction>& reach, const std::vector<Conjunction>& hold) {
        std::string base = ns_ + "p" + selector_to_string(sel);
        std::vector<Ltl> parts;
        const std::size_t count = reach.size() * hold.size();
        std::size_t k = 0;
        for (const auto& h : hold)
            for (const auto& r : reach) {
                AbstractProposition p;
                p.id = count > 1 ? base + "#" + std::to_string(k) : base;
                p.kind = kind;
                p.window = f->bounds;
                p.reach = r;
                p.hold = h;
                p.origin = sel;
                p.ns = ns_;
                p.guard = guard;
                Ltl atom = ltl_prop(p.id);
                // An untimed always is an invariant over the whole run; its
                // proposition reads "not violated".
                parts.push_back(kind == PropKind::Always && f->bounds.unbounded() ? ltl_always(atom)
                                                                                  : ltl_eventually(atom));
                props_.push_back(std::move(p));
                ++k;
            }
        return ltl_any(parts);
    }

    Ltl event(const EventFormula& a, const Selector& sel, const Ltl& guard) {
        switch (a->kind) {
        case EventKind::Atom:
            if (events_.insert(a->atom).second) {
                AbstractProposition p;
                p.id = a->atom;
                p.kind = PropKind::Event;
                p.ns = ns_;
                p.guard = ltl_true();
                props_.push_back(std::move(p));
            }
            return ltl_prop(a->atom);
        case EventKind::Pred: {
            AbstractProposition p;
            p.id = ns_ + "t" + selector_to_string(sel);
            p.kind = PropKind::TriggerPred;
            p.reach = {a->pred};
            p.origin = sel;
            p.ns = ns_;
            p.guard = guard;
            props_.push_back(p);
            return ltl_prop(p.id);
        }
        case EventKind::Not: return ltl_not(event(a->children[0], prefixed_path(sel, 0), guard));
        case EventKind::And: {
            Ltl left = event(a->children[0], prefixed_path(sel, 0), guard);
            return ltl_and(left, event(a->children[1], prefixed_path(sel, 1), guard));
        }
        }
        return ltl_true();
    }

    static Selector prefixed_path(Selector s, int i) {
        s.push_back(i);
        return s;
    }

    Ltl spec(const SpecFormula& f, const Selector& sel, const Ltl& guard) {
        switch (f->kind) {
        case SpecKind::Eventually:
            return obligation(PropKind::Eventually, f, sel, guard, dnf(f->state[0]), {Conjunction{}});
        case SpecKind::Always: return obligation(PropKind::Always, f, sel, guard, dnf(f->state[0]), {Conjunction{}});
        case SpecKind::Until:
            return obligation(PropKind::Until, f, sel, guard, dnf(f->state[1]), dnf(f->state[0]));
        case SpecKind::Trigger: {
            Ltl alpha = event(f->trigger, prefixed_path(sel, 0), guard);
            Ltl body = spec(f->children[0], prefixed_path(sel, 1), ltl_and_simplified(guard, alpha));
            return ltl_always(ltl_or(ltl_not(alpha), body));
        }
        case SpecKind::And:
        case SpecKind::Or: {
            // Sequenced so that propositions are listed in source order.
            Ltl left = spec(f->children[0], prefixed_path(sel, 0), guard);
            Ltl right = spec(f->children[1], prefixed_path(sel, 1), guard);
            return f->kind == SpecKind::And ? ltl_and(left, right) : ltl_or(left, right);
        }
        }
        return ltl_true();
    }
};

} // namespace

AbstractFormula abstract_formula(const SpecFormula& psi, const std::string& ns) { return Abstractor(ns).run(psi); }

double satisfaction_margin(const Predicate& mu, double delta) {
    if (mu.relation == Relation::Less && mu.rhs->kind == ExprKind::Constant && mu.rhs->value > 0.0)
        return std::min(delta, 0.5 * mu.rhs->value);
    return delta;
}

std::vector<BarrierTemplate> make_templates(const std::vector<AbstractProposition>& props,
                                            const AbstractionConfig& config) {
    if (!(config.delta_sat > 0.0) || !(config.epsilon >= 0.0) || !(config.gain > 0.0))
        throw Error(ErrorCode::InvalidConfig, "barrier parameters need delta_sat > 0, epsilon >= 0, gain > 0");
    std::vector<BarrierTemplate> out;
    for (const auto& p : props) {
        if (!is_obligation(p.kind)) continue;
        BarrierTemplate t;
        t.prop = p.id;
        t.kind = p.kind;
        t.window = p.window;
        t.gain = config.gain;
        for (const auto& mu : p.reach)
            t.reach.push_back({mu.margin_expr(), satisfaction_margin(mu, config.delta_sat), config.epsilon});
        for (const auto& mu : p.hold) t.hold.push_back({mu.margin_expr(), 0.0, config.epsilon});
        out.push_back(std::move(t));
    }
    return out;
}

AbstractionResult prep_spec(const SpecFormula& psi, const AbstractionConfig& config, const std::string& ns) {
    auto start = std::chrono::steady_clock::now();
    AbstractionResult r;
    AbstractFormula a = abstract_formula(psi, ns);
    r.gamma = a.gamma;
    r.props = std::move(a.props);
    for (const auto& p : r.props) {
        if (p.kind == PropKind::Event) continue;
        auto& list = r.functions[p.id];
        for (const auto& mu : p.hold) list.push_back(mu.margin_expr());
        for (const auto& mu : p.reach) list.push_back(mu.margin_expr());
    }
    r.templates = make_templates(r.props, config);
    TranslateOptions options;
    for (const auto& p : r.props) options.alphabet.insert(p.id);
    auto b = std::make_shared<BuchiAutomaton>(ltl_to_buchi(r.gamma, options));
    r.initial = b->initial;
    r.automaton = std::move(b);
    r.prep_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

const AbstractProposition* find_prop(const std::vector<AbstractProposition>& props, const std::string& id) {
    for (const auto& p : props)
        if (p.id == id) return &p;
    return nullptr;
}

} // namespace respec
