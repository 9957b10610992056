#include "respec/modification.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "respec/error.hpp"

namespace respec {

namespace {

bool is_prefix(const Selector& prefix, const Selector& s) {
    return prefix.size() <= s.size() && std::equal(prefix.begin(), prefix.end(), s.begin());
}

SpecFormula as_spec(const NodeRef& ref, const Selector& s) {
    if (auto f = std::get_if<SpecFormula>(&ref)) return *f;
    throw Error(ErrorCode::NotFound, "selector @" + selector_to_string(s) + " is not a specification node");
}

bool same_predicates(const std::vector<Predicate>& a, const std::vector<Predicate>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!structurally_equal(a[i], b[i])) return false;
    return true;
}

bool same_content(const AbstractProposition& a, const AbstractProposition& b) {
    return a.window == b.window && same_predicates(a.reach, b.reach) && same_predicates(a.hold, b.hold);
}

void diff_left_spine(const SpecState& spec, const SpecFormula& target, ModificationDiff& diff) {
    if (same_shape(spec.formula, target)) {
        for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
            const auto& c = spec.clauses[i];
            SpecFormula updated = as_spec(select_node(target, c.path), c.path);
            if (!structurally_equal(updated, c.formula)) diff.rewrites.push_back({i, updated});
        }
        return;
    }
    if (target->kind == SpecKind::And || target->kind == SpecKind::Or) {
        diff_left_spine(spec, target->children[0], diff);
        diff.additions.push_back({target->children[1], target->kind == SpecKind::And});
        return;
    }
    throw Error(ErrorCode::UndiffableChange,
                "the new formula is not the current one with appended clauses or in-place edits; "
                "express the change as add-conj / add-disj / set-bounds / set-pred");
}

/// Rewrites of the same clause compose.
void add_rewrite(ModificationDiff& diff, std::size_t clause, SpecFormula formula) {
    for (auto& r : diff.rewrites)
        if (r.clause == clause) {
            r.formula = std::move(formula);
            return;
        }
    diff.rewrites.push_back({clause, std::move(formula)});
}

bool relevant_anywhere(const RuntimeContext& ctx, const AbstractProposition& p) {
    for (const auto& slot : ctx.automata) {
        if (!slot.automaton->alphabet.count(p.id)) continue;
        if (p.kind == PropKind::TriggerPred) return true;
        if (proposition_relevant(*slot.automaton, slot.state, p.id)) return true;
    }
    return false;
}

void rebuild_formula(SpecState& spec) {
    for (const auto& c : spec.clauses) spec.formula = replace_node(spec.formula, c.path, c.formula);
}

std::string describe(const AbstractProposition& p) {
    std::string s;
    for (const auto& mu : p.hold) s += (s.empty() ? "" : " & ") + print_predicate(mu);
    if (!p.hold.empty()) s = "(" + s + ") U ";
    std::string r;
    for (const auto& mu : p.reach) r += (r.empty() ? "" : " & ") + print_predicate(mu);
    char buf[64];
    std::snprintf(buf, sizeof buf, "[%g,%g] ", p.window.lower, p.window.upper);
    return (is_obligation(p.kind) ? std::string(buf) : std::string()) + s + r;
}

} // namespace

std::string ModificationDiff::summary() const {
    std::string s;
    for (const auto& a : additions) s += std::string(s.empty() ? "" : "; ") + (a.conjunction ? "and " : "or ") + print_formula(a.clause);
    for (const auto& r : rewrites)
        s += std::string(s.empty() ? "" : "; ") + "rewrite clause " + std::to_string(r.clause) + " to " + print_formula(r.formula);
    return s.empty() ? "no change" : s;
}

const char* to_string(FeedbackKind kind) {
    switch (kind) {
    case FeedbackKind::Applied: return "Applied";
    case FeedbackKind::RequiresPause: return "RequiresPause";
    case FeedbackKind::IrrelevantModification: return "IrrelevantModification";
    case FeedbackKind::RecommendConjunction: return "RecommendConjunction";
    case FeedbackKind::Revived: return "Revived";
    }
    return "?";
}

const char* to_string(CostClass c) { return c == CostClass::InStep ? "in-step" : "requires-pause"; }

std::pair<std::size_t, Selector> locate(const SpecState& spec, const Selector& global) {
    for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
        const auto& c = spec.clauses[i];
        if (is_prefix(c.path, global)) return {i, Selector(global.begin() + static_cast<long>(c.path.size()), global.end())};
    }
    throw Error(ErrorCode::NotFound, "selector @" + selector_to_string(global) + " addresses a clause combinator");
}

ModificationDiff find_mods(const SpecState& spec, const ModificationCommand& cmd) {
    ModificationDiff diff;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, AddConjunction>) {
                diff.additions.push_back({c.clause, true});
            } else if constexpr (std::is_same_v<T, AddDisjunction>) {
                diff.additions.push_back({c.clause, false});
            } else if constexpr (std::is_same_v<T, SetBounds>) {
                auto [i, local] = locate(spec, c.target);
                auto updated = with_bounds(spec.clauses[i].formula, local, c.bounds);
                if (!structurally_equal(updated, spec.clauses[i].formula)) add_rewrite(diff, i, updated);
            } else if constexpr (std::is_same_v<T, SetPredicate>) {
                if (c.target) {
                    auto [i, local] = locate(spec, *c.target);
                    NodeRef ref = select_node(spec.clauses[i].formula, local);
                    bool leaf = std::holds_alternative<Predicate>(ref);
                    if (auto s = std::get_if<StateFormula>(&ref)) leaf = (*s)->kind == StateKind::Pred || (*s)->kind == StateKind::Not;
                    if (auto e = std::get_if<EventFormula>(&ref)) leaf = (*e)->kind == EventKind::Pred;
                    if (!leaf) throw Error(ErrorCode::NotFound, "selector @" + selector_to_string(*c.target) + " is not a predicate");
                    auto updated = replace_node(spec.clauses[i].formula, local, *c.predicate);
                    if (!structurally_equal(updated, spec.clauses[i].formula)) add_rewrite(diff, i, updated);
                    return;
                }
                for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
                    const auto& f = spec.clauses[i].formula;
                    SpecFormula updated = c.pattern_pred ? map_predicates(f, *c.pattern_pred, *c.predicate)
                                                         : map_expressions(f, c.pattern_expr, c.replacement_expr);
                    if (!structurally_equal(updated, f)) add_rewrite(diff, i, updated);
                }
            } else {
                diff_left_spine(spec, c.formula, diff);
            }
        },
        cmd);
    return diff;
}

ModificationDiff find_mods(const SpecState& spec, const SpecFormula& psi_new) {
    ModificationDiff diff;
    diff_left_spine(spec, psi_new, diff);
    return diff;
}

CostEstimate classify_cost(const RuntimeContext& ctx, const ModificationDiff& diff) {
    CostEstimate est;
    est.estimate_ms = 0.05 * static_cast<double>(diff.rewrites.size());
    double transitions = 0.0;
    for (const auto& slot : ctx.automata) transitions += static_cast<double>(slot.automaton->transitions.size());
    for (const auto& a : diff.additions) {
        int obligations = 0, triggers = 0, events = 0;
        for (const auto& p : abstract_formula(a.clause, "x:").props) {
            obligations += is_obligation(p.kind);
            triggers += p.kind == PropKind::TriggerPred;
            events += p.kind == PropKind::Event;
        }
        est.estimate_ms += 2e-3 * std::pow(2.0, 2 * obligations + triggers);
        if (a.conjunction) {
            est.estimate_ms += 2.5e-3 * transitions * std::pow(2.0, obligations + triggers + events);
            transitions *= std::pow(2.0, obligations + triggers + events);
        } else {
            transitions += std::pow(2.0, 2 * obligations + triggers);
        }
    }
    const double budget = ctx.config.pause_budget * ctx.config.control.dt * 1000.0;
    est.cost = !diff.additions.empty() && est.estimate_ms > budget ? CostClass::RequiresPause : CostClass::InStep;
    return est;
}

namespace {

void apply_rewrite(RuntimeContext& ctx, const AbstractProposition& updated, const WorldState& X,
                   std::vector<Feedback>& feedback) {
    auto it = std::find_if(ctx.props.begin(), ctx.props.end(), [&](const auto& p) { return p.id == updated.id; });
    if (it == ctx.props.end()) throw Error(ErrorCode::UnknownProposition, "no proposition '" + updated.id + "'");
    const std::string before = describe(*it);
    it->window = updated.window;
    it->reach = updated.reach;
    it->hold = updated.hold;
    if (!is_obligation(it->kind)) {
        feedback.push_back({FeedbackKind::Applied, it->id, selector_to_string(it->origin), before + " -> " + describe(*it)});
        return;
    }
    BarrierTemplate tmpl = make_templates({*it}, ctx.config.abstraction).at(0);
    ctx.templates[it->id] = tmpl;
    feedback.push_back({FeedbackKind::Applied, it->id, selector_to_string(it->origin), before + " -> " + describe(*it)});
    auto inst = ctx.monitor.instances.find(it->id);
    if (inst == ctx.monitor.instances.end()) return;
    ObligationInstance& o = inst->second;
    o.window = it->window;
    if (o.status == InstanceStatus::Violated && X.t <= o.t_dead() + kTimeTolerance &&
        X.t >= o.t_act - kTimeTolerance) {
        o.status = InstanceStatus::Active;
        o.t_done = std::numeric_limits<double>::quiet_NaN();
        o.hold_intact = true;
        feedback.push_back({FeedbackKind::Revived, it->id, selector_to_string(it->origin),
                            "the new window still contains the current time; the instance is live again"});
    }
    if (o.live()) ctx.barriers[it->id] = activate(tmpl, o.t_act, X);
}

} // namespace

bool modify_prop(RuntimeContext& ctx, const AbstractProposition& updated, const WorldState& X,
                 std::vector<Feedback>& feedback) {
    const AbstractProposition* current = find_prop(ctx.props, updated.id);
    if (!current) throw Error(ErrorCode::UnknownProposition, "no proposition '" + updated.id + "'");
    if (!relevant_anywhere(ctx, *current)) return false;
    apply_rewrite(ctx, updated, X, feedback);
    return true;
}

ModificationResult modify(RuntimeContext& ctx, const ModificationDiff& diff, const WorldState& X) {
    const auto start = std::chrono::steady_clock::now();
    ModificationResult result;
    result.cost = classify_cost(ctx, diff);
    RuntimeContext work = ctx;
    try {
        work.spec.schema.merge(diff.declarations);
        for (const auto& add : diff.additions) {
            const std::string ns = "c" + std::to_string(work.spec.next_clause++) + ":";
            AbstractionResult r = prep_spec(add.clause, work.config.abstraction, ns);
            merge_props(work, r.props, r.templates);
            if (add.conjunction) {
                for (auto& slot : work.automata) {
                    auto product = std::make_shared<const BuchiAutomaton>(
                        intersect(*slot.automaton, *r.automaton, slot.state, r.initial));
                    slot = make_slot(product, product->initial, "(" + slot.origin + ") x " + ns);
                }
            } else {
                work.automata.push_back(make_slot(r.automaton, r.initial, ns));
            }
            for (auto& c : work.spec.clauses) c.path = prefixed(0, c.path);
            work.spec.formula = add.conjunction ? spec_and(work.spec.formula, add.clause) : spec_or(work.spec.formula, add.clause);
            work.spec.clauses.push_back({ns, add.clause, {1}, X.t});
            result.feedback.push_back({FeedbackKind::Applied, "", "1",
                                       std::string(add.conjunction ? "conjoined " : "disjoined ") + print_formula(add.clause)});
        }

        for (const auto& rw : diff.rewrites) {
            Clause& clause = work.spec.clauses.at(rw.clause);
            AbstractFormula old_abs = abstract_formula(clause.formula, clause.ns);
            AbstractFormula new_abs = abstract_formula(rw.formula, clause.ns);
            bool same = print_ltl(old_abs.gamma) == print_ltl(new_abs.gamma) && old_abs.props.size() == new_abs.props.size();
            for (std::size_t i = 0; same && i < old_abs.props.size(); ++i)
                same = old_abs.props[i].id == new_abs.props[i].id && old_abs.props[i].kind == new_abs.props[i].kind;
            if (!same)
                throw Error(ErrorCode::UndiffableChange, "the rewrite changes the clause structure; attach it by conjunction instead");

            // Props sharing an origin (disjuncts of one operator) move together.
            std::map<Selector, std::vector<const AbstractProposition*>> groups;
            for (std::size_t i = 0; i < new_abs.props.size(); ++i)
                if (!same_content(old_abs.props[i], new_abs.props[i])) groups[new_abs.props[i].origin].push_back(&new_abs.props[i]);
            SpecFormula final_formula = rw.formula;
            for (const auto& [origin, members] : groups) {
                bool relevant = false;
                for (const auto* p : members) relevant = relevant || relevant_anywhere(work, *find_prop(work.props, p->id));
                if (relevant) {
                    for (const auto* p : members) {
                        apply_rewrite(work, *p, X, result.feedback);
                        result.rewritten.push_back(p->id);
                    }
                    continue;
                }
                final_formula = replace_node(final_formula, origin, select_node(clause.formula, origin));
                const std::string& id = members.front()->id;
                result.feedback.push_back({FeedbackKind::IrrelevantModification, id, selector_to_string(origin),
                                           "'" + id + "' is no longer relevant for the task: no reachable transition requires it"});
                result.feedback.push_back({FeedbackKind::RecommendConjunction, id, selector_to_string(origin),
                                           "add the new task via conjunction (add-conj) instead"});
            }
            clause.formula = final_formula;
        }
        rebuild_formula(work.spec);
    } catch (const Error& e) {
        result.ok = false;
        result.error = e.what();
        result.error_code = to_string(e.code());
        result.feedback.clear();
        result.rewritten.clear();
        result.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        return result;
    }
    result.timing_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (result.cost.cost == CostClass::RequiresPause) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "structural change estimated at %.1f ms; the clock was paused", result.cost.estimate_ms);
        result.feedback.push_back({FeedbackKind::RequiresPause, "", "", buf});
    }
    ctx = std::move(work);
    result.ok = true;
    return result;
}

ModificationResult apply_modification(RuntimeContext& ctx, const std::string& text, const WorldState& X) {
    ModificationDiff diff;
    try {
        ParsedModification parsed = parse_modification(text, ctx.spec.schema);
        diff = find_mods(ctx.spec, parsed.command);
        diff.declarations = parsed.declarations;
    } catch (const Error& e) {
        ModificationResult r;
        r.error = e.what();
        r.error_code = to_string(e.code());
        return r;
    }
    return modify(ctx, diff, X);
}

} // namespace respec
