#include "respec/monitor.hpp"

#include <algorithm>
#include <cmath>

#include "respec/error.hpp"

namespace respec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double min_margin(const std::vector<Predicate>& preds, const WorldState& X) {
    double h = kInf;
    for (const auto& p : preds) h = std::min(h, p.margin(X));
    return h;
}

/// Advances one live instance to time t.
void check_instance(ObligationInstance& inst, const AbstractProposition& prop, const WorldState& X,
                    std::vector<MonitorEvent>* log) {
    if (inst.status != InstanceStatus::Active) return;
    const double t = X.t;
    const double open = inst.t_act + inst.window.lower;
    const double close = inst.t_dead();
    const bool in_window = t >= open - kTimeTolerance && t <= close + kTimeTolerance;
    auto finish = [&](InstanceStatus s, const char* what) {
        inst.status = s;
        inst.t_done = t;
        if (log) log->push_back({t, inst.prop, what, inst.serial});
    };
    switch (inst.kind) {
    case PropKind::Eventually: {
        if (in_window) {
            double h = min_margin(prop.reach, X);
            inst.worst_h = std::min(inst.worst_h, h);
            if (h >= 0.0) return finish(InstanceStatus::Completed, "completed");
        }
        if (t > close + kTimeTolerance) finish(InstanceStatus::Violated, "violated");
        return;
    }
    case PropKind::Always: {
        if (in_window) {
            double h = min_margin(prop.reach, X);
            inst.worst_h = std::min(inst.worst_h, h);
            if (h < 0.0) return finish(InstanceStatus::Violated, "violated");
        }
        if (!inst.window.unbounded() && t >= close - kTimeTolerance) finish(InstanceStatus::Completed, "completed");
        return;
    }
    case PropKind::Until: {
        if (in_window) {
            double h = min_margin(prop.reach, X);
            inst.worst_h = std::min(inst.worst_h, h);
            if (h >= 0.0 && inst.hold_intact) return finish(InstanceStatus::Completed, "completed");
        }
        if (min_margin(prop.hold, X) < 0.0) {
            inst.hold_intact = false;
            return finish(InstanceStatus::Violated, "violated");
        }
        if (t > close + kTimeTolerance) finish(InstanceStatus::Violated, "violated");
        return;
    }
    default:
        return;
    }
}

bool untimed_invariant(const AbstractProposition& p) { return p.kind == PropKind::Always && p.window.unbounded(); }

} // namespace

const char* to_string(InstanceStatus status) {
    switch (status) {
    case InstanceStatus::Inactive: return "inactive";
    case InstanceStatus::Active: return "active";
    case InstanceStatus::Completed: return "completed";
    case InstanceStatus::Violated: return "violated";
    }
    return "?";
}

const char* to_string(ChoiceMethod method) { return method == ChoiceMethod::Commit ? "commit" : "reevaluate"; }

ChoiceMethod choice_method_from_string(const std::string& text) {
    if (text == "commit") return ChoiceMethod::Commit;
    if (text == "reevaluate") return ChoiceMethod::Reevaluate;
    throw Error(ErrorCode::InvalidConfig, "unknown automaton choice method '" + text + "'");
}

bool eval_guard(const Ltl& g, const TruthAssignment& sigma) {
    switch (g->kind) {
    case LtlKind::True: return true;
    case LtlKind::False: return false;
    case LtlKind::Prop: {
        auto it = sigma.find(g->prop);
        return it != sigma.end() && it->second;
    }
    case LtlKind::Not: return !eval_guard(g->args[0], sigma);
    case LtlKind::And: return eval_guard(g->args[0], sigma) && eval_guard(g->args[1], sigma);
    case LtlKind::Or: return eval_guard(g->args[0], sigma) || eval_guard(g->args[1], sigma);
    default: throw Error(ErrorCode::InvalidConfig, "guard is not propositional: " + print_ltl(g));
    }
}

TruthAssignment update_truth(const std::vector<AbstractProposition>& props, const WorldState& X,
                             const std::set<std::string>& events, MonitorState& state,
                             std::vector<MonitorEvent>* log) {
    TruthAssignment sigma;
    for (const auto& p : props) {
        if (p.kind == PropKind::Event) sigma[p.id] = events.count(p.id) > 0;
        else if (p.kind == PropKind::TriggerPred) sigma[p.id] = min_margin(p.reach, X) >= 0.0;
    }
    for (const auto& p : props) {
        if (!is_obligation(p.kind)) continue;
        const bool g = p.guard ? eval_guard(p.guard, sigma) : true;
        bool& previous = state.guard_previous[p.id];
        auto [it, fresh] = state.instances.try_emplace(p.id);
        ObligationInstance& inst = it->second;
        if (fresh) {
            inst.prop = p.id;
            inst.kind = p.kind;
            inst.window = p.window;
        }
        if (g && !previous && !inst.live()) {
            int serial = inst.serial + 1;
            inst = ObligationInstance{};
            inst.prop = p.id;
            inst.kind = p.kind;
            inst.window = p.window;
            inst.serial = serial;
            inst.t_act = X.t;
            inst.status = InstanceStatus::Active;
            if (log) log->push_back({X.t, p.id, "activated", serial});
        }
        previous = g;
        check_instance(inst, p, X, log);
        if (untimed_invariant(p)) sigma[p.id] = inst.status != InstanceStatus::Violated;
        else sigma[p.id] = inst.status == InstanceStatus::Completed;
    }
    return sigma;
}

std::map<std::string, double> proposition_scores(const std::vector<AbstractProposition>& props, const WorldState& X) {
    std::map<std::string, double> out;
    for (const auto& p : props)
        if (p.kind != PropKind::Event) out[p.id] = min_margin(p.reach, X);
    return out;
}

TruthConstraint planning_constraint(const BuchiAutomaton& b, const std::vector<AbstractProposition>& props,
                                    const TruthAssignment& sigma) {
    TruthConstraint c;
    for (const auto& id : b.alphabet) {
        auto s = sigma.find(id);
        const bool value = s != sigma.end() && s->second;
        const AbstractProposition* p = find_prop(props, id);
        if (!p || !is_obligation(p->kind) || untimed_invariant(*p) || value) c[id] = value;
    }
    return c;
}

double score_literal(const Literal& lit, const TruthConstraint& constraint, const std::map<std::string, double>& scores) {
    auto fixed = constraint.find(lit.prop);
    if (fixed != constraint.end()) return fixed->second == lit.positive ? kInf : -kInf;
    auto it = scores.find(lit.prop);
    double h = it == scores.end() ? 0.0 : it->second;
    return lit.positive ? h : -h;
}

int advance_state(const BuchiAutomaton& b, const std::vector<int>& distance, int s, const TruthAssignment& sigma,
                  int preferred) {
    std::set<std::string> truth;
    for (const auto& [id, v] : sigma)
        if (v) truth.insert(id);
    if (preferred >= 0 && satisfied(b.transitions[preferred].label, truth)) return b.transitions[preferred].to;
    int best = -1;
    auto rank = [&](int to) {
        int d = distance[to] < 0 ? std::numeric_limits<int>::max() : distance[to];
        return std::pair{d, to == s ? 0 : 1};
    };
    for (int ti : b.outgoing[s]) {
        const Transition& tr = b.transitions[ti];
        if (!satisfied(tr.label, truth)) continue;
        if (best < 0 || rank(tr.to) < rank(b.transitions[best].to)) best = ti;
    }
    return best < 0 ? s : b.transitions[best].to;
}

TransitionChoice pick_transition(const BuchiAutomaton& b, const std::vector<int>& distance, int s,
                                 const std::vector<AbstractProposition>& props, const TruthAssignment& sigma,
                                 const std::map<std::string, double>& scores) {
    const TruthConstraint constraint = planning_constraint(b, props, sigma);
    int shortest = std::numeric_limits<int>::max();
    std::vector<int> candidates;
    for (int ti : b.outgoing[s]) {
        const Transition& tr = b.transitions[ti];
        if (distance[tr.to] < 0 || !consistent(tr.label, constraint)) continue;
        int len = 1 + distance[tr.to];
        if (len < shortest) {
            shortest = len;
            candidates.clear();
        }
        if (len == shortest) candidates.push_back(ti);
    }

    TransitionChoice out;
    std::size_t best_pending = 0;
    for (int ti : candidates) {
        double rho = kInf;
        std::vector<std::string> pending;
        for (const Literal& lit : b.transitions[ti].label) {
            rho = std::min(rho, score_literal(lit, constraint, scores));
            if (lit.positive && !constraint.count(lit.prop)) {
                const AbstractProposition* p = find_prop(props, lit.prop);
                if (p && is_obligation(p->kind)) pending.push_back(lit.prop);
            }
        }
        bool better = out.transition < 0 || rho > out.rho || (rho == out.rho && pending.size() < best_pending);
        if (better) {
            out.transition = ti;
            out.rho = rho;
            out.activated = pending;
            best_pending = pending.size();
        }
    }
    if (out.transition >= 0) {
        out.no_accepting_path = false;
        out.path_length = shortest;
    }
    out.next_state = advance_state(b, distance, s, sigma, out.transition);
    return out;
}

int choose_automaton(const std::vector<TransitionChoice>& rhoset) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(rhoset.size()); ++i) {
        const auto& c = rhoset[i];
        if (c.no_accepting_path) continue;
        if (best < 0) {
            best = i;
            continue;
        }
        const auto& w = rhoset[best];
        if (c.rho > w.rho || (c.rho == w.rho && c.activated.size() < w.activated.size())) best = i;
    }
    return best;
}

} // namespace respec
