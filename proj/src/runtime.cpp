#include "respec/runtime.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "respec/error.hpp"

namespace respec {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Truth of events and trigger predicates at X0, for deciding which
/// obligations activate on the first update.
TruthAssignment initial_triggers(const std::vector<AbstractProposition>& props, const WorldState& X0) {
    TruthAssignment sigma;
    for (const auto& p : props) {
        if (p.kind == PropKind::Event) sigma[p.id] = X0.events.count(p.id) > 0;
        else if (p.kind == PropKind::TriggerPred) sigma[p.id] = p.reach.at(0).margin(X0) >= 0.0;
    }
    return sigma;
}

std::vector<std::string> trivially_violated(const std::vector<AbstractProposition>& props, const WorldState& X0) {
    TruthAssignment sigma = initial_triggers(props, X0);
    std::vector<std::string> offending;
    auto starts_at_zero = [](const Bounds& w) { return w.lower <= kTimeTolerance; };
    for (const auto& p : props) {
        if (!is_obligation(p.kind) || !eval_guard(p.guard, sigma)) continue;
        bool reach_ok = std::all_of(p.reach.begin(), p.reach.end(), [&](const Predicate& mu) { return mu.margin(X0) >= 0.0; });
        for (const auto& mu : p.reach) {
            double h = mu.margin(X0);
            if (h >= 0.0) continue;
            bool lost = (p.kind == PropKind::Always && starts_at_zero(p.window)) ||
                        (p.kind == PropKind::Eventually && p.window.upper <= kTimeTolerance) ||
                        (p.kind == PropKind::Until && p.window.upper <= kTimeTolerance);
            if (lost) offending.push_back(p.id + ": " + print_predicate(mu));
        }
        if (p.kind == PropKind::Until && !reach_ok)
            for (const auto& mu : p.hold)
                if (mu.margin(X0) < 0.0) offending.push_back(p.id + ": " + print_predicate(mu));
    }
    return offending;
}

bool in_alphabet(const AutomatonSlot& slot, const std::string& prop) {
    return slot.automaton->alphabet.count(prop) > 0;
}

} // namespace

RuntimeContext init(const SpecDocument& doc, const WorldState& X0, const RuntimeConfig& config) {
    config.control.bounds.validate();
    if (config.control.dt <= 0.0) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
    if (config.abstraction.gain * config.control.dt >= 1.0)
        throw Error(ErrorCode::InvalidConfig, "gain x dt must be below 1");
    const auto start = Clock::now();
    AbstractionResult r = prep_spec(doc.formula, config.abstraction);
    RuntimeContext ctx;
    ctx.config = config;
    ctx.spec.schema = doc.schema;
    ctx.spec.formula = doc.formula;
    ctx.spec.clauses.push_back({"", doc.formula, {}, X0.t});
    merge_props(ctx, r.props, r.templates);
    ctx.automata.push_back(make_slot(r.automaton, r.initial, "B"));
    ctx.t = X0.t;
    ctx.prep_ms = ms_since(start);

    auto offending = trivially_violated(ctx.props, X0);
    if (!offending.empty()) {
        std::ostringstream msg;
        msg << "specification is violated at initialization:";
        for (const auto& o : offending) msg << " " << o << ";";
        throw Error(ErrorCode::TriviallyViolatedAtInit, msg.str());
    }
    return ctx;
}

std::string modification_kind(const std::string& command) {
    std::istringstream in(command);
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::string word;
        if (!(words >> word) || word[0] == '#' || word == "let" || word == "events" || word == "entities") continue;
        for (const char* k : {"add-conj", "add-disj", "set-bounds", "set-pred", "replace"})
            if (word == k) return word;
        return "invalid";
    }
    return "invalid";
}

ModificationRecord apply_command(RuntimeContext& ctx, const std::string& command, const WorldState& X) {
    ModificationRecord rec;
    rec.t = X.t;
    rec.command = command;
    rec.kind = modification_kind(command);
    rec.result = apply_modification(ctx, command, X);
    for (const auto& f : rec.result.feedback)
        if (f.kind == FeedbackKind::Revived && ctx.violations[f.prop] > 0) --ctx.violations[f.prop];
    std::ostringstream summary;
    summary << rec.kind << (rec.result.ok ? " applied" : " rejected");
    if (!rec.result.rewritten.empty()) {
        summary << ": rewrote";
        for (const auto& id : rec.result.rewritten) summary << " " << id;
    }
    rec.summary = summary.str();
    return rec;
}

StepReport run_step(RuntimeContext& ctx, const WorldState& X, const WorldState* previous,
                    const std::vector<std::string>& pending_mods) {
    const auto start = Clock::now();
    StepReport report;
    report.t = X.t;
    report.step = ctx.step;
    ctx.t = X.t;

    // Modifications precede planning, so they shape this step's transition.
    for (const auto& command : pending_mods) {
        ModificationRecord rec = apply_command(ctx, command, X);
        report.paused = report.paused || (rec.result.ok && rec.result.cost.cost == CostClass::RequiresPause);
        report.modifications.push_back(std::move(rec));
    }

    report.sigma = update_truth(ctx.props, X, X.events, ctx.monitor, &report.monitor);
    for (const auto& e : report.monitor) {
        if (e.what == "activated") {
            ctx.barriers[e.prop] = activate(ctx.templates.at(e.prop), ctx.monitor.instances.at(e.prop).t_act, X);
        } else if (e.what == "completed" || e.what == "violated") {
            ctx.barriers.erase(e.prop);
            if (e.what == "violated") ++ctx.violations[e.prop];
        }
    }

    auto scores = proposition_scores(ctx.props, X);
    for (auto& slot : ctx.automata) {
        TransitionChoice choice =
            pick_transition(*slot.automaton, *slot.distance, slot.state, ctx.props, report.sigma, scores);
        slot.state = choice.next_state;
        report.rhoset.push_back(std::move(choice));
    }

    report.chosen = choose_automaton(report.rhoset);
    if (ctx.config.method == ChoiceMethod::Commit && report.chosen >= 0 && ctx.automata.size() > 1) {
        // Commit once the choice is strict: the other automata are dropped for good.
        const double best = report.rhoset[report.chosen].rho;
        bool strict = std::none_of(report.rhoset.begin(), report.rhoset.end(), [&](const TransitionChoice& c) {
            return &c != &report.rhoset[report.chosen] && c.rho >= best;
        });
        if (strict) {
            AutomatonSlot keep = ctx.automata[report.chosen];
            TransitionChoice kept = report.rhoset[report.chosen];
            ctx.automata = {keep};
            report.rhoset = {kept};
            report.chosen = 0;
        }
    }
    for (const auto& slot : ctx.automata) report.buchi_states.push_back(slot.state);

    std::set<std::string> activated;
    if (report.chosen >= 0)
        for (const auto& id : report.rhoset[report.chosen].activated) {
            auto it = ctx.monitor.instances.find(id);
            if (it != ctx.monitor.instances.end() && it->second.live() && ctx.barriers.count(id)) activated.insert(id);
        }
    for (const auto& id : activated) {
        bool fresh_instance = std::any_of(report.monitor.begin(), report.monitor.end(), [&](const MonitorEvent& e) {
            return e.prop == id && e.what == "activated";
        });
        if (!ctx.activated.count(id) && !fresh_instance) reanchor_reach(ctx.barriers.at(id), X);
    }
    ctx.activated = activated;
    report.activated.assign(activated.begin(), activated.end());

    std::vector<RowRequest> requests;
    std::vector<const BarrierInstance*> pursued;
    for (const auto& [id, barrier] : ctx.barriers) {
        RowRequest req;
        req.barrier = &barrier;
        bool chosen = activated.count(id) > 0;
        switch (barrier.kind) {
            case PropKind::Always: req.reach = true; break;
            case PropKind::Until: req.hold = true; req.reach = chosen; break;
            default: req.reach = chosen; break;
        }
        if (req.reach || req.hold) requests.push_back(req);
        if (chosen && barrier.kind != PropKind::Always) pursued.push_back(&barrier);
    }
    report.control = generate_control(requests, X, previous, ctx.config.control);
    report.u = report.control.u;
    report.warnings = pre_failure(pursued, X, previous, ctx.config.control.bounds, report.chosen < 0);

    report.violations = run_violations(ctx);
    ++ctx.step;
    report.compute_ms = ms_since(start);
    return report;
}

int run_violations(const RuntimeContext& ctx) {
    if (ctx.automata.empty()) return 0;
    int best = -1;
    for (const auto& slot : ctx.automata) {
        int count = 0;
        for (const auto& [prop, n] : ctx.violations)
            if (in_alphabet(slot, prop)) count += n;
        if (best < 0 || count < best) best = count;
    }
    return best;
}

bool globally_accepted(const RuntimeContext& ctx) {
    for (const auto& slot : ctx.automata) {
        if (!(*slot.on_cycle)[slot.state]) continue;
        bool idle = std::none_of(ctx.monitor.instances.begin(), ctx.monitor.instances.end(), [&](const auto& kv) {
            return kv.second.live() && in_alphabet(slot, kv.first);
        });
        if (idle) return true;
    }
    return false;
}

} // namespace respec
