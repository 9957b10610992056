#include "respec/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "respec/error.hpp"

namespace respec {

double Schedule::value(double t) const {
    if (t <= t0 || t1 <= t0) return t <= t0 ? g0 : g1;
    if (t >= t1) return g1;
    return g0 + (g1 - g0) * (t - t0) / (t1 - t0);
}

double Schedule::rate(double t) const {
    if (t1 <= t0 || t < t0 || t >= t1) return 0.0;
    return (g1 - g0) / (t1 - t0);
}

Schedule reach_schedule(PropKind kind, const Bounds& window, double t_act, double t_anchor, double h, double delta,
                        double epsilon) {
    const double start = std::min(h - epsilon, delta);
    double end = t_act + window.upper;
    if (kind == PropKind::Always) {
        end = t_act + window.lower;
        if (t_anchor >= end) {
            double g = std::min(h, delta);
            return {t_anchor, g, t_anchor, g};
        }
    }
    if (t_anchor >= end || !std::isfinite(end)) return {t_anchor, delta, t_anchor, delta};
    return {t_anchor, start, end, delta};
}

namespace {

void anchor_reach(BarrierInstance& b, const WorldState& X) {
    for (auto& p : b.reach)
        p.gamma = reach_schedule(b.kind, b.window, b.t_act, X.t, evaluate(p.h, X), p.delta_sat, p.epsilon);
}

std::string format(const char* fmt, const std::string& a, double x, double y, double z) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a.c_str(), x, y, z);
    return buf;
}

/// Snapshot with the robot of X and the entities of `other`.
WorldState with_entities(const WorldState& X, const WorldState& other) {
    WorldState w = X;
    w.entities = other.entities;
    return w;
}

} // namespace

BarrierInstance activate(const BarrierTemplate& tmpl, double t_act, const WorldState& X) {
    BarrierInstance b;
    b.prop = tmpl.prop;
    b.kind = tmpl.kind;
    b.window = tmpl.window;
    b.t_act = t_act;
    b.gain = tmpl.gain;
    for (const auto& p : tmpl.reach) b.reach.push_back({p.h, p.delta_sat, p.epsilon, {}});
    for (const auto& p : tmpl.hold) {
        double g = std::min(0.0, evaluate(p.h, X));
        b.hold.push_back({p.h, p.delta_sat, p.epsilon, {X.t, g, X.t, g}});
    }
    anchor_reach(b, X);
    return b;
}

void reanchor_reach(BarrierInstance& barrier, const WorldState& X) { anchor_reach(barrier, X); }

EvalResult grad_h(const Expr& h, const WorldState& X) { return differentiate(h, X); }

double entity_rate(const Expr& h, const WorldState& X, const WorldState* previous) {
    if (!previous || !(X.t > previous->t) || previous->entities == X.entities) return 0.0;
    return (evaluate(h, X) - evaluate(h, with_entities(X, *previous))) / (X.t - previous->t);
}

namespace {

struct Row {
    ControlRow row;
    RowDiagnostic diag;
    const BarrierPredicate* pred = nullptr;
    double gain = 1.0;
};

/// One-step prediction: robot integrated under u, entities extrapolated linearly.
WorldState predict(const WorldState& X, const WorldState* previous, const ChannelVector& u, double dt) {
    WorldState next = X;
    next.t = X.t + dt;
    next.robot = integrate(X.robot, u, dt);
    if (previous && X.t > previous->t) {
        double s = dt / (X.t - previous->t);
        for (auto& [name, pos] : next.entities) {
            auto it = previous->entities.find(name);
            if (it == previous->entities.end()) continue;
            pos.x += s * (pos.x - it->second.x);
            pos.y += s * (pos.y - it->second.y);
            pos.z += s * (pos.z - it->second.z);
        }
    }
    return next;
}

} // namespace

ControlOutput generate_control(const std::vector<RowRequest>& requests, const WorldState& X,
                               const WorldState* previous, const ControlConfig& config) {
    if (!(config.dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "control period must be positive");
    ControlOutput out;
    std::vector<Row> rows;
    auto add = [&](const BarrierInstance& b, const BarrierPredicate& p, const char* part, std::size_t i) {
        if (b.gain * config.dt >= 1.0) throw Error(ErrorCode::InvalidConfig, "class-K gain times dt must be below 1");
        EvalResult g = differentiate(p.h, X);
        out.perturbed = out.perturbed || g.perturbed;
        Row r;
        r.pred = &p;
        r.gain = b.gain;
        r.diag.prop = b.prop;
        r.diag.label = b.prop + "/" + part + std::to_string(i);
        r.diag.h = g.value;
        r.diag.gamma = p.gamma.value(X.t);
        r.row.label = r.diag.label;
        r.row.grad = g.grad;
        r.row.rhs = p.gamma.rate(X.t) - entity_rate(p.h, X, previous) - b.gain * (g.value - r.diag.gamma);
        for (const auto& other : rows)
            if (other.row.grad == r.row.grad && other.row.rhs == r.row.rhs) return;
        rows.push_back(std::move(r));
    };
    for (const auto& req : requests) {
        if (req.reach)
            for (std::size_t i = 0; i < req.barrier->reach.size(); ++i) add(*req.barrier, req.barrier->reach[i], "reach", i);
        if (req.hold)
            for (std::size_t i = 0; i < req.barrier->hold.size(); ++i) add(*req.barrier, req.barrier->hold[i], "hold", i);
    }

    auto solve = [&]() {
        std::vector<ControlRow> qp_rows;
        qp_rows.reserve(rows.size());
        for (const auto& r : rows) qp_rows.push_back(r.row);
        return solve_control_qp(qp_rows, config.bounds);
    };

    ControlQpResult best = solve();
    out.iterations = best.iterations;
    for (int pass = 0; pass < config.refinements && !best.relaxed && !rows.empty(); ++pass) {
        WorldState next = predict(X, previous, best.u, config.dt);
        bool tightened = false;
        for (auto& r : rows) {
            double b = r.diag.h - r.diag.gamma;
            double b_next = evaluate(r.pred->h, next) - r.pred->gamma.value(next.t);
            double need = (1.0 - r.gain * config.dt) * b;
            if (b_next < need - 1e-12) {
                r.row.rhs += (need - b_next) / config.dt + 1e-12;
                tightened = true;
            }
        }
        if (!tightened) break;
        ControlQpResult again = solve();
        out.iterations += again.iterations;
        ++out.refinements;
        if (again.relaxed) break;
        best = again;
    }

    out.u = best.u;
    out.relaxed = best.relaxed;
    out.kkt_residual = best.kkt_residual;
    for (std::size_t j = 0; j < rows.size(); ++j) {
        rows[j].diag.rhs = rows[j].row.rhs;
        rows[j].diag.slack = best.slack.empty() ? 0.0 : best.slack[j];
        out.rows.push_back(rows[j].diag);
    }
    return out;
}

double achievable_rate(const Expr& h, const WorldState& X, const WorldState* previous, const ControlBounds& bounds) {
    EvalResult g = differentiate(h, X);
    double r = entity_rate(h, X, previous);
    for (int i = 0; i < kChannels; ++i) r += std::abs(g.grad[i]) * bounds.caps[i];
    return r;
}

std::vector<PreFailureWarning> pre_failure(const std::vector<const BarrierInstance*>& activated, const WorldState& X,
                                           const WorldState* previous, const ControlBounds& bounds,
                                           bool no_accepting_path) {
    std::vector<PreFailureWarning> out;
    for (const BarrierInstance* b : activated) {
        double target = b->t_dead();
        if (b->kind == PropKind::Always) {
            target = b->t_act + b->window.lower;
            if (X.t >= target) continue;
        }
        const double remaining = target - X.t;
        if (!(remaining > 1e-9)) continue;
        PreFailureWarning worst;
        double worst_excess = 0.0;
        for (const auto& p : b->reach) {
            double h = evaluate(p.h, X);
            if (h >= p.delta_sat) continue;
            double required = (p.delta_sat - h) / remaining;
            double achievable = achievable_rate(p.h, X, previous, bounds);
            double excess = required - achievable;
            if (excess > 1e-12 && excess > worst_excess) {
                worst_excess = excess;
                worst.prop = b->prop;
                worst.kind = "rate";
                worst.required_rate = required;
                worst.achievable_rate = achievable;
                worst.time_remaining = remaining;
            }
        }
        if (worst_excess > 0.0) {
            worst.message = format("%s may be violated: needs %.3f/s, at most %.3f/s achievable, %.2f s left",
                                   worst.prop, worst.required_rate, worst.achievable_rate, worst.time_remaining);
            out.push_back(std::move(worst));
        }
    }
    if (no_accepting_path) {
        PreFailureWarning w;
        w.kind = "no_accepting_path";
        w.required_rate = std::numeric_limits<double>::infinity();
        w.message = "no accepting path remains in any automaton";
        out.push_back(std::move(w));
    }
    return out;
}

} // namespace respec
