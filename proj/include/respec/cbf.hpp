#pragma once

#include <string>
#include <vector>

#include "respec/abstraction.hpp"
#include "respec/qp.hpp"

namespace respec {

/// Piecewise-linear gamma(t): g0 until t0, linear to g1 at t1, g1 afterwards.
struct Schedule {
    double t0 = 0.0;
    double g0 = 0.0;
    double t1 = 0.0;
    double g1 = 0.0;

    double value(double t) const;
    /// Right derivative.
    double rate(double t) const;
};

struct BarrierPredicate {
    Expr h;
    double delta_sat = 0.05;
    double epsilon = 0.05;
    Schedule gamma;
};

/// Time-varying barrier b(X, t) = h(X) - gamma(t) for each predicate of one
/// obligation. Invariant: b >= 0 at the anchor time of every schedule.
struct BarrierInstance {
    std::string prop;
    PropKind kind = PropKind::Eventually;
    Bounds window;
    /// Origin of the window (the obligation's activation time).
    double t_act = 0.0;
    double gain = 1.0;
    std::vector<BarrierPredicate> reach;
    std::vector<BarrierPredicate> hold;

    double t_dead() const { return t_act + window.upper; }
};

/// Reach schedule for one predicate anchored at t_anchor >= t_act with current margin h.
///
/// Eventually / Until: min(h - eps, delta) at the anchor, rising linearly to
/// delta at the deadline. Always: the same ramp ending at t_act + a, then
/// delta until the deadline; once inside the window the schedule is the
/// constant min(h, delta).
Schedule reach_schedule(PropKind kind, const Bounds& window, double t_act, double t_anchor, double h, double delta,
                        double epsilon);

/// Instantiates a template; schedules are anchored at X.t.
BarrierInstance activate(const BarrierTemplate& tmpl, double t_act, const WorldState& X);

/// Re-anchors the reach schedules at X.t, keeping the deadline.
void reanchor_reach(BarrierInstance& barrier, const WorldState& X);

/// Exact gradient of h over the robot channels.
EvalResult grad_h(const Expr& h, const WorldState& X);

/// dh/dt from entity motion alone, by finite difference against the
/// previous snapshot; 0 without one.
double entity_rate(const Expr& h, const WorldState& X, const WorldState* previous);

/// Which rows of a barrier enter the QP.
struct RowRequest {
    const BarrierInstance* barrier = nullptr;
    bool reach = false;
    bool hold = false;
};

struct ControlConfig {
    ControlBounds bounds;
    double dt = 0.1;
    /// Extra solves that tighten rows whose one-step prediction falls short
    /// of b' >= (1 - k dt) b.
    int refinements = 3;
};

struct RowDiagnostic {
    std::string label;
    std::string prop;
    double h = 0.0;
    double gamma = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
};

struct ControlOutput {
    ChannelVector u{};
    std::vector<RowDiagnostic> rows;
    bool relaxed = false;
    double kkt_residual = 0.0;
    int iterations = 0;
    int refinements = 0;
    /// A gradient was taken slightly off a singular point.
    bool perturbed = false;
};

/// Row: grad h . u >= gamma'(t) - dh/dt - k (h - gamma(t)) per requested
/// predicate; min u'u over the box, with slack when the rows conflict.
ControlOutput generate_control(const std::vector<RowRequest>& requests, const WorldState& X,
                               const WorldState* previous, const ControlConfig& config);

struct PreFailureWarning {
    std::string prop;
    /// "rate" or "no_accepting_path".
    std::string kind;
    double required_rate = 0.0;
    double achievable_rate = 0.0;
    double time_remaining = 0.0;
    std::string message;
};

/// max over the box of dh/dt: dh/dt|entities + sum_i |dh/dx_i| cap_i.
double achievable_rate(const Expr& h, const WorldState& X, const WorldState* previous, const ControlBounds& bounds);

/// Rate warnings for reach predicates that still have to climb to delta_sat
/// before a deadline, plus a warning when no automaton has an accepting path.
std::vector<PreFailureWarning> pre_failure(const std::vector<const BarrierInstance*>& activated, const WorldState& X,
                                           const WorldState* previous, const ControlBounds& bounds,
                                           bool no_accepting_path);

} // namespace respec
