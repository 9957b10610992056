#pragma once

// Random AST generators shared by property tests.

#include <random>
#include <string>
#include <vector>

#include "respec/formula.hpp"

namespace respec::testing {

class Generator {
public:
    explicit Generator(unsigned seed) : rng_(seed) {}

    std::mt19937& rng() { return rng_; }

    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool coin() { return uniform_int(0, 1) == 1; }

    /// Short decimal constants so printing stays readable.
    double constant() { return std::round(uniform(-10.0, 10.0) * 100.0) / 100.0; }

    Expr scalar_leaf() {
        static const char* robot_fields[] = {"x", "y", "theta", "d", "z", "beta"};
        static const char* entity_fields[] = {"x", "y", "z"};
        switch (uniform_int(0, 3)) {
        case 0: return make_constant(constant());
        case 1:
        case 2: return make_variable("robot", robot_fields[uniform_int(0, 5)]);
        default: return make_variable(entity(), entity_fields[uniform_int(0, 2)]);
        }
    }

    Expr vector_expr(int depth) {
        switch (uniform_int(0, depth > 0 ? 3 : 1)) {
        case 0: return make_variable("robot", "xy");
        case 1: return make_variable(entity(), "xy");
        case 2: return make_vector(scalar_expr(depth - 1), scalar_expr(depth - 1));
        default:
            return make_binary(coin() ? ExprKind::Add : ExprKind::Subtract, vector_expr(depth - 1),
                               vector_expr(depth - 1));
        }
    }

    Expr scalar_expr(int depth) {
        if (depth <= 0) return scalar_leaf();
        switch (uniform_int(0, 9)) {
        case 0: return scalar_leaf();
        case 1: return make_negate(scalar_expr(depth - 1));
        case 2: return make_binary(ExprKind::Add, scalar_expr(depth - 1), scalar_expr(depth - 1));
        case 3: return make_binary(ExprKind::Subtract, scalar_expr(depth - 1), scalar_expr(depth - 1));
        case 4: return make_binary(ExprKind::Multiply, scalar_expr(depth - 1), scalar_expr(depth - 1));
        case 5: return make_binary(ExprKind::Divide, scalar_expr(depth - 1), scalar_expr(depth - 1));
        case 6: return make_call(Function::Norm2, {vector_expr(depth - 1)});
        case 7: return make_call(coin() ? Function::Sin : Function::Cos, {scalar_expr(depth - 1)});
        case 8: return make_call(Function::Atan2, {scalar_expr(depth - 1), scalar_expr(depth - 1)});
        default: return make_call(coin() ? Function::Abs : Function::Wrap, {scalar_expr(depth - 1)});
        }
    }

    Predicate predicate(int depth = 2) {
        return Predicate{scalar_expr(depth), coin() ? Relation::Less : Relation::Greater, scalar_expr(depth)};
    }

    StateFormula state(int depth) {
        if (depth <= 0 || uniform_int(0, 2) == 0) return coin() ? state_pred(predicate()) : state_not(predicate());
        return coin() ? state_and(state(depth - 1), state(depth - 1)) : state_or(state(depth - 1), state(depth - 1));
    }

    EventFormula event(int depth) {
        if (depth <= 0 || uniform_int(0, 2) == 0) {
            static const char* atoms[] = {"alarm", "pick", "door"};
            return coin() ? event_atom(atoms[uniform_int(0, 2)]) : event_pred(predicate(1));
        }
        return coin() ? event_not(event(depth - 1)) : event_and(event(depth - 1), event(depth - 1));
    }

    Bounds bounds(bool allow_unbounded) {
        double a = std::round(uniform(0.0, 20.0) * 10.0) / 10.0;
        if (allow_unbounded && uniform_int(0, 4) == 0) return {a, std::numeric_limits<double>::infinity()};
        return {a, a + std::round(uniform(0.0, 30.0) * 10.0) / 10.0};
    }

    SpecFormula spec(int depth) {
        int pick = uniform_int(0, depth > 0 ? 5 : 2);
        switch (pick) {
        case 0: return spec_always(bounds(true), state(2));
        case 1: return spec_eventually(bounds(false), state(2));
        case 2: return spec_until(bounds(false), state(1), state(1));
        case 3: return spec_trigger(event(2), spec(depth - 1));
        case 4: return spec_and(spec(depth - 1), spec(depth - 1));
        default: return spec_or(spec(depth - 1), spec(depth - 1));
        }
    }

    /// Same tree shape with fresh predicates and bounds (unboundedness kept).
    StateFormula perturb(const StateFormula& f) {
        switch (f->kind) {
        case StateKind::Pred: return state_pred(predicate());
        case StateKind::Not: return state_not(predicate());
        case StateKind::And: return state_and(perturb(f->children[0]), perturb(f->children[1]));
        default: return state_or(perturb(f->children[0]), perturb(f->children[1]));
        }
    }

    EventFormula perturb(const EventFormula& f) {
        switch (f->kind) {
        case EventKind::Atom: return f;
        case EventKind::Pred: return event_pred(predicate(1));
        case EventKind::Not: return event_not(perturb(f->children[0]));
        default: return event_and(perturb(f->children[0]), perturb(f->children[1]));
        }
    }

    SpecFormula perturb(const SpecFormula& f) {
        switch (f->kind) {
        case SpecKind::Always: {
            Bounds b = bounds(false);
            if (f->bounds.unbounded()) b.upper = std::numeric_limits<double>::infinity();
            return spec_always(b, perturb(f->state[0]));
        }
        case SpecKind::Eventually: return spec_eventually(bounds(false), perturb(f->state[0]));
        case SpecKind::Until: return spec_until(bounds(false), perturb(f->state[0]), perturb(f->state[1]));
        case SpecKind::Trigger: return spec_trigger(perturb(f->trigger), perturb(f->children[0]));
        case SpecKind::And: return spec_and(perturb(f->children[0]), perturb(f->children[1]));
        default: return spec_or(perturb(f->children[0]), perturb(f->children[1]));
        }
    }

private:
    std::mt19937 rng_;

    std::string entity() {
        static const char* names[] = {"obj1", "depot1", "cone1"};
        return names[uniform_int(0, 2)];
    }
};

} // namespace respec::testing
