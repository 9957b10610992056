#include "respec/expr.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "respec/error.hpp"

namespace respec {

const char* to_string(Function fn) {
    switch (fn) {
    case Function::Norm2: return "norm2";
    case Function::Abs: return "abs";
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Atan2: return "atan2";
    case Function::Wrap: return "wrap";
    }
    return "?";
}

bool is_robot_field(const std::string& field) {
    return field == "x" || field == "y" || field == "theta" || field == "d" || field == "z" ||
           field == "beta" || field == "xy";
}

bool is_entity_field(const std::string& field) {
    return field == "x" || field == "y" || field == "z" || field == "xy";
}

namespace {

std::shared_ptr<ExprNode> node(ExprKind kind) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    return n;
}

void require_scalar(const Expr& e, const char* where) {
    if (e->vector)
        throw Error(ErrorCode::TypeMismatch, std::string("vector operand not allowed in ") + where);
}

} // namespace

Expr make_constant(double value) {
    auto n = node(ExprKind::Constant);
    n->value = value;
    return n;
}

Expr make_variable(const std::string& owner, const std::string& field) {
    bool ok = owner == "robot" ? is_robot_field(field) : is_entity_field(field);
    if (!ok) throw Error(ErrorCode::UnknownName, "unknown field '" + owner + "." + field + "'");
    auto n = node(ExprKind::Variable);
    n->owner = owner;
    n->name = field;
    n->vector = field == "xy";
    return n;
}

Expr make_alias(const std::string& name, Expr body) {
    auto n = node(ExprKind::Alias);
    n->name = name;
    n->vector = body->vector;
    n->args = {std::move(body)};
    return n;
}

Expr make_vector(Expr x, Expr y) {
    require_scalar(x, "vector literal");
    require_scalar(y, "vector literal");
    auto n = node(ExprKind::Vector);
    n->vector = true;
    n->args = {std::move(x), std::move(y)};
    return n;
}

Expr make_negate(Expr operand) {
    auto n = node(ExprKind::Negate);
    n->vector = operand->vector;
    n->args = {std::move(operand)};
    return n;
}

Expr make_binary(ExprKind kind, Expr lhs, Expr rhs) {
    auto n = node(kind);
    switch (kind) {
    case ExprKind::Add:
    case ExprKind::Subtract:
        if (lhs->vector != rhs->vector)
            throw Error(ErrorCode::TypeMismatch, "cannot add or subtract a vector and a scalar");
        n->vector = lhs->vector;
        break;
    case ExprKind::Multiply:
        if (lhs->vector && rhs->vector)
            throw Error(ErrorCode::TypeMismatch, "vector-vector product is not defined");
        n->vector = lhs->vector || rhs->vector;
        break;
    case ExprKind::Divide:
        require_scalar(rhs, "divisor");
        n->vector = lhs->vector;
        break;
    default:
        throw Error(ErrorCode::TypeMismatch, "not a binary operator");
    }
    n->args = {std::move(lhs), std::move(rhs)};
    return n;
}

Expr make_call(Function fn, std::vector<Expr> args) {
    std::size_t arity = fn == Function::Atan2 ? 2 : 1;
    if (args.size() != arity)
        throw Error(ErrorCode::TypeMismatch, std::string(to_string(fn)) + " expects " +
                                                 std::to_string(arity) + " argument(s)");
    if (fn == Function::Norm2) {
        if (!args[0]->vector) throw Error(ErrorCode::TypeMismatch, "norm2 expects a vector");
    } else {
        for (const auto& a : args) require_scalar(a, to_string(fn));
    }
    auto n = node(ExprKind::Call);
    n->fn = fn;
    n->args = std::move(args);
    return n;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
    switch (a->kind) {
    case ExprKind::Constant:
        if (a->value != b->value) return false;
        break;
    case ExprKind::Variable:
        if (a->owner != b->owner || a->name != b->name) return false;
        break;
    case ExprKind::Alias:
        if (a->name != b->name) return false;
        break;
    case ExprKind::Call:
        if (a->fn != b->fn) return false;
        break;
    default:
        break;
    }
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!structurally_equal(a->args[i], b->args[i])) return false;
    return true;
}

namespace {

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

int precedence(const Expr& e) {
    switch (e->kind) {
    case ExprKind::Add:
    case ExprKind::Subtract: return 1;
    case ExprKind::Multiply:
    case ExprKind::Divide: return 2;
    case ExprKind::Negate: return 3;
    case ExprKind::Constant: return e->value < 0 || std::signbit(e->value) ? 3 : 4;
    default: return 4;
    }
}

void print_to(const Expr& e, std::string& out);

void print_child(const Expr& e, int min_prec, std::string& out) {
    if (precedence(e) < min_prec) {
        out += '(';
        print_to(e, out);
        out += ')';
    } else {
        print_to(e, out);
    }
}

void print_to(const Expr& e, std::string& out) {
    switch (e->kind) {
    case ExprKind::Constant: out += format_number(e->value); return;
    case ExprKind::Variable: out += e->owner + "." + e->name; return;
    case ExprKind::Alias: out += e->name; return;
    case ExprKind::Vector:
        out += '[';
        print_to(e->args[0], out);
        out += ", ";
        print_to(e->args[1], out);
        out += ']';
        return;
    case ExprKind::Negate:
        out += '-';
        // Parenthesize anything but plain names so "-3" stays distinct from a negative literal.
        if (e->args[0]->kind == ExprKind::Variable || e->args[0]->kind == ExprKind::Alias ||
            e->args[0]->kind == ExprKind::Call || e->args[0]->kind == ExprKind::Vector) {
            print_to(e->args[0], out);
        } else {
            out += '(';
            print_to(e->args[0], out);
            out += ')';
        }
        return;
    case ExprKind::Add:
    case ExprKind::Subtract: {
        print_child(e->args[0], 1, out);
        out += e->kind == ExprKind::Add ? " + " : " - ";
        print_child(e->args[1], 2, out);
        return;
    }
    case ExprKind::Multiply:
    case ExprKind::Divide: {
        print_child(e->args[0], 2, out);
        out += e->kind == ExprKind::Multiply ? " * " : " / ";
        print_child(e->args[1], 3, out);
        return;
    }
    case ExprKind::Call:
        out += to_string(e->fn);
        out += '(';
        for (std::size_t i = 0; i < e->args.size(); ++i) {
            if (i) out += ", ";
            print_to(e->args[i], out);
        }
        out += ')';
        return;
    }
}

} // namespace

std::string print_expr(const Expr& e) {
    std::string out;
    print_to(e, out);
    return out;
}

bool is_constant(const Expr& e) {
    if (e->kind == ExprKind::Variable) return false;
    for (const auto& a : e->args)
        if (!is_constant(a)) return false;
    return true;
}

void collect_entities(const Expr& e, std::set<std::string>& out) {
    if (e->kind == ExprKind::Variable && e->owner != "robot") out.insert(e->owner);
    for (const auto& a : e->args) collect_entities(a, out);
}

Expr substitute(const Expr& e, const Expr& pattern, const Expr& replacement) {
    if (structurally_equal(e, pattern)) return replacement;
    if (e->args.empty()) return e;
    bool changed = false;
    std::vector<Expr> args;
    args.reserve(e->args.size());
    for (const auto& a : e->args) {
        args.push_back(substitute(a, pattern, replacement));
        changed = changed || args.back() != a;
    }
    if (!changed) return e;
    auto copy = std::make_shared<ExprNode>(*e);
    copy->args = std::move(args);
    copy->vector = e->kind == ExprKind::Alias ? copy->args[0]->vector : e->vector;
    return copy;
}

namespace {

struct Value {
    bool vector = false;
    Dual a;
    Dual b;
};

Dual operator+(const Dual& p, const Dual& q) {
    Dual r{p.v + q.v, {}};
    for (int i = 0; i < kChannels; ++i) r.g[i] = p.g[i] + q.g[i];
    return r;
}

Dual operator-(const Dual& p, const Dual& q) {
    Dual r{p.v - q.v, {}};
    for (int i = 0; i < kChannels; ++i) r.g[i] = p.g[i] - q.g[i];
    return r;
}

Dual operator*(const Dual& p, const Dual& q) {
    Dual r{p.v * q.v, {}};
    for (int i = 0; i < kChannels; ++i) r.g[i] = p.v * q.g[i] + q.v * p.g[i];
    return r;
}

Dual scale(const Dual& p, double s, double value) {
    Dual r{value, {}};
    for (int i = 0; i < kChannels; ++i) r.g[i] = s * p.g[i];
    return r;
}

Dual divide(const Dual& p, const Dual& q) {
    if (std::abs(q.v) < 1e-12) throw Error(ErrorCode::DivisionByZero, "division by a value near zero");
    Dual r{p.v / q.v, {}};
    for (int i = 0; i < kChannels; ++i) r.g[i] = (p.g[i] * q.v - p.v * q.g[i]) / (q.v * q.v);
    return r;
}

Dual constant(double v) { return Dual{v, {}}; }

struct Evaluator {
    const WorldState& world;
    bool perturbed = false;

    Value scalar(Dual d) { return Value{false, d, {}}; }

    Value eval(const Expr& e) {
        switch (e->kind) {
        case ExprKind::Constant: return scalar(constant(e->value));
        case ExprKind::Variable: return variable(*e);
        case ExprKind::Alias: return eval(e->args[0]);
        case ExprKind::Vector: return Value{true, eval(e->args[0]).a, eval(e->args[1]).a};
        case ExprKind::Negate: {
            Value v = eval(e->args[0]);
            v.a = scale(v.a, -1.0, -v.a.v);
            v.b = scale(v.b, -1.0, -v.b.v);
            return v;
        }
        case ExprKind::Add:
        case ExprKind::Subtract: {
            Value l = eval(e->args[0]);
            Value r = eval(e->args[1]);
            bool add = e->kind == ExprKind::Add;
            return Value{l.vector, add ? l.a + r.a : l.a - r.a, add ? l.b + r.b : l.b - r.b};
        }
        case ExprKind::Multiply: {
            Value l = eval(e->args[0]);
            Value r = eval(e->args[1]);
            if (l.vector) return Value{true, l.a * r.a, l.b * r.a};
            if (r.vector) return Value{true, l.a * r.a, l.a * r.b};
            return scalar(l.a * r.a);
        }
        case ExprKind::Divide: {
            Value l = eval(e->args[0]);
            Value r = eval(e->args[1]);
            if (l.vector) return Value{true, divide(l.a, r.a), divide(l.b, r.a)};
            return scalar(divide(l.a, r.a));
        }
        case ExprKind::Call: return call(*e);
        }
        throw Error(ErrorCode::TypeMismatch, "bad expression node");
    }

    Value variable(const ExprNode& n) {
        if (n.owner == "robot") {
            const RobotState& r = world.robot;
            auto channel = [&](int c) {
                Dual d{r[c], {}};
                d.g[c] = 1.0;
                return d;
            };
            if (n.name == "xy") return Value{true, channel(kX), channel(kY)};
            int c = n.name == "x" ? kX : n.name == "y" ? kY : n.name == "theta" ? kTheta
                  : n.name == "d" ? kArm : n.name == "z" ? kLift : kGrip;
            return scalar(channel(c));
        }
        auto it = world.entities.find(n.owner);
        if (it == world.entities.end())
            throw Error(ErrorCode::UnresolvedVariable, "entity '" + n.owner + "' is not in the world");
        const Position& p = it->second;
        if (n.name == "xy") return Value{true, constant(p.x), constant(p.y)};
        return scalar(constant(n.name == "x" ? p.x : n.name == "y" ? p.y : p.z));
    }

    Value call(const ExprNode& n) {
        switch (n.fn) {
        case Function::Norm2: {
            Value v = eval(n.args[0]);
            double len = std::hypot(v.a.v, v.b.v);
            if (len < 1e-12) {
                perturbed = true;
                v.a.v += 1e-9;
                len = std::hypot(v.a.v, v.b.v);
            }
            Dual r{len, {}};
            for (int i = 0; i < kChannels; ++i) r.g[i] = (v.a.v * v.a.g[i] + v.b.v * v.b.g[i]) / len;
            return scalar(r);
        }
        case Function::Abs: {
            Dual a = eval(n.args[0]).a;
            double s = a.v > 0 ? 1.0 : a.v < 0 ? -1.0 : 0.0;
            return scalar(scale(a, s, std::abs(a.v)));
        }
        case Function::Sin: {
            Dual a = eval(n.args[0]).a;
            return scalar(scale(a, std::cos(a.v), std::sin(a.v)));
        }
        case Function::Cos: {
            Dual a = eval(n.args[0]).a;
            return scalar(scale(a, -std::sin(a.v), std::cos(a.v)));
        }
        case Function::Wrap: {
            Dual a = eval(n.args[0]).a;
            return scalar(scale(a, 1.0, wrap_angle(a.v)));
        }
        case Function::Atan2: {
            Dual y = eval(n.args[0]).a;
            Dual x = eval(n.args[1]).a;
            double r2 = x.v * x.v + y.v * y.v;
            if (r2 < 1e-24) {
                perturbed = true;
                x.v += 1e-9;
                r2 = x.v * x.v + y.v * y.v;
            }
            Dual r{std::atan2(y.v, x.v), {}};
            for (int i = 0; i < kChannels; ++i) r.g[i] = (x.v * y.g[i] - y.v * x.g[i]) / r2;
            return scalar(r);
        }
        }
        throw Error(ErrorCode::TypeMismatch, "bad function");
    }
};

} // namespace

EvalResult differentiate(const Expr& e, const WorldState& world) {
    if (e->vector) throw Error(ErrorCode::TypeMismatch, "expression is a vector, expected a scalar");
    Evaluator ev{world};
    Value v = ev.eval(e);
    if (!std::isfinite(v.a.v))
        throw Error(ErrorCode::DivisionByZero, "expression evaluated to a non-finite value");
    return EvalResult{v.a.v, v.a.g, ev.perturbed};
}

double evaluate(const Expr& e, const WorldState& world) { return differentiate(e, world).value; }

} // namespace respec
