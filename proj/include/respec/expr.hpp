#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "respec/world.hpp"

namespace respec {

enum class ExprKind { Constant, Variable, Alias, Vector, Negate, Add, Subtract, Multiply, Divide, Call };

enum class Function { Norm2, Abs, Sin, Cos, Atan2, Wrap };

const char* to_string(Function fn);

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

/// Immutable arithmetic expression over robot and entity fields.
///
/// Variables name an owner ("robot" or an entity) and a field. The `xy`
/// field of any owner is a 2-vector; all others are scalars. Aliases keep
/// their name so that printing reproduces `let` bindings and predicate
/// rewrites can target them by name.
struct ExprNode {
    ExprKind kind = ExprKind::Constant;
    double value = 0.0;
    std::string owner;  // Variable
    std::string name;   // Variable field or Alias name
    Function fn = Function::Abs;
    std::vector<Expr> args;
    bool vector = false;
};

Expr make_constant(double value);
Expr make_variable(const std::string& owner, const std::string& field);
Expr make_alias(const std::string& name, Expr body);
Expr make_vector(Expr x, Expr y);
Expr make_negate(Expr operand);
Expr make_binary(ExprKind kind, Expr lhs, Expr rhs);
Expr make_call(Function fn, std::vector<Expr> args);

bool is_robot_field(const std::string& field);
bool is_entity_field(const std::string& field);

bool structurally_equal(const Expr& a, const Expr& b);

std::string print_expr(const Expr& e);

/// True when the expression references no variables at all.
bool is_constant(const Expr& e);

/// Entity names referenced anywhere in the expression (aliases expanded).
void collect_entities(const Expr& e, std::set<std::string>& out);

/// Replaces every subexpression structurally equal to `pattern` by `replacement`.
Expr substitute(const Expr& e, const Expr& pattern, const Expr& replacement);

/// Forward-mode dual number over the six robot channels.
struct Dual {
    double v = 0.0;
    ChannelVector g{};
};

struct EvalResult {
    double value = 0.0;
    ChannelVector grad{};
    /// Set when norm2 or atan2 had to be evaluated slightly off a singular point.
    bool perturbed = false;
};

/// Evaluates a scalar expression; throws DivisionByZero, UnresolvedVariable or TypeMismatch.
double evaluate(const Expr& e, const WorldState& world);

/// Value and exact gradient with respect to the robot channels.
EvalResult differentiate(const Expr& e, const WorldState& world);

} // namespace respec
