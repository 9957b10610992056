#pragma once

#include <memory>
#include <set>
#include <string>
#include <vector>

namespace respec {

enum class LtlKind { True, False, Prop, Not, And, Or, Next, Until, Release, Eventually, Always };

struct LtlNode;
using Ltl = std::shared_ptr<const LtlNode>;

struct LtlNode {
    LtlKind kind = LtlKind::True;
    std::string prop;
    std::vector<Ltl> args;
};

Ltl ltl_true();
Ltl ltl_false();
Ltl ltl_prop(const std::string& id);
Ltl ltl_not(Ltl a);
Ltl ltl_and(Ltl a, Ltl b);
Ltl ltl_or(Ltl a, Ltl b);
Ltl ltl_next(Ltl a);
Ltl ltl_until(Ltl a, Ltl b);
Ltl ltl_release(Ltl a, Ltl b);
Ltl ltl_eventually(Ltl a);
Ltl ltl_always(Ltl a);
Ltl ltl_implies(Ltl a, Ltl b);

/// Conjunction / disjunction of a list; empty lists give true / false.
Ltl ltl_all(const std::vector<Ltl>& parts);
Ltl ltl_any(const std::vector<Ltl>& parts);

/// Builders with constant folding (true & x = x, F false = false, ...).
Ltl ltl_and_simplified(Ltl a, Ltl b);
Ltl ltl_or_simplified(Ltl a, Ltl b);

/// Negation normal form over True, False, Prop, Not(Prop), And, Or, Next, Until, Release.
Ltl to_nnf(const Ltl& f);

std::string print_ltl(const Ltl& f);
int ltl_size(const Ltl& f);
void collect_props(const Ltl& f, std::set<std::string>& out);
bool ltl_equal(const Ltl& a, const Ltl& b);

/// Ultimately periodic word prefix . loop^omega; each letter is the set of true propositions.
struct LassoWord {
    std::vector<std::set<std::string>> prefix;
    std::vector<std::set<std::string>> loop;
};

/// Direct LTL semantics on a lasso.
bool ltl_eval_lasso(const Ltl& f, const LassoWord& w);

/// Reusable evaluator: compiles the formula once over a fixed proposition
/// order so that letters can be passed as bit masks (bit i = props[i]).
/// Not thread-safe: eval reuses an internal buffer.
class LtlLassoEvaluator {
public:
    LtlLassoEvaluator(const Ltl& f, const std::vector<std::string>& props);
    bool eval(const std::vector<unsigned long long>& prefix, const std::vector<unsigned long long>& loop) const;

private:
    struct Op {
        LtlKind kind;
        int prop = -1;
        int a = -1;
        int b = -1;
    };
    std::vector<Op> ops_;  // post-order; the root is last
    mutable std::vector<char> scratch_;
};

} // namespace respec
