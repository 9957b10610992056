#include "respec/ltl.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace respec {

namespace {

Ltl node(LtlKind kind, std::vector<Ltl> args = {}, std::string prop = {}) {
    auto n = std::make_shared<LtlNode>();
    n->kind = kind;
    n->args = std::move(args);
    n->prop = std::move(prop);
    return n;
}

} // namespace

Ltl ltl_true() {
    static const Ltl t = node(LtlKind::True);
    return t;
}

Ltl ltl_false() {
    static const Ltl f = node(LtlKind::False);
    return f;
}

Ltl ltl_prop(const std::string& id) { return node(LtlKind::Prop, {}, id); }
Ltl ltl_not(Ltl a) { return node(LtlKind::Not, {std::move(a)}); }
Ltl ltl_and(Ltl a, Ltl b) { return node(LtlKind::And, {std::move(a), std::move(b)}); }
Ltl ltl_or(Ltl a, Ltl b) { return node(LtlKind::Or, {std::move(a), std::move(b)}); }
Ltl ltl_next(Ltl a) { return node(LtlKind::Next, {std::move(a)}); }
Ltl ltl_until(Ltl a, Ltl b) { return node(LtlKind::Until, {std::move(a), std::move(b)}); }
Ltl ltl_release(Ltl a, Ltl b) { return node(LtlKind::Release, {std::move(a), std::move(b)}); }
Ltl ltl_eventually(Ltl a) { return node(LtlKind::Eventually, {std::move(a)}); }
Ltl ltl_always(Ltl a) { return node(LtlKind::Always, {std::move(a)}); }
Ltl ltl_implies(Ltl a, Ltl b) { return ltl_or(ltl_not(std::move(a)), std::move(b)); }

Ltl ltl_and_simplified(Ltl a, Ltl b) {
    if (a->kind == LtlKind::False || b->kind == LtlKind::False) return ltl_false();
    if (a->kind == LtlKind::True) return b;
    if (b->kind == LtlKind::True) return a;
    return ltl_and(std::move(a), std::move(b));
}

Ltl ltl_or_simplified(Ltl a, Ltl b) {
    if (a->kind == LtlKind::True || b->kind == LtlKind::True) return ltl_true();
    if (a->kind == LtlKind::False) return b;
    if (b->kind == LtlKind::False) return a;
    return ltl_or(std::move(a), std::move(b));
}

Ltl ltl_all(const std::vector<Ltl>& parts) {
    Ltl acc = ltl_true();
    for (const auto& p : parts) acc = ltl_and_simplified(acc, p);
    return acc;
}

Ltl ltl_any(const std::vector<Ltl>& parts) {
    Ltl acc = ltl_false();
    for (const auto& p : parts) acc = ltl_or_simplified(acc, p);
    return acc;
}

namespace {

Ltl nnf(const Ltl& f, bool negate) {
    const auto& a = f->args;
    switch (f->kind) {
    case LtlKind::True: return negate ? ltl_false() : ltl_true();
    case LtlKind::False: return negate ? ltl_true() : ltl_false();
    case LtlKind::Prop: return negate ? ltl_not(f) : f;
    case LtlKind::Not: return nnf(a[0], !negate);
    case LtlKind::And:
        return negate ? ltl_or(nnf(a[0], true), nnf(a[1], true)) : ltl_and(nnf(a[0], false), nnf(a[1], false));
    case LtlKind::Or:
        return negate ? ltl_and(nnf(a[0], true), nnf(a[1], true)) : ltl_or(nnf(a[0], false), nnf(a[1], false));
    case LtlKind::Next: return ltl_next(nnf(a[0], negate));
    case LtlKind::Until:
        return negate ? ltl_release(nnf(a[0], true), nnf(a[1], true)) : ltl_until(nnf(a[0], false), nnf(a[1], false));
    case LtlKind::Release:
        return negate ? ltl_until(nnf(a[0], true), nnf(a[1], true)) : ltl_release(nnf(a[0], false), nnf(a[1], false));
    case LtlKind::Eventually:
        // F a = true U a;  !F a = false R !a
        return negate ? ltl_release(ltl_false(), nnf(a[0], true)) : ltl_until(ltl_true(), nnf(a[0], false));
    case LtlKind::Always:
        return negate ? ltl_until(ltl_true(), nnf(a[0], true)) : ltl_release(ltl_false(), nnf(a[0], false));
    }
    throw std::logic_error("bad LTL node");
}

void print_to(const Ltl& f, std::string& out) {
    const auto& a = f->args;
    auto binary = [&](const char* op) {
        out += '(';
        print_to(a[0], out);
        out += op;
        print_to(a[1], out);
        out += ')';
    };
    auto unary = [&](const char* op) {
        out += op;
        out += '(';
        print_to(a[0], out);
        out += ')';
    };
    switch (f->kind) {
    case LtlKind::True: out += "true"; return;
    case LtlKind::False: out += "false"; return;
    case LtlKind::Prop: out += f->prop; return;
    case LtlKind::Not: unary("!"); return;
    case LtlKind::And: binary(" & "); return;
    case LtlKind::Or: binary(" | "); return;
    case LtlKind::Next: unary("X"); return;
    case LtlKind::Until: binary(" U "); return;
    case LtlKind::Release: binary(" R "); return;
    case LtlKind::Eventually: unary("F"); return;
    case LtlKind::Always: unary("G"); return;
    }
}

} // namespace

Ltl to_nnf(const Ltl& f) { return nnf(f, false); }

std::string print_ltl(const Ltl& f) {
    std::string out;
    print_to(f, out);
    return out;
}

int ltl_size(const Ltl& f) {
    int n = 1;
    for (const auto& a : f->args) n += ltl_size(a);
    return n;
}

void collect_props(const Ltl& f, std::set<std::string>& out) {
    if (f->kind == LtlKind::Prop) out.insert(f->prop);
    for (const auto& a : f->args) collect_props(a, out);
}

bool ltl_equal(const Ltl& a, const Ltl& b) {
    if (a == b) return true;
    if (a->kind != b->kind || a->prop != b->prop || a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!ltl_equal(a->args[i], b->args[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Lasso semantics

LtlLassoEvaluator::LtlLassoEvaluator(const Ltl& f, const std::vector<std::string>& props) {
    std::map<std::string, int> index;
    for (std::size_t i = 0; i < props.size(); ++i) index[props[i]] = static_cast<int>(i);
    auto build = [&](auto&& self, const Ltl& g) -> int {
        Op op{g->kind};
        if (g->kind == LtlKind::Prop) {
            auto it = index.find(g->prop);
            op.prop = it == index.end() ? -1 : it->second;
        }
        if (!g->args.empty()) op.a = self(self, g->args[0]);
        if (g->args.size() > 1) op.b = self(self, g->args[1]);
        ops_.push_back(op);
        return static_cast<int>(ops_.size()) - 1;
    };
    build(build, f);
}

bool LtlLassoEvaluator::eval(const std::vector<unsigned long long>& prefix,
                             const std::vector<unsigned long long>& loop) const {
    if (loop.empty()) throw std::invalid_argument("lasso loop must be nonempty");
    const int p = static_cast<int>(prefix.size());
    const int n = p + static_cast<int>(loop.size());
    auto letter = [&](int i) { return i < p ? prefix[i] : loop[i - p]; };
    auto succ = [&](int i) { return i + 1 < n ? i + 1 : p; };

    scratch_.assign(ops_.size() * n, 0);
    auto val = [&](int k) { return scratch_.data() + static_cast<std::size_t>(k) * n; };
    for (std::size_t k = 0; k < ops_.size(); ++k) {
        const Op& op = ops_[k];
        char* v = val(static_cast<int>(k));
        switch (op.kind) {
        case LtlKind::True: std::fill(v, v + n, 1); break;
        case LtlKind::False: break;
        case LtlKind::Prop:
            for (int i = 0; i < n; ++i) v[i] = op.prop >= 0 && ((letter(i) >> op.prop) & 1ULL);
            break;
        case LtlKind::Not:
            for (int i = 0; i < n; ++i) v[i] = !val(op.a)[i];
            break;
        case LtlKind::And:
            for (int i = 0; i < n; ++i) v[i] = val(op.a)[i] && val(op.b)[i];
            break;
        case LtlKind::Or:
            for (int i = 0; i < n; ++i) v[i] = val(op.a)[i] || val(op.b)[i];
            break;
        case LtlKind::Next:
            for (int i = 0; i < n; ++i) v[i] = val(op.a)[succ(i)];
            break;
        case LtlKind::Until:
        case LtlKind::Eventually:
        case LtlKind::Release:
        case LtlKind::Always: {
            // Least fixpoint for U/F, greatest for R/G; n sweeps suffice.
            bool least = op.kind == LtlKind::Until || op.kind == LtlKind::Eventually;
            std::fill(v, v + n, least ? 0 : 1);
            for (int sweep = 0; sweep <= n; ++sweep) {
                bool changed = false;
                for (int i = n - 1; i >= 0; --i) {
                    char nv;
                    switch (op.kind) {
                    case LtlKind::Until: nv = val(op.b)[i] || (val(op.a)[i] && v[succ(i)]); break;
                    case LtlKind::Eventually: nv = val(op.a)[i] || v[succ(i)]; break;
                    case LtlKind::Release: nv = val(op.b)[i] && (val(op.a)[i] || v[succ(i)]); break;
                    default: nv = val(op.a)[i] && v[succ(i)]; break;
                    }
                    if (nv != v[i]) {
                        v[i] = nv;
                        changed = true;
                    }
                }
                if (!changed) break;
            }
            break;
        }
        }
    }
    return val(static_cast<int>(ops_.size()) - 1)[0];
}

bool ltl_eval_lasso(const Ltl& f, const LassoWord& w) {
    std::set<std::string> props;
    collect_props(f, props);
    std::vector<std::string> order(props.begin(), props.end());
    if (order.size() > 64) throw std::invalid_argument("too many propositions for lasso evaluation");
    auto mask = [&](const std::set<std::string>& letter) {
        unsigned long long m = 0;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (letter.count(order[i])) m |= 1ULL << i;
        return m;
    };
    std::vector<unsigned long long> prefix, loop;
    for (const auto& l : w.prefix) prefix.push_back(mask(l));
    for (const auto& l : w.loop) loop.push_back(mask(l));
    return LtlLassoEvaluator(f, order).eval(prefix, loop);
}

} // namespace respec
