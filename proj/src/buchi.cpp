#include "respec/buchi.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace respec {

std::string print_label(const Label& label) {
    if (label.empty()) return "true";
    std::string out;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (i) out += " & ";
        if (!label[i].positive) out += '!';
        out += label[i].prop;
    }
    return out;
}

std::optional<Label> conjoin(const Label& a, const Label& b) {
    Label out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].prop < b[j].prop)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].prop < a[i].prop) {
            out.push_back(b[j++]);
        } else {
            if (a[i].positive != b[j].positive) return std::nullopt;
            out.push_back(a[i]);
            ++i;
            ++j;
        }
    }
    return out;
}

bool satisfied(const Label& label, const std::set<std::string>& truth) {
    for (const auto& lit : label)
        if ((truth.count(lit.prop) > 0) != lit.positive) return false;
    return true;
}

bool consistent(const Label& label, const TruthConstraint& constraint) {
    for (const auto& lit : label) {
        auto it = constraint.find(lit.prop);
        if (it != constraint.end() && it->second != lit.positive) return false;
    }
    return true;
}

int BuchiAutomaton::add_state(std::string name, bool is_accepting) {
    state_names.push_back(std::move(name));
    accepting.push_back(is_accepting);
    outgoing.emplace_back();
    return size() - 1;
}

void BuchiAutomaton::add_transition(int from, Label label, int to) {
    for (const auto& lit : label) alphabet.insert(lit.prop);
    outgoing[from].push_back(static_cast<int>(transitions.size()));
    transitions.push_back(Transition{from, std::move(label), to});
}

// ---------------------------------------------------------------------------
// Translation

namespace {

/// Hash-consed NNF formulas.
class FormulaPool {
public:
    struct Node {
        LtlKind kind;
        std::string prop;  // Prop / negated Prop
        bool negated = false;
        int prop_index = -1;  // rank of `prop` in sorted order
        int a = -1;
        int b = -1;
        Ltl source;
    };

    int intern(const Ltl& f) {
        Node n;
        n.kind = f->kind;
        n.source = f;
        switch (f->kind) {
        case LtlKind::Prop: n.prop = f->prop; break;
        case LtlKind::Not:
            if (f->args[0]->kind != LtlKind::Prop) throw std::logic_error("formula is not in negation normal form");
            n.kind = LtlKind::Prop;
            n.prop = f->args[0]->prop;
            n.negated = true;
            break;
        case LtlKind::True:
        case LtlKind::False: break;
        case LtlKind::Eventually:
        case LtlKind::Always: throw std::logic_error("formula is not in negation normal form");
        default:
            n.a = intern(f->args[0]);
            if (f->args.size() > 1) n.b = intern(f->args[1]);
        }
        auto key = std::make_tuple(static_cast<int>(n.kind), n.prop, n.negated, n.a, n.b);
        auto it = ids_.find(key);
        if (it != ids_.end()) return it->second;
        nodes_.push_back(n);
        int id = static_cast<int>(nodes_.size()) - 1;
        ids_[key] = id;
        if (n.kind == LtlKind::Until) untils_.push_back(id);
        return id;
    }

    /// Numbers propositions in name order; call once after interning.
    void index_props() {
        std::set<std::string> names;
        for (const auto& n : nodes_)
            if (n.kind == LtlKind::Prop) names.insert(n.prop);
        props_.assign(names.begin(), names.end());
        for (auto& n : nodes_)
            if (n.kind == LtlKind::Prop)
                n.prop_index = static_cast<int>(std::lower_bound(props_.begin(), props_.end(), n.prop) - props_.begin());
    }

    const Node& operator[](int id) const { return nodes_[id]; }
    int size() const { return static_cast<int>(nodes_.size()); }
    const std::vector<int>& untils() const { return untils_; }
    const std::vector<std::string>& props() const { return props_; }

private:
    std::vector<Node> nodes_;
    std::map<std::tuple<int, std::string, bool, int, int>, int> ids_;
    std::vector<int> untils_;
    std::vector<std::string> props_;
};

using Bitset = std::vector<unsigned long long>;

bool test(const Bitset& b, int i) { return (b[i / 64] >> (i % 64)) & 1ULL; }
void set_bit(Bitset& b, int i) { b[i / 64] |= 1ULL << (i % 64); }

/// a is a subset of b.
bool subset(const Bitset& a, const Bitset& b) {
    for (std::size_t w = 0; w < a.size(); ++w)
        if (a[w] & ~b[w]) return false;
    return true;
}

int popcount(const Bitset& b) {
    int n = 0;
    for (auto w : b) n += __builtin_popcountll(w);
    return n;
}

/// One way of satisfying a state now: literals (as positive / negative prop
/// masks), formulas required next, and Untils postponed on this step.
struct Cover {
    Bitset pos, neg;
    Bitset next, postponed, processed;
};

class Tableau {
public:
    explicit Tableau(const FormulaPool& pool, int props)
        : pool_(pool), prop_words_((props + 63) / 64 + 1), formula_words_((pool.size() + 63) / 64 + 1) {}

    std::vector<Cover> covers(const std::vector<int>& state) {
        std::vector<Cover> out;
        Cover c{Bitset(prop_words_, 0), Bitset(prop_words_, 0), Bitset(formula_words_, 0),
                Bitset(formula_words_, 0), Bitset(formula_words_, 0)};
        expand(std::vector<int>(state.rbegin(), state.rend()), std::move(c), out);
        return out;
    }

private:
    const FormulaPool& pool_;
    int prop_words_;
    int formula_words_;

    void expand(std::vector<int> todo, Cover c, std::vector<Cover>& out) {
        while (!todo.empty()) {
            int f = todo.back();
            todo.pop_back();
            if (test(c.processed, f)) continue;
            set_bit(c.processed, f);
            const auto& n = pool_[f];
            switch (n.kind) {
            case LtlKind::True: break;
            case LtlKind::False: return;
            case LtlKind::Prop:
                if (test(n.negated ? c.pos : c.neg, n.prop_index)) return;
                set_bit(n.negated ? c.neg : c.pos, n.prop_index);
                break;
            case LtlKind::And:
                todo.push_back(n.b);
                todo.push_back(n.a);
                break;
            case LtlKind::Or: {
                auto todo2 = todo;
                auto c2 = c;
                todo.push_back(n.a);
                expand(std::move(todo), std::move(c), out);
                todo2.push_back(n.b);
                expand(std::move(todo2), std::move(c2), out);
                return;
            }
            case LtlKind::Next: set_bit(c.next, n.a); break;
            case LtlKind::Until: {
                // Either the right side holds now, or the left side holds and the
                // obligation is postponed (which withholds this Until's mark).
                auto todo2 = todo;
                auto c2 = c;
                todo.push_back(n.b);
                expand(std::move(todo), std::move(c), out);
                todo2.push_back(n.a);
                set_bit(c2.next, f);
                set_bit(c2.postponed, f);
                expand(std::move(todo2), std::move(c2), out);
                return;
            }
            case LtlKind::Release: {
                auto todo2 = todo;
                auto c2 = c;
                todo.push_back(n.a);
                todo.push_back(n.b);
                expand(std::move(todo), std::move(c), out);
                todo2.push_back(n.b);
                set_bit(c2.next, f);
                expand(std::move(todo2), std::move(c2), out);
                return;
            }
            default: throw std::logic_error("unexpected formula in tableau");
            }
        }
        out.push_back(std::move(c));
    }
};

/// Keeps covers not implied by another: B implies A when B's label is weaker,
/// its successor obligations fewer and its acceptance marks more.
std::vector<Cover> reduce(std::vector<Cover> covers) {
    // Candidates that can subsume a cover have no more literals, so scanning
    // in order of literal count lets each cover be checked against kept ones only.
    std::vector<std::size_t> order(covers.size());
    std::vector<int> weight(covers.size());
    for (std::size_t i = 0; i < covers.size(); ++i) {
        order[i] = i;
        weight[i] = popcount(covers[i].pos) + popcount(covers[i].neg) + popcount(covers[i].next) +
                    popcount(covers[i].postponed);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] < weight[b]; });
    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        const Cover& a = covers[i];
        bool implied = false;
        for (std::size_t j : kept) {
            const Cover& b = covers[j];
            if (subset(b.pos, a.pos) && subset(b.neg, a.neg) && subset(b.next, a.next) &&
                subset(b.postponed, a.postponed)) {
                implied = true;
                break;
            }
        }
        if (!implied) kept.push_back(i);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<Cover> out;
    for (std::size_t i : kept) out.push_back(std::move(covers[i]));
    return out;
}

std::vector<int> tarjan_scc(const BuchiAutomaton& b) {
    int n = b.size();
    std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
    std::vector<char> on_stack(n, 0);
    std::vector<int> stack;
    int counter = 0, comps = 0;
    // Iterative Tarjan to stay safe on large automata.
    struct Frame {
        int v;
        std::size_t edge;
    };
    for (int root = 0; root < n; ++root) {
        if (index[root] != -1) continue;
        std::vector<Frame> frames{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            Frame& fr = frames.back();
            int v = fr.v;
            if (fr.edge < b.outgoing[v].size()) {
                int w = b.transitions[b.outgoing[v][fr.edge++]].to;
                if (index[w] == -1) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
            } else {
                if (low[v] == index[v]) {
                    int w;
                    do {
                        w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = comps;
                    } while (w != v);
                    ++comps;
                }
                frames.pop_back();
                if (!frames.empty()) low[frames.back().v] = std::min(low[frames.back().v], low[v]);
            }
        }
    }
    return comp;
}

/// Removes states that cannot reach an accepting cycle; the initial state is
/// always kept. State order is preserved.
BuchiAutomaton trim(const BuchiAutomaton& b) {
    std::vector<bool> good = accepting_on_cycle(b);
    std::vector<std::vector<int>> preds(b.size());
    for (const auto& t : b.transitions) preds[t.to].push_back(t.from);
    std::deque<int> queue;
    for (int s = 0; s < b.size(); ++s)
        if (good[s]) queue.push_back(s);
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int p : preds[s])
            if (!good[p]) {
                good[p] = true;
                queue.push_back(p);
            }
    }
    std::set<int> reach = forward_reachable(b, b.initial);
    std::vector<int> remap(b.size(), -1);
    BuchiAutomaton out;
    out.alphabet = b.alphabet;
    for (int s = 0; s < b.size(); ++s)
        if ((good[s] && reach.count(s)) || s == b.initial) remap[s] = out.add_state(b.state_names[s], b.accepting[s]);
    out.initial = remap[b.initial];
    for (const auto& t : b.transitions)
        if (remap[t.from] >= 0 && remap[t.to] >= 0 && (good[t.to] || t.to == b.initial))
            out.add_transition(remap[t.from], t.label, remap[t.to]);
    return out;
}

} // namespace

BuchiAutomaton ltl_to_buchi(const Ltl& f, const TranslateOptions& options) {
    FormulaPool pool;
    int root = pool.intern(to_nnf(f));
    pool.index_props();
    Tableau tableau(pool, static_cast<int>(pool.props().size()));
    const auto& untils = pool.untils();
    const int k = static_cast<int>(untils.size());

    // Generalized automaton: states are sets of pending formulas.
    struct GTrans {
        Label label;
        int to;
        std::vector<char> marks;
    };
    std::map<std::vector<int>, int> state_ids;
    std::vector<std::vector<int>> states;
    std::vector<std::vector<GTrans>> gtrans;
    auto state_of = [&](std::vector<int> s) {
        s.erase(std::remove_if(s.begin(), s.end(), [&](int id) { return pool[id].kind == LtlKind::True; }), s.end());
        auto it = state_ids.find(s);
        if (it != state_ids.end()) return it->second;
        int id = static_cast<int>(states.size());
        state_ids[s] = id;
        states.push_back(s);
        gtrans.emplace_back();
        return id;
    };
    state_of({root});
    for (std::size_t q = 0; q < states.size(); ++q) {
        auto covers = tableau.covers(states[q]);
        if (options.subsumption) covers = reduce(std::move(covers));
        for (auto& c : covers) {
            GTrans t;
            for (int i = 0; i < static_cast<int>(pool.props().size()); ++i) {
                if (test(c.pos, i)) t.label.push_back(Literal{pool.props()[i], true});
                if (test(c.neg, i)) t.label.push_back(Literal{pool.props()[i], false});
            }
            std::vector<int> next;
            for (int i = 0; i < pool.size(); ++i)
                if (test(c.next, i)) next.push_back(i);
            t.to = state_of(std::move(next));
            t.marks.resize(k);
            for (int i = 0; i < k; ++i) t.marks[i] = test(c.postponed, untils[i]) ? 0 : 1;
            gtrans[q].push_back(std::move(t));
        }
    }

    auto state_name = [&](int q) {
        std::string name = "{";
        for (std::size_t i = 0; i < states[q].size(); ++i) {
            if (i) name += ", ";
            name += print_ltl(pool[states[q][i]].source);
        }
        return name + "}";
    };

    // Counter degeneralization: level j counts consecutive acceptance sets
    // seen; reaching k marks an accepting state and restarts the count.
    BuchiAutomaton b;
    std::map<std::pair<int, int>, int> ids;
    std::deque<std::pair<int, int>> queue;
    auto get = [&](int q, int j) {
        auto key = std::make_pair(q, j);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        std::string name = state_name(q);
        if (k > 0) name += " / " + std::to_string(j);
        int id = b.add_state(std::move(name), j == k);
        ids[key] = id;
        queue.push_back(key);
        return id;
    };
    b.initial = get(0, 0);
    while (!queue.empty()) {
        auto [q, j] = queue.front();
        queue.pop_front();
        int from = ids[{q, j}];
        for (const auto& t : gtrans[q]) {
            int level = j == k ? 0 : j;
            while (level < k && t.marks[level]) ++level;
            int to = get(t.to, level);
            b.add_transition(from, t.label, to);
        }
    }
    b.alphabet.insert(options.alphabet.begin(), options.alphabet.end());
    std::set<std::string> props;
    collect_props(f, props);
    b.alphabet.insert(props.begin(), props.end());
    return trim(b);
}

// ---------------------------------------------------------------------------
// Product

BuchiAutomaton intersect(const BuchiAutomaton& b1, const BuchiAutomaton& b2, int s1, int s2) {
    BuchiAutomaton b;
    std::map<std::tuple<int, int, int>, int> ids;
    std::deque<std::tuple<int, int, int>> queue;
    auto get = [&](int g, int q, int i) {
        auto key = std::make_tuple(g, q, i);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        int id = b.add_state("(" + b1.state_names[g] + ", " + b2.state_names[q] + ", " + std::to_string(i) + ")", i == 2);
        ids[key] = id;
        queue.push_back(key);
        return id;
    };
    b.initial = get(s1, s2, 0);
    while (!queue.empty()) {
        auto [g, q, i] = queue.front();
        queue.pop_front();
        int from = ids[{g, q, i}];
        for (int t1 : b1.outgoing[g]) {
            const Transition& a = b1.transitions[t1];
            for (int t2 : b2.outgoing[q]) {
                const Transition& c = b2.transitions[t2];
                auto label = conjoin(a.label, c.label);
                if (!label) continue;
                int j = i;
                if (i == 0 && b1.accepting[a.to]) j = 1;
                else if (i == 1 && b2.accepting[c.to]) j = 2;
                else if (i == 2) j = 0;
                b.add_transition(from, std::move(*label), get(a.to, c.to, j));
            }
        }
    }
    b.alphabet.insert(b1.alphabet.begin(), b1.alphabet.end());
    b.alphabet.insert(b2.alphabet.begin(), b2.alphabet.end());
    return trim(b);
}

// ---------------------------------------------------------------------------
// Queries

std::set<int> forward_reachable(const BuchiAutomaton& b, int s) {
    std::set<int> seen{s};
    std::deque<int> queue{s};
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int t : b.outgoing[v]) {
            int w = b.transitions[t].to;
            if (seen.insert(w).second) queue.push_back(w);
        }
    }
    return seen;
}

bool proposition_relevant(const BuchiAutomaton& b, int s, const std::string& p) {
    for (int v : forward_reachable(b, s))
        for (int t : b.outgoing[v])
            for (const auto& lit : b.transitions[t].label)
                if (lit.prop == p && lit.positive) return true;
    return false;
}

std::vector<bool> accepting_on_cycle(const BuchiAutomaton& b) {
    std::vector<int> comp = tarjan_scc(b);
    std::vector<int> comp_size(b.size() + 1, 0);
    for (int c : comp) ++comp_size[c];
    std::vector<bool> self(b.size(), false);
    for (const auto& t : b.transitions)
        if (t.from == t.to) self[t.from] = true;
    std::vector<bool> out(b.size(), false);
    for (int s = 0; s < b.size(); ++s) out[s] = b.accepting[s] && (comp_size[comp[s]] > 1 || self[s]);
    return out;
}

std::vector<int> distance_to_acceptance(const BuchiAutomaton& b) {
    std::vector<bool> target = accepting_on_cycle(b);
    std::vector<std::vector<int>> preds(b.size());
    for (const auto& t : b.transitions) preds[t.to].push_back(t.from);
    std::vector<int> dist(b.size(), -1);
    std::deque<int> queue;
    for (int s = 0; s < b.size(); ++s)
        if (target[s]) {
            dist[s] = 0;
            queue.push_back(s);
        }
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        for (int p : preds[s])
            if (dist[p] < 0) {
                dist[p] = dist[s] + 1;
                queue.push_back(p);
            }
    }
    return dist;
}

std::vector<TransitionPath> shortest_accepting_paths(const BuchiAutomaton& b, int s, const TruthConstraint& constraint,
                                                     std::size_t limit) {
    std::vector<int> dist = distance_to_acceptance(b);
    int best = -1;
    for (int t : b.outgoing[s]) {
        const Transition& tr = b.transitions[t];
        if (dist[tr.to] < 0 || !consistent(tr.label, constraint)) continue;
        int len = 1 + dist[tr.to];
        if (best < 0 || len < best) best = len;
    }
    std::vector<TransitionPath> paths;
    if (best < 0) return paths;
    TransitionPath current;
    std::function<void(int)> walk = [&](int state) {
        if (paths.size() >= limit) return;
        int remaining = dist[state];
        if (remaining == 0) {
            paths.push_back(current);
            return;
        }
        for (int t : b.outgoing[state]) {
            if (dist[b.transitions[t].to] != remaining - 1) continue;
            current.push_back(t);
            walk(b.transitions[t].to);
            current.pop_back();
        }
    };
    for (int t : b.outgoing[s]) {
        const Transition& tr = b.transitions[t];
        if (dist[tr.to] < 0 || 1 + dist[tr.to] != best || !consistent(tr.label, constraint)) continue;
        current = {t};
        walk(tr.to);
    }
    return paths;
}

// ---------------------------------------------------------------------------
// Lasso membership

LassoChecker::LassoChecker(const BuchiAutomaton& b, const std::vector<std::string>& props) : b_(b) {
    if (props.size() > 64) throw std::invalid_argument("too many propositions for a lasso checker");
    for (std::size_t i = 0; i < props.size(); ++i) index_[props[i]] = static_cast<int>(i);
    words_ = std::max(1, (b.size() + 63) / 64);
    accepting_.assign(words_, 0);
    for (int s = 0; s < b.size(); ++s)
        if (b.accepting[s]) accepting_[s / 64] |= 1ULL << (s % 64);
    small_ = b.size() <= 64 && props.size() <= 12;
    if (small_) dense_.resize(1ULL << props.size());
}

const std::vector<unsigned long long>& LassoChecker::row64(unsigned long long letter) {
    letter &= dense_.size() - 1;
    auto& rows = dense_[letter];
    if (rows.empty()) {
        const auto& wide = table(letter);
        rows.resize(b_.size());
        for (int s = 0; s < b_.size(); ++s) rows[s] = wide[s][0];
    }
    return rows;
}

bool LassoChecker::accepts_small(const std::vector<unsigned long long>& prefix,
                                 const std::vector<unsigned long long>& loop) {
    const int m = static_cast<int>(loop.size());
    const unsigned long long acc = accepting_[0];
    auto post64 = [&](unsigned long long set, const std::vector<unsigned long long>& rows) {
        unsigned long long out = 0;
        for (; set; set &= set - 1) out |= rows[__builtin_ctzll(set)];
        return out;
    };
    unsigned long long start = 1ULL << b_.initial;
    for (auto letter : prefix) start = post64(start, row64(letter));

    std::vector<const std::vector<unsigned long long>*> rows(m);
    for (int j = 0; j < m; ++j) rows[j] = &row64(loop[j]);
    std::vector<unsigned long long> reach(m, 0), z, can(m);
    reach[0] = start;
    for (bool changed = true; changed;) {
        changed = false;
        for (int j = 0; j < m; ++j) {
            unsigned long long& dst = reach[(j + 1) % m];
            unsigned long long merged = dst | post64(reach[j], *rows[j]);
            if (merged != dst) {
                dst = merged;
                changed = true;
            }
        }
    }
    z = reach;
    for (;;) {
        std::fill(can.begin(), can.end(), 0);
        for (bool changed = true; changed;) {
            changed = false;
            for (int j = 0; j < m; ++j) {
                int nj = (j + 1) % m;
                unsigned long long goal = (z[nj] & acc) | can[nj];
                for (unsigned long long rest = z[j] & ~can[j]; rest; rest &= rest - 1) {
                    int s = __builtin_ctzll(rest);
                    if ((*rows[j])[s] & goal) {
                        can[j] |= 1ULL << s;
                        changed = true;
                    }
                }
            }
        }
        if (can == z) break;
        z = can;
    }
    for (int j = 0; j < m; ++j)
        if (z[j] & acc) return true;
    return false;
}

const std::vector<LassoChecker::Bits>& LassoChecker::table(unsigned long long letter) {
    auto it = succ_.find(letter);
    if (it != succ_.end()) return it->second;
    std::vector<Bits> rows(b_.size(), Bits(words_, 0));
    for (const auto& t : b_.transitions) {
        bool ok = true;
        for (const auto& lit : t.label) {
            auto idx = index_.find(lit.prop);
            bool value = idx != index_.end() && ((letter >> idx->second) & 1ULL);
            if (value != lit.positive) {
                ok = false;
                break;
            }
        }
        if (ok) rows[t.from][t.to / 64] |= 1ULL << (t.to % 64);
    }
    return succ_.emplace(letter, std::move(rows)).first->second;
}

LassoChecker::Bits LassoChecker::post(const Bits& set, unsigned long long letter) {
    const auto& rows = table(letter);
    Bits out(words_, 0);
    for (int s = 0; s < b_.size(); ++s)
        if ((set[s / 64] >> (s % 64)) & 1ULL)
            for (int w = 0; w < words_; ++w) out[w] |= rows[s][w];
    return out;
}

bool LassoChecker::accepts(const std::vector<unsigned long long>& prefix, const std::vector<unsigned long long>& loop) {
    if (loop.empty()) throw std::invalid_argument("lasso loop must be nonempty");
    if (b_.size() == 0) return false;
    if (small_) return accepts_small(prefix, loop);
    Bits start(words_, 0);
    start[b_.initial / 64] |= 1ULL << (b_.initial % 64);
    for (auto letter : prefix) start = post(start, letter);

    const int m = static_cast<int>(loop.size());
    std::vector<Bits> reach(m, Bits(words_, 0));
    reach[0] = start;
    for (bool changed = true; changed;) {
        changed = false;
        for (int j = 0; j < m; ++j) {
            Bits next = post(reach[j], loop[j]);
            Bits& dst = reach[(j + 1) % m];
            for (int w = 0; w < words_; ++w) {
                unsigned long long merged = dst[w] | next[w];
                if (merged != dst[w]) {
                    dst[w] = merged;
                    changed = true;
                }
            }
        }
    }

    // Greatest fixpoint: nodes of Z that reach an accepting node of Z in one
    // or more steps without leaving Z. Nonempty iff an accepting cycle exists.
    std::vector<Bits> z = reach;
    for (;;) {
        std::vector<Bits> target(m, Bits(words_, 0));
        for (int j = 0; j < m; ++j)
            for (int w = 0; w < words_; ++w) target[j][w] = z[j][w] & accepting_[w];
        std::vector<Bits> can(m, Bits(words_, 0));
        for (bool changed = true; changed;) {
            changed = false;
            for (int j = 0; j < m; ++j) {
                const auto& rows = table(loop[j]);
                int nj = (j + 1) % m;
                for (int s = 0; s < b_.size(); ++s) {
                    unsigned long long bit = 1ULL << (s % 64);
                    if (!(z[j][s / 64] & bit) || (can[j][s / 64] & bit)) continue;
                    for (int w = 0; w < words_; ++w)
                        if (rows[s][w] & (target[nj][w] | can[nj][w])) {
                            can[j][s / 64] |= bit;
                            changed = true;
                            break;
                        }
                }
            }
        }
        if (can == z) break;
        z = can;
    }
    for (int j = 0; j < m; ++j)
        for (int w = 0; w < words_; ++w)
            if (z[j][w] & accepting_[w]) return true;
    return false;
}

bool accepts_lasso(const BuchiAutomaton& b, const LassoWord& w) {
    std::vector<std::string> order(b.alphabet.begin(), b.alphabet.end());
    auto mask = [&](const std::set<std::string>& letter) {
        unsigned long long m = 0;
        for (std::size_t i = 0; i < order.size(); ++i)
            if (letter.count(order[i])) m |= 1ULL << i;
        return m;
    };
    std::vector<unsigned long long> prefix, loop;
    for (const auto& l : w.prefix) prefix.push_back(mask(l));
    for (const auto& l : w.loop) loop.push_back(mask(l));
    return LassoChecker(b, order).accepts(prefix, loop);
}

// ---------------------------------------------------------------------------
// Export

std::string fingerprint(const BuchiAutomaton& b) {
    // Canonical numbering by BFS from the initial state over transitions
    // sorted by label text, then by original order.
    std::vector<int> canon(b.size(), -1);
    std::deque<int> queue{b.initial};
    int next = 0;
    if (b.size() > 0) canon[b.initial] = next++;
    while (!queue.empty()) {
        int s = queue.front();
        queue.pop_front();
        std::vector<int> edges = b.outgoing[s];
        std::stable_sort(edges.begin(), edges.end(), [&](int x, int y) {
            return print_label(b.transitions[x].label) < print_label(b.transitions[y].label);
        });
        for (int t : edges) {
            int to = b.transitions[t].to;
            if (canon[to] < 0) {
                canon[to] = next++;
                queue.push_back(to);
            }
        }
    }
    std::vector<std::string> rows;
    for (const auto& t : b.transitions)
        rows.push_back(std::to_string(canon[t.from]) + ">" + std::to_string(canon[t.to]) + ":" + print_label(t.label));
    std::sort(rows.begin(), rows.end());
    std::string acc;
    std::vector<int> accepting;
    for (int s = 0; s < b.size(); ++s)
        if (b.accepting[s]) accepting.push_back(canon[s]);
    std::sort(accepting.begin(), accepting.end());
    std::string text = std::to_string(b.size()) + "|";
    for (int a : accepting) text += std::to_string(a) + ",";
    text += "|";
    for (const auto& p : b.alphabet) text += p + ",";
    for (const auto& r : rows) text += "|" + r;
    // FNV-1a 64.
    unsigned long long h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream os;
    os << std::hex << h << "-" << std::dec << b.size() << "s" << b.transitions.size() << "t";
    return os.str();
}

std::string to_dot(const BuchiAutomaton& b, const std::string& name) {
    auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out;
    };
    std::ostringstream os;
    os << "digraph \"" << escape(name) << "\" {\n  rankdir=LR;\n  init [shape=point];\n";
    for (int s = 0; s < b.size(); ++s)
        os << "  s" << s << " [shape=" << (b.accepting[s] ? "doublecircle" : "circle") << ", tooltip=\""
           << escape(b.state_names[s]) << "\", label=\"" << s << "\"];\n";
    if (b.size() > 0) os << "  init -> s" << b.initial << ";\n";
    for (const auto& t : b.transitions)
        os << "  s" << t.from << " -> s" << t.to << " [label=\"" << escape(print_label(t.label)) << "\"];\n";
    os << "}\n";
    return os.str();
}

} // namespace respec
