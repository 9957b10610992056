#pragma once

// Reference LTL semantics on lasso words, written independently of the
// library: truth vectors over the n = |prefix| + |loop| positions with the
// last position looping back to |prefix|, U as a least and R as a greatest
// fixpoint.

#include <vector>

#include "respec/ltl.hpp"

namespace respec::testing {

class LassoOracle {
public:
    /// Letters are bit masks; bit i is props[i].
    LassoOracle(std::vector<std::string> props) : props_(std::move(props)) {}

    bool holds(const Ltl& f, const std::vector<unsigned long long>& prefix,
               const std::vector<unsigned long long>& loop) const {
        word_ = prefix;
        word_.insert(word_.end(), loop.begin(), loop.end());
        loop_start_ = prefix.size();
        return truth(f)[0];
    }

private:
    using Vec = std::vector<char>;

    std::size_t succ(std::size_t i) const { return i + 1 < word_.size() ? i + 1 : loop_start_; }

    Vec fixpoint(const Vec& a, const Vec& b, bool least) const {
        const std::size_t n = word_.size();
        // least: a U b = b | (a & X(a U b)); greatest: a R b = b & (a | X(a R b)).
        Vec v(n, least ? 0 : 1);
        for (std::size_t round = 0; round <= n; ++round)
            for (std::size_t k = n; k-- > 0;)
                v[k] = least ? (b[k] || (a[k] && v[succ(k)])) : (b[k] && (a[k] || v[succ(k)]));
        return v;
    }

    Vec truth(const Ltl& f) const {
        const std::size_t n = word_.size();
        Vec out(n);
        switch (f->kind) {
        case LtlKind::True: return Vec(n, 1);
        case LtlKind::False: return Vec(n, 0);
        case LtlKind::Prop: {
            std::size_t bit = 0;
            while (bit < props_.size() && props_[bit] != f->prop) ++bit;
            for (std::size_t i = 0; i < n; ++i) out[i] = bit < props_.size() && ((word_[i] >> bit) & 1ULL);
            return out;
        }
        case LtlKind::Not: {
            Vec a = truth(f->args[0]);
            for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
            return out;
        }
        case LtlKind::And:
        case LtlKind::Or: {
            Vec a = truth(f->args[0]), b = truth(f->args[1]);
            for (std::size_t i = 0; i < n; ++i) out[i] = f->kind == LtlKind::And ? a[i] && b[i] : a[i] || b[i];
            return out;
        }
        case LtlKind::Next: {
            Vec a = truth(f->args[0]);
            for (std::size_t i = 0; i < n; ++i) out[i] = a[succ(i)];
            return out;
        }
        case LtlKind::Until: return fixpoint(truth(f->args[0]), truth(f->args[1]), true);
        case LtlKind::Release: return fixpoint(truth(f->args[0]), truth(f->args[1]), false);
        case LtlKind::Eventually: return fixpoint(Vec(n, 1), truth(f->args[0]), true);
        case LtlKind::Always: return fixpoint(Vec(n, 0), truth(f->args[0]), false);
        }
        return out;
    }

    std::vector<std::string> props_;
    mutable std::vector<unsigned long long> word_;
    mutable std::size_t loop_start_ = 0;
};

} // namespace respec::testing
