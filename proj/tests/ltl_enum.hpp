#pragma once

// Bounded-exhaustive enumeration of LTL formulas and lasso words.

#include <vector>

#include "respec/ltl.hpp"

namespace respec::testing {

/// All formulas of exactly each size 1..max_size over props {p, q} with
/// unary !, X, F, G and binary &, |, U. by_size[n] lists formulas of size n.
inline std::vector<std::vector<Ltl>> enumerate_ltl(int max_size) {
    std::vector<std::vector<Ltl>> by_size(max_size + 1);
    by_size[1] = {ltl_prop("p"), ltl_prop("q")};
    for (int n = 2; n <= max_size; ++n) {
        for (const auto& a : by_size[n - 1]) {
            by_size[n].push_back(ltl_not(a));
            by_size[n].push_back(ltl_next(a));
            by_size[n].push_back(ltl_eventually(a));
            by_size[n].push_back(ltl_always(a));
        }
        for (int left = 1; left + 1 < n; ++left) {
            int right = n - 1 - left;
            for (const auto& a : by_size[left])
                for (const auto& b : by_size[right]) {
                    by_size[n].push_back(ltl_and(a, b));
                    by_size[n].push_back(ltl_or(a, b));
                    by_size[n].push_back(ltl_until(a, b));
                }
        }
    }
    return by_size;
}

struct MaskLasso {
    std::vector<unsigned long long> prefix;
    std::vector<unsigned long long> loop;
};

/// Every lasso with |prefix| <= max_prefix, 1 <= |loop| <= max_loop over
/// 2^props letters.
inline std::vector<MaskLasso> enumerate_lassos(int props, int max_prefix, int max_loop) {
    const unsigned long long letters = 1ULL << props;
    auto words = [&](int len) {
        std::vector<std::vector<unsigned long long>> out{{}};
        for (int i = 0; i < len; ++i) {
            std::vector<std::vector<unsigned long long>> next;
            for (const auto& w : out)
                for (unsigned long long l = 0; l < letters; ++l) {
                    auto v = w;
                    v.push_back(l);
                    next.push_back(std::move(v));
                }
            out = std::move(next);
        }
        return out;
    };
    std::vector<MaskLasso> out;
    for (int p = 0; p <= max_prefix; ++p)
        for (int l = 1; l <= max_loop; ++l)
            for (const auto& pre : words(p))
                for (const auto& loop : words(l)) out.push_back({pre, loop});
    return out;
}

} // namespace respec::testing
