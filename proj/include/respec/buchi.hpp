#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "respec/ltl.hpp"

namespace respec {

struct Literal {
    std::string prop;
    bool positive = true;

    auto operator<=>(const Literal&) const = default;
};

/// Conjunction of literals sorted by proposition, at most one literal per
/// proposition. The empty label is `true`.
using Label = std::vector<Literal>;

std::string print_label(const Label& label);

/// Conjoins two labels; nullopt when they contradict.
std::optional<Label> conjoin(const Label& a, const Label& b);

/// Label satisfied by the set of true propositions.
bool satisfied(const Label& label, const std::set<std::string>& truth);

struct Transition {
    int from = 0;
    Label label;
    int to = 0;
};

/// State-based Buchi automaton over proposition literals.
struct BuchiAutomaton {
    int initial = 0;
    std::vector<std::string> state_names;
    std::vector<bool> accepting;
    std::vector<Transition> transitions;
    std::set<std::string> alphabet;
    /// outgoing[s] = indices into `transitions`, in insertion order.
    std::vector<std::vector<int>> outgoing;

    int size() const { return static_cast<int>(accepting.size()); }
    int add_state(std::string name, bool is_accepting);
    void add_transition(int from, Label label, int to);
};

struct TranslateOptions {
    /// Drops tableau covers implied by a more permissive cover of the same state.
    bool subsumption = true;
    /// Extra propositions to include in the alphabet.
    std::set<std::string> alphabet;
};

/// Tableau construction to a transition-based generalized automaton,
/// counter degeneralization, then removal of states that are unreachable or
/// cannot reach an accepting cycle.
BuchiAutomaton ltl_to_buchi(const Ltl& f, const TranslateOptions& options = {});

/// Reachable part of B1 x B2 x {0,1,2}, rooted at (s1, s2, 0). Accepting
/// states are those with counter 2. The alphabet is the union of both.
BuchiAutomaton intersect(const BuchiAutomaton& b1, const BuchiAutomaton& b2, int s1, int s2);

/// States reachable from s in zero or more steps.
std::set<int> forward_reachable(const BuchiAutomaton& b, int s);

/// True iff some transition leaving a state forward-reachable from s carries +p.
bool proposition_relevant(const BuchiAutomaton& b, int s, const std::string& p);

/// Accepting states that lie on a cycle.
std::vector<bool> accepting_on_cycle(const BuchiAutomaton& b);

/// dist[s] = fewest transitions from s to an accepting state on a cycle
/// (0 for such states); -1 if none is reachable.
std::vector<int> distance_to_acceptance(const BuchiAutomaton& b);

/// Fixed truth values; propositions not listed are free.
using TruthConstraint = std::map<std::string, bool>;

bool consistent(const Label& label, const TruthConstraint& constraint);

using TransitionPath = std::vector<int>;

/// Minimum-length transition sequences from s to an accepting state on a
/// cycle whose first transition is consistent with the constraint. All
/// minimal paths are enumerated up to `limit`; empty when none exist.
std::vector<TransitionPath> shortest_accepting_paths(const BuchiAutomaton& b, int s, const TruthConstraint& constraint,
                                                     std::size_t limit = 256);

/// Membership of prefix . loop^omega.
bool accepts_lasso(const BuchiAutomaton& b, const LassoWord& w);

/// Reusable lasso membership test with letters given as bit masks over a
/// fixed proposition order.
class LassoChecker {
public:
    LassoChecker(const BuchiAutomaton& b, const std::vector<std::string>& props);
    bool accepts(const std::vector<unsigned long long>& prefix, const std::vector<unsigned long long>& loop);

private:
    using Bits = std::vector<unsigned long long>;
    const BuchiAutomaton& b_;
    std::map<std::string, int> index_;
    int words_ = 1;
    Bits accepting_;
    std::map<unsigned long long, std::vector<Bits>> succ_;
    // Single-word successor rows indexed by letter, used when the automaton
    // has at most 64 states and the alphabet at most 12 propositions.
    std::vector<std::vector<unsigned long long>> dense_;
    bool small_ = false;

    const std::vector<Bits>& table(unsigned long long letter);
    Bits post(const Bits& set, unsigned long long letter);
    const std::vector<unsigned long long>& row64(unsigned long long letter);
    bool accepts_small(const std::vector<unsigned long long>& prefix, const std::vector<unsigned long long>& loop);
};

/// Structural fingerprint: invariant under state renumbering that keeps the
/// transition order, used to compare automata built from equal formulas.
std::string fingerprint(const BuchiAutomaton& b);

std::string to_dot(const BuchiAutomaton& b, const std::string& name = "B");

} // namespace respec
