#pragma once

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "respec/abstraction.hpp"
#include "respec/buchi.hpp"

namespace respec {

enum class InstanceStatus { Inactive, Active, Completed, Violated };

const char* to_string(InstanceStatus status);

/// Runtime activation of one obligation proposition.
struct ObligationInstance {
    std::string prop;
    PropKind kind = PropKind::Eventually;
    Bounds window;
    /// Activations so far, counting this one.
    int serial = 0;
    double t_act = 0.0;
    InstanceStatus status = InstanceStatus::Inactive;
    double t_done = std::numeric_limits<double>::quiet_NaN();
    bool hold_intact = true;
    /// Minimum reach margin sampled inside the window.
    double worst_h = std::numeric_limits<double>::infinity();

    double t_dead() const { return t_act + window.upper; }
    bool live() const { return status == InstanceStatus::Active; }
};

using TruthAssignment = std::map<std::string, bool>;

struct MonitorEvent {
    double t = 0.0;
    std::string prop;
    /// "activated", "completed", "violated" or "revived".
    std::string what;
    int serial = 0;
};

/// Instances plus the previous value of every guard (for edge detection).
struct MonitorState {
    std::map<std::string, ObligationInstance> instances;
    std::map<std::string, bool> guard_previous;
};

/// Samples closer than this to a window edge count as inside it.
inline constexpr double kTimeTolerance = 1e-9;

/// Truth of a propositional formula (true/false/props/not/and/or).
bool eval_guard(const Ltl& guard, const TruthAssignment& sigma);

/// Advances every obligation to time X.t and returns sigma_t.
///
/// Events are true only in the step they are fired. Trigger predicates are
/// h >= 0. An obligation activates when its guard rises and it has no live
/// instance; unguarded obligations activate on the first update. Obligation
/// propositions are true once their latest instance completed (untimed
/// invariants: while not violated) and reset on re-activation.
TruthAssignment update_truth(const std::vector<AbstractProposition>& props, const WorldState& X,
                             const std::set<std::string>& events, MonitorState& state,
                             std::vector<MonitorEvent>* log = nullptr);

/// Margins of every non-event proposition at X: trigger predicates give h,
/// obligations the minimum over their reach predicates.
std::map<std::string, double> proposition_scores(const std::vector<AbstractProposition>& props, const WorldState& X);

/// Events, trigger predicates, untimed invariants and completed obligations
/// are fixed; pending obligations are left free.
TruthConstraint planning_constraint(const BuchiAutomaton& b, const std::vector<AbstractProposition>& props,
                                    const TruthAssignment& sigma);

/// +inf for literals fixed by the constraint (consistent ones), -inf for
/// contradicting ones; otherwise the margin, negated for negative literals.
double score_literal(const Literal& lit, const TruthConstraint& constraint, const std::map<std::string, double>& scores);

struct TransitionChoice {
    /// Chosen first transition, -1 when no accepting path exists.
    int transition = -1;
    /// State after reading sigma_t.
    int next_state = 0;
    /// Pending obligations required by the first transition.
    std::vector<std::string> activated;
    double rho = -std::numeric_limits<double>::infinity();
    /// Transitions to an accepting state on a cycle, through the chosen one.
    int path_length = 0;
    bool no_accepting_path = true;
};

/// pickT: among first transitions of shortest accepting paths from s whose
/// labels agree with the constraint, maximize the minimum literal score; ties go
/// to fewer activated obligations, then the lower transition index. The state then
/// advances on the actual sigma_t: along the chosen transition when its label
/// holds, otherwise along the satisfied transition closest to acceptance.
TransitionChoice pick_transition(const BuchiAutomaton& b, const std::vector<int>& distance, int s,
                                 const std::vector<AbstractProposition>& props, const TruthAssignment& sigma,
                                 const std::map<std::string, double>& scores);

/// Successor of s on sigma (all propositions of the alphabet assigned),
/// preferring `preferred`; s itself when no transition is enabled.
int advance_state(const BuchiAutomaton& b, const std::vector<int>& distance, int s, const TruthAssignment& sigma,
                  int preferred);

enum class ChoiceMethod { Reevaluate, Commit };

const char* to_string(ChoiceMethod method);
ChoiceMethod choice_method_from_string(const std::string& text);

/// chooseProps: index of the automaton with the largest rho (ties: fewer
/// activated obligations, then lower index); -1 when none has an accepting path.
int choose_automaton(const std::vector<TransitionChoice>& rhoset);

} // namespace respec
