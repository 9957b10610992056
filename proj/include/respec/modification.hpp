#pragma once

#include <string>
#include <vector>

#include "respec/context.hpp"
#include "respec/parser.hpp"

namespace respec {

/// A clause to attach, by conjunction or disjunction.
struct Addition {
    SpecFormula clause;
    bool conjunction = true;
};

/// New formula for an existing clause; it must abstract to the same
/// skeleton, differing only in predicates and bounds.
struct ClauseRewrite {
    std::size_t clause = 0;
    SpecFormula formula;
};

/// Additions are applied in order (innermost parentheses first), then rewrites.
struct ModificationDiff {
    std::vector<Addition> additions;
    std::vector<ClauseRewrite> rewrites;
    Schema declarations;

    bool empty() const { return additions.empty() && rewrites.empty(); }
    std::string summary() const;
};

/// Maps a selector of the combined formula to (clause index, selector inside the clause).
std::pair<std::size_t, Selector> locate(const SpecState& spec, const Selector& global);

/// findMods for structured commands.
ModificationDiff find_mods(const SpecState& spec, const ModificationCommand& cmd);

/// findMods for a whole new formula. The new formula must be the current
/// one with clauses appended along its left spine and/or in-place predicate
/// and bound edits; anything else throws UndiffableChange.
ModificationDiff find_mods(const SpecState& spec, const SpecFormula& psi_new);

enum class FeedbackKind { Applied, RequiresPause, IrrelevantModification, RecommendConjunction, Revived };

const char* to_string(FeedbackKind kind);

struct Feedback {
    FeedbackKind kind = FeedbackKind::Applied;
    std::string prop;
    std::string selector;
    std::string message;
};

enum class CostClass { InStep, RequiresPause };

const char* to_string(CostClass c);

struct CostEstimate {
    CostClass cost = CostClass::InStep;
    double estimate_ms = 0.0;
};

/// Rewrites only: in-step. Additions: a size-based estimate of translation
/// plus product time, compared against pause_budget x control period.
CostEstimate classify_cost(const RuntimeContext& ctx, const ModificationDiff& diff);

struct ModificationResult {
    bool ok = false;
    std::vector<Feedback> feedback;
    double timing_ms = 0.0;
    CostEstimate cost;
    /// Propositions whose predicates or window changed.
    std::vector<std::string> rewritten;
    std::string error;
    std::string error_code;
};

/// modifyProp: applies a rewritten proposition when some automaton can still
/// require it from its current state (trigger predicates: when some automaton
/// reads it). Returns false when irrelevant; the context is then untouched.
bool modify_prop(RuntimeContext& ctx, const AbstractProposition& updated, const WorldState& X,
                 std::vector<Feedback>& feedback);

/// Algorithm 2 on a copy of ctx; ctx is replaced only on success.
ModificationResult modify(RuntimeContext& ctx, const ModificationDiff& diff, const WorldState& X);

/// parse_modification + find_mods + modify. Parse and diff failures are
/// reported in the result, leaving ctx untouched.
ModificationResult apply_modification(RuntimeContext& ctx, const std::string& text, const WorldState& X);

} // namespace respec
