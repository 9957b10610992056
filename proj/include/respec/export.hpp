#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "respec/abstraction.hpp"

namespace respec {

/// {initial, alphabet, states: [{id, name, accepting}], transitions: [{from, to, label}]}
nlohmann::json automaton_to_json(const BuchiAutomaton& b);

/// Skeleton, propositions and templates of an abstraction.
nlohmann::json abstraction_to_json(const AbstractionResult& r);

struct ValidationIssue {
    /// "admissibility", "violation" or "format".
    std::string kind;
    long step = -1;
    double t = 0.0;
    std::string message;
};

struct ValidationReport {
    long steps = 0;
    int violations = 0;
    std::vector<ValidationIssue> issues;

    int count(const std::string& kind) const;
    bool ok() const { return issues.empty(); }
};

/// Offline replay of a trace (header first): time steps of dt, controls within
/// the caps, states consistent with the single-integrator model, and the
/// specification (with the recorded modifications) replayed through the
/// monitor. `spec_text` overrides the spec stored in the header.
ValidationReport validate_trace(const std::vector<nlohmann::json>& records,
                                const std::optional<std::string>& spec_text = {});

/// Reads a trace.jsonl file; malformed lines are reported as format issues.
ValidationReport validate_trace_file(const std::filesystem::path& trace,
                                     const std::optional<std::string>& spec_text = {});

} // namespace respec
