#pragma once

#include <string>
#include <vector>

#include "respec/context.hpp"
#include "respec/modification.hpp"

namespace respec {

struct ModificationRecord {
    double t = 0.0;
    std::string command;
    std::string kind;
    std::string summary;
    ModificationResult result;
};

/// Outputs of one control step.
struct StepReport {
    double t = 0.0;
    long step = 0;
    ChannelVector u{};
    int chosen = -1;
    std::vector<std::string> activated;
    std::vector<TransitionChoice> rhoset;
    std::vector<int> buchi_states;
    TruthAssignment sigma;
    std::vector<MonitorEvent> monitor;
    std::vector<PreFailureWarning> warnings;
    ControlOutput control;
    std::vector<ModificationRecord> modifications;
    /// Some modification of this step was classified requires-pause.
    bool paused = false;
    /// Run-level violation count after this step.
    int violations = 0;
    double compute_ms = 0.0;
};

/// prep_spec, B_set = [B], states = [s0]. Throws TriviallyViolatedAtInit when
/// an obligation that starts at X0 is already lost there.
RuntimeContext init(const SpecDocument& doc, const WorldState& X0, const RuntimeConfig& config);

/// apply_modification plus bookkeeping: revived instances are no longer
/// counted as violations.
ModificationRecord apply_command(RuntimeContext& ctx, const std::string& command, const WorldState& X);

/// One loop iteration at X: modifications, sigma_t, pickT per automaton,
/// chooseProps, control, pre-failure. The world is advanced by the caller.
StepReport run_step(RuntimeContext& ctx, const WorldState& X, const WorldState* previous,
                    const std::vector<std::string>& pending_mods);

/// Violated instances charged to the run: the minimum over automata of the
/// violations among that automaton's propositions.
int run_violations(const RuntimeContext& ctx);

/// Some automaton sits on an accepting cycle state and none of its
/// propositions has a live instance.
bool globally_accepted(const RuntimeContext& ctx);

/// "add-conj", "add-disj", "set-bounds", "set-pred", "replace" or "invalid".
std::string modification_kind(const std::string& command);

} // namespace respec
