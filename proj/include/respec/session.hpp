#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "respec/runtime.hpp"
#include "respec/sim.hpp"

namespace respec {

/// Version tag carried by every trace, log, summary and wire record.
inline constexpr int kSchemaVersion = 1;

/// Runtime configuration implied by a scenario (dt, caps, method).
RuntimeConfig config_for(const ScenarioScript& script);

/// Parses the scenario's specification with its entity names in scope.
SpecDocument parse_scenario_spec(const ScenarioScript& script);

/// A scenario run: simulator, runtime context and the records it produces.
/// Single-threaded; callers serialize access.
class Session {
public:
    explicit Session(ScenarioScript script);
    Session(ScenarioScript script, const RuntimeConfig& config);

    /// Executes one control step; no-op once finished.
    void step();
    bool finished() const { return finished_; }
    const std::string& stop_reason() const { return stop_reason_; }
    /// Live sessions keep running after acceptance; only the duration ends them.
    void set_stop_on_acceptance(bool on) { stop_on_acceptance_ = on; }

    /// Fires an event in the next step; throws UnknownName for undeclared events.
    void fire_event(const std::string& name);
    /// Queues a modification for the next step.
    void queue_modification(const std::string& command);
    /// Applies a modification now, at the snapshot the next step starts from.
    /// The record is logged at once and attached to the next step record.
    ModificationRecord modify_now(const std::string& command);

    const RuntimeContext& context() const { return ctx_; }
    const Simulator& simulator() const { return sim_; }
    const ScenarioScript& script() const { return sim_.script(); }
    const std::optional<StepReport>& last_report() const { return last_; }

    nlohmann::json header_json() const;
    const std::vector<nlohmann::json>& trace() const { return trace_; }
    const std::vector<nlohmann::json>& modification_log() const { return mod_log_; }
    nlohmann::json summary_json() const;
    /// Latest state_update payload (the last trace record, or the initial state).
    nlohmann::json state_json() const;

    /// trace.jsonl, modifications.jsonl and summary.json, each written to a
    /// temporary file and renamed into place.
    void write(const std::filesystem::path& dir) const;

private:
    nlohmann::json step_record(const StepReport& report, const WorldState& X) const;
    void check_stop();

    Simulator sim_;
    RuntimeContext ctx_;
    std::optional<WorldState> previous_;
    std::deque<std::string> queued_mods_;
    std::vector<ModificationRecord> unreported_;
    std::vector<bool> scripted_done_;
    bool warning_seen_ = false;
    bool warning_pending_ = false;
    std::optional<double> first_warning_t_;
    int warning_count_ = 0;
    std::optional<StepReport> last_;
    std::vector<nlohmann::json> trace_;
    std::vector<nlohmann::json> mod_log_;
    std::vector<double> step_ms_;
    bool stop_on_acceptance_ = true;
    bool finished_ = false;
    std::string stop_reason_;
};

/// Runs a scenario to its stop condition, writing files when out_dir is given.
Session run_scenario(const ScenarioScript& script, const std::optional<std::filesystem::path>& out_dir = {});

} // namespace respec
