#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "respec/world.hpp"

namespace respec {

struct ScriptedEvent {
    double t = 0.0;
    std::string name;
};

/// Teleports an entity; its waypoints are dropped.
struct ScriptedMove {
    double t = 0.0;
    std::string entity;
    Position position;
};

/// A modification submitted at time t, or on the step after the first
/// pre-failure warning when after_warning is set.
struct ScriptedModification {
    double t = 0.0;
    bool after_warning = false;
    std::string command;
};

struct ScenarioScript {
    std::string name;
    std::string description;
    /// Specification document text (declarations and formula).
    std::string spec;
    RobotState robot0;
    std::vector<Entity> entities;
    std::vector<ScriptedEvent> events;
    std::vector<ScriptedMove> moves;
    std::vector<ScriptedModification> modifications;
    double dt = 0.1;
    double duration = 60.0;
    ControlBounds bounds;
    GraspModel grasp;
    /// "reevaluate" or "commit".
    std::string method = "reevaluate";

    /// Latest time of any timed script entry.
    double last_scripted_time() const;
};

std::vector<std::string> builtin_names();

/// Packaged scenarios; throws UnknownScenario.
ScenarioScript builtin_world(const std::string& name);

nlohmann::json scenario_to_json(const ScenarioScript& s);
/// Throws InvalidConfig on schema errors.
ScenarioScript scenario_from_json(const nlohmann::json& j);
/// A builtin name or a path to a scenario JSON file.
ScenarioScript load_scenario(const std::string& name_or_path);

/// Owns the world. Step k covers [k dt, (k+1) dt): begin_step publishes the
/// snapshot at k dt with the events firing in that step, end_step integrates.
class Simulator {
public:
    explicit Simulator(ScenarioScript script);

    const ScenarioScript& script() const { return script_; }
    const WorldState& world() const { return world_; }
    long step_index() const { return step_; }
    double time() const { return static_cast<double>(step_) * script_.dt; }

    /// Queues an event for the next begin_step.
    void fire(const std::string& name);

    /// Applies due moves, positions entities, collects due events.
    const WorldState& begin_step();

    /// Integrates the robot over dt, then grasps or releases.
    void end_step(const ChannelVector& u);

private:
    void place_entities();
    void update_grasp();

    ScenarioScript script_;
    std::vector<Entity> entities_;
    WorldState world_;
    long step_ = 0;
    std::size_t next_event_ = 0;
    std::size_t next_move_ = 0;
    std::set<std::string> external_;
};

} // namespace respec
