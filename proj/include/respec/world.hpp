#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace respec {

/// Robot state channels, in the order used by gradients and control vectors.
enum Channel : int { kX = 0, kY, kTheta, kArm, kLift, kGrip, kChannels };

using ChannelVector = std::array<double, kChannels>;

const char* channel_name(int channel);

/// Base pose (x, y, theta), arm extension d, gripper height z, gripper aperture beta.
struct RobotState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
    double d = 0.0;
    double z = 0.0;
    double beta = 0.0;

    double operator[](int channel) const;
    double& operator[](int channel);
    bool operator==(const RobotState&) const = default;
};

/// Per-channel velocity caps |u_i| <= cap_i: [v_x, v_y, omega, v_d, v_z, v_beta].
struct ControlBounds {
    ChannelVector caps{1.0, 1.0, 1.0, 0.3, 0.3, 0.3};

    void validate() const;
    bool contains(const ChannelVector& u, double tol = 1e-9) const;
};

enum class EntityKind { Object, Depot, Cone, Obstacle };

const char* to_string(EntityKind kind);
EntityKind entity_kind_from_string(const std::string& text);

struct Position {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    bool operator==(const Position&) const = default;
};

struct Waypoint {
    double t = 0.0;
    Position position;
};

/// A named environment entity. With waypoints, the position is interpolated
/// linearly in time and held at the ends.
struct Entity {
    std::string name;
    EntityKind kind = EntityKind::Object;
    Position position;
    std::vector<Waypoint> waypoints;

    Position position_at(double t) const;
};

/// Snapshot X_t of robot, entities and fired events.
struct WorldState {
    double t = 0.0;
    RobotState robot;
    std::map<std::string, Position> entities;
    std::set<std::string> events;
    /// Object currently held in the gripper, if any.
    std::optional<std::string> carried;
    /// Objects released so far, with the depot they were dropped at (empty if none).
    std::vector<std::pair<std::string, std::string>> deposits;

    const Position& entity(const std::string& name) const;
};

/// Gripper thresholds from the pick-and-place task: closing below grasp_below
/// attaches a nearby object, opening above release_above drops it.
struct GraspModel {
    double grasp_below = 1.0;
    double release_above = 3.0;
    double reach_tolerance = 0.2;
    double height_tolerance = 0.1;
    double depot_radius = 1.0;
};

/// Position of the gripper tip; the arm extends perpendicular (to the left) of the heading.
Position gripper_tip(const RobotState& robot);

double wrap_angle(double angle);

/// Single-integrator update of all six channels. theta wraps to (-pi, pi];
/// d, z and beta are clamped at 0. Entities are not moved here.
RobotState integrate(const RobotState& robot, const ChannelVector& u, double dt);

/// Output transform from holonomic base velocities to differential-drive
/// commands (forward speed, turn rate) about a point at lookahead offset ell.
std::pair<double, double> feedback_linearize(double vx, double vy, double theta, double ell);

} // namespace respec
