#include "respec/world.hpp"

#include <cmath>
#include <numbers>

#include "respec/error.hpp"

namespace respec {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::Syntax: return "Syntax";
    case ErrorCode::BoundsReversed: return "BoundsReversed";
    case ErrorCode::UnknownName: return "UnknownName";
    case ErrorCode::UnresolvedVariable: return "UnresolvedVariable";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::TypeMismatch: return "TypeMismatch";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnknownProposition: return "UnknownProposition";
    case ErrorCode::UndiffableChange: return "UndiffableChange";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::TriviallyViolatedAtInit: return "TriviallyViolatedAtInit";
    case ErrorCode::SolverNonconvergence: return "SolverNonconvergence";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

const char* channel_name(int channel) {
    static const char* names[] = {"x", "y", "theta", "d", "z", "beta"};
    return channel >= 0 && channel < kChannels ? names[channel] : "?";
}

double RobotState::operator[](int channel) const {
    switch (channel) {
    case kX: return x;
    case kY: return y;
    case kTheta: return theta;
    case kArm: return d;
    case kLift: return z;
    default: return beta;
    }
}

double& RobotState::operator[](int channel) {
    switch (channel) {
    case kX: return x;
    case kY: return y;
    case kTheta: return theta;
    case kArm: return d;
    case kLift: return z;
    default: return beta;
    }
}

void ControlBounds::validate() const {
    for (double cap : caps)
        if (!(cap > 0.0) || !std::isfinite(cap))
            throw Error(ErrorCode::InvalidConfig, "control caps must be positive and finite");
}

bool ControlBounds::contains(const ChannelVector& u, double tol) const {
    for (int i = 0; i < kChannels; ++i)
        if (std::abs(u[i]) > caps[i] + tol) return false;
    return true;
}

const char* to_string(EntityKind kind) {
    switch (kind) {
    case EntityKind::Object: return "object";
    case EntityKind::Depot: return "depot";
    case EntityKind::Cone: return "cone";
    case EntityKind::Obstacle: return "obstacle";
    }
    return "object";
}

EntityKind entity_kind_from_string(const std::string& text) {
    if (text == "object") return EntityKind::Object;
    if (text == "depot") return EntityKind::Depot;
    if (text == "cone") return EntityKind::Cone;
    if (text == "obstacle") return EntityKind::Obstacle;
    throw Error(ErrorCode::InvalidConfig, "unknown entity kind '" + text + "'");
}

Position Entity::position_at(double t) const {
    if (waypoints.empty()) return position;
    if (t <= waypoints.front().t) return waypoints.front().position;
    for (std::size_t i = 1; i < waypoints.size(); ++i) {
        const auto& a = waypoints[i - 1];
        const auto& b = waypoints[i];
        if (t <= b.t) {
            double span = b.t - a.t;
            double s = span > 0.0 ? (t - a.t) / span : 1.0;
            return {a.position.x + s * (b.position.x - a.position.x),
                    a.position.y + s * (b.position.y - a.position.y),
                    a.position.z + s * (b.position.z - a.position.z)};
        }
    }
    return waypoints.back().position;
}

const Position& WorldState::entity(const std::string& name) const {
    auto it = entities.find(name);
    if (it == entities.end())
        throw Error(ErrorCode::UnresolvedVariable, "unknown entity '" + name + "'");
    return it->second;
}

Position gripper_tip(const RobotState& robot) {
    double heading = robot.theta + std::numbers::pi / 2.0;
    return {robot.x + robot.d * std::cos(heading), robot.y + robot.d * std::sin(heading), robot.z};
}

double wrap_angle(double angle) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double wrapped = std::fmod(angle + std::numbers::pi, two_pi);
    if (wrapped <= 0.0) wrapped += two_pi;
    return wrapped - std::numbers::pi;
}

RobotState integrate(const RobotState& robot, const ChannelVector& u, double dt) {
    RobotState next = robot;
    for (int i = 0; i < kChannels; ++i) next[i] += u[i] * dt;
    next.theta = wrap_angle(next.theta);
    next.d = std::max(0.0, next.d);
    next.z = std::max(0.0, next.z);
    next.beta = std::max(0.0, next.beta);
    return next;
}

std::pair<double, double> feedback_linearize(double vx, double vy, double theta, double ell) {
    if (!(ell > 0.0)) throw Error(ErrorCode::InvalidConfig, "lookahead offset must be positive");
    double c = std::cos(theta);
    double s = std::sin(theta);
    return {c * vx + s * vy, (-s * vx + c * vy) / ell};
}

} // namespace respec
