#include <doctest.h>

#include <cmath>
#include <numbers>

#include "respec/error.hpp"
#include "respec/world.hpp"

using namespace respec;

TEST_CASE("euler step moves only the commanded channel") {
    RobotState r;
    ChannelVector u{1, 0, 0, 0, 0, 0};
    RobotState next = integrate(r, u, 0.1);
    CHECK(next.x == doctest::Approx(0.1));
    CHECK(next.y == 0.0);
    CHECK(next.theta == 0.0);
}

TEST_CASE("zero control leaves the robot unchanged") {
    RobotState r{1, 2, 0.5, 0.3, 0.4, 2.0};
    CHECK(integrate(r, ChannelVector{}, 0.1) == r);
}

TEST_CASE("heading wraps into (-pi, pi]") {
    RobotState r;
    r.theta = 3.1;
    RobotState next = integrate(r, ChannelVector{0, 0, 1, 0, 0, 0}, 0.1);
    CHECK(next.theta == doctest::Approx(3.2 - 2 * std::numbers::pi));
    CHECK(next.theta == doctest::Approx(-3.0832).epsilon(1e-4));
    CHECK(wrap_angle(std::numbers::pi) == doctest::Approx(std::numbers::pi));
    CHECK(wrap_angle(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
}

TEST_CASE("arm, lift and gripper clamp at zero") {
    RobotState r{0, 0, 0, 0.01, 0.01, 0.01};
    RobotState next = integrate(r, ChannelVector{0, 0, 0, -1, -1, -1}, 0.1);
    CHECK(next.d == 0.0);
    CHECK(next.z == 0.0);
    CHECK(next.beta == 0.0);
}

TEST_CASE("feedback linearization") {
    auto [v1, w1] = feedback_linearize(1, 0, 0, 0.5);
    CHECK(v1 == doctest::Approx(1));
    CHECK(w1 == doctest::Approx(0));
    auto [v2, w2] = feedback_linearize(0, 1, 0, 0.5);
    CHECK(v2 == doctest::Approx(0));
    CHECK(w2 == doctest::Approx(2));
    auto [v3, w3] = feedback_linearize(1, 0, std::numbers::pi / 2, 1.0);
    CHECK(v3 == doctest::Approx(0).epsilon(1e-12));
    CHECK(w3 == doctest::Approx(-1));
    CHECK_THROWS_AS(feedback_linearize(1, 0, 0, 0.0), Error);
}

TEST_CASE("differential base tracks the holonomic lookahead point") {
    // Unicycle driven by the linearized commands: the point ell ahead of the
    // axle follows the holonomic reference along a straight segment.
    double ell = 0.05, dt = 0.01;
    double x = 0, y = 0, th = 0.3;
    double px = x + ell * std::cos(th), py = y + ell * std::sin(th);
    double rx = px, ry = py;
    double vx = 0.6, vy = 0.4;
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        auto [v, w] = feedback_linearize(vx, vy, th, ell);
        x += v * std::cos(th) * dt;
        y += v * std::sin(th) * dt;
        th += w * dt;
        rx += vx * dt;
        ry += vy * dt;
        px = x + ell * std::cos(th);
        py = y + ell * std::sin(th);
        worst = std::max(worst, std::hypot(px - rx, py - ry));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("gripper tip is perpendicular to the heading") {
    RobotState r{1, 1, 0, 0.5, 0.2, 0};
    Position tip = gripper_tip(r);
    CHECK(tip.x == doctest::Approx(1));
    CHECK(tip.y == doctest::Approx(1.5));
}

TEST_CASE("entity waypoints interpolate and hold at the ends") {
    Entity e;
    e.waypoints = {{1.0, {0, 0, 0}}, {3.0, {2, 4, 0}}};
    CHECK(e.position_at(0.0).x == 0.0);
    CHECK(e.position_at(2.0).y == doctest::Approx(2.0));
    CHECK(e.position_at(10.0).x == 2.0);
}

TEST_CASE("control bounds") {
    ControlBounds b;
    CHECK(b.contains({1, -1, 1, 0.3, -0.3, 0.3}));
    CHECK_FALSE(b.contains({1.1, 0, 0, 0, 0, 0}));
    b.caps[2] = 0;
    CHECK_THROWS_AS(b.validate(), Error);
}
