#include <doctest.h>

#include <cmath>

#include "respec/error.hpp"
#include "respec/sim.hpp"

using namespace respec;

namespace {

ScenarioScript bare() {
    ScenarioScript s;
    s.name = "bare";
    s.spec = "events go\nG(go => F[0,5](robot.x > 1))";
    s.duration = 10.0;
    return s;
}

ChannelVector zero() { return ChannelVector{}; }

} // namespace

TEST_CASE("scripted events fire in exactly one step") {
    ScenarioScript s = bare();
    s.events = {{0.25, "go"}};
    Simulator sim(s);
    std::vector<double> fired;
    for (int k = 0; k < 6; ++k) {
        const WorldState& X = sim.begin_step();
        if (X.events.count("go")) fired.push_back(X.t);
        sim.end_step(zero());
    }
    REQUIRE(fired.size() == 1);
    CHECK(fired[0] == doctest::Approx(0.3));
}

TEST_CASE("external events join the next step only") {
    Simulator sim(bare());
    sim.begin_step();
    sim.end_step(zero());
    sim.fire("go");
    CHECK(sim.begin_step().events == std::set<std::string>{"go"});
    sim.end_step(zero());
    CHECK(sim.begin_step().events.empty());
}

TEST_CASE("moves teleport entities and drop their waypoints") {
    ScenarioScript s = bare();
    Entity cart;
    cart.name = "cart";
    cart.kind = EntityKind::Obstacle;
    cart.waypoints = {{0.0, {0, 0, 0}}, {10.0, {10, 0, 0}}};
    s.entities = {cart};
    s.moves = {{0.5, "cart", {-3, 4, 0}}};
    Simulator sim(s);
    CHECK(sim.begin_step().entity("cart").x == doctest::Approx(0.0));
    sim.end_step(zero());
    CHECK(sim.begin_step().entity("cart").x == doctest::Approx(0.1));
    for (int k = 0; k < 4; ++k) {
        sim.end_step(zero());
        sim.begin_step();
    }
    CHECK(sim.world().t == doctest::Approx(0.5));
    CHECK(sim.world().entity("cart") == Position{-3, 4, 0});
    sim.end_step(zero());
    CHECK(sim.begin_step().entity("cart") == Position{-3, 4, 0});
}

TEST_CASE("grasp, carry and deposit") {
    ScenarioScript s = bare();
    Entity obj;
    obj.name = "box";
    obj.kind = EntityKind::Object;
    obj.position = {0.0, 0.5, 0.2};
    Entity depot;
    depot.name = "bin";
    depot.kind = EntityKind::Depot;
    depot.position = {3.0, 0.5, 0.0};
    s.entities = {obj, depot};
    // Heading 0: the arm points along +y, so d = 0.5 puts the tip on the box.
    s.robot0 = {0.0, 0.0, 0.0, 0.5, 0.2, 1.02};
    s.dt = 0.1;
    Simulator sim(s);

    sim.begin_step();
    ChannelVector close = zero();
    close[kGrip] = -0.3;
    sim.end_step(close);
    CHECK(sim.world().carried == std::optional<std::string>("box"));

    ChannelVector drive = zero();
    drive[kX] = 1.0;
    for (int k = 0; k < 30; ++k) {
        sim.begin_step();
        sim.end_step(drive);
    }
    const WorldState& X = sim.begin_step();
    CHECK(X.entity("box").x == doctest::Approx(X.robot.x));
    CHECK(X.entity("box").y == doctest::Approx(0.5));

    ChannelVector open = zero();
    open[kGrip] = 0.3;
    while (sim.world().carried) {
        sim.begin_step();
        sim.end_step(open);
    }
    REQUIRE(sim.world().deposits.size() == 1);
    CHECK(sim.world().deposits[0] == std::pair<std::string, std::string>{"box", "bin"});
    double x_drop = sim.world().entity("box").x;
    sim.begin_step();
    sim.end_step(drive);
    CHECK(sim.begin_step().entity("box").x == doctest::Approx(x_drop));
}

TEST_CASE("no grasp when the tip is too far or too high") {
    ScenarioScript s = bare();
    Entity obj;
    obj.name = "box";
    obj.position = {0.0, 0.5, 0.5};
    s.entities = {obj};
    s.robot0 = {0.0, 0.0, 0.0, 0.5, 0.2, 0.5};
    Simulator sim(s);
    sim.begin_step();
    sim.end_step(zero());
    CHECK_FALSE(sim.world().carried);
}

TEST_CASE("control outside the box is rejected") {
    Simulator sim(bare());
    sim.begin_step();
    ChannelVector u = zero();
    u[kX] = 1.5;
    CHECK_THROWS_AS(sim.end_step(u), Error);
}

TEST_CASE("builtin scenarios") {
    for (const auto& name : builtin_names()) {
        ScenarioScript s = builtin_world(name);
        CHECK(s.name == name);
        CHECK_FALSE(s.spec.empty());
        CHECK(s.duration > 0.0);
    }
    CHECK_THROWS_AS(builtin_world("nowhere"), Error);
    CHECK(builtin_world("collect").events.at(0).t == doctest::Approx(1.0));
}

TEST_CASE("pick feasibility by straight-line travel") {
    // Time to close the distance at full base speed along the line.
    auto required_rate = [](const ScenarioScript& s) {
        const Entity& obj = s.entities.at(0);
        double dist = std::hypot(obj.position.x - s.robot0.x, obj.position.y - s.robot0.y);
        return (dist - 1.0 + 0.05) / 30.0;
    };
    CHECK(required_rate(builtin_world("collect")) < 1.0);
    CHECK(required_rate(builtin_world("collect-far")) > 1.0);
    CHECK(required_rate(builtin_world("collect-far")) == doctest::Approx(39.05 / 30.0));
}

TEST_CASE("scenario JSON round trip") {
    for (const auto& name : builtin_names()) {
        ScenarioScript s = builtin_world(name);
        nlohmann::json j = scenario_to_json(s);
        ScenarioScript back = scenario_from_json(j);
        CHECK(scenario_to_json(back) == j);
    }
}

TEST_CASE("scenario JSON schema errors") {
    nlohmann::json j = scenario_to_json(bare());
    j.erase("spec");
    CHECK_THROWS_AS(scenario_from_json(j), Error);
    j = scenario_to_json(bare());
    j["dt"] = 0.0;
    CHECK_THROWS_AS(scenario_from_json(j), Error);
    j = scenario_to_json(bare());
    j["entities"] = nlohmann::json::array({{{"name", "a"}, {"position", {1}}}});
    CHECK_THROWS_AS(scenario_from_json(j), Error);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.json"), Error);
}
