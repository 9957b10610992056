#include "respec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "respec/error.hpp"

namespace respec {

namespace {

constexpr double kStepTolerance = 1e-9;

std::string object_declarations(const std::string& obj, const std::string& suffix) {
    std::ostringstream out;
    out << "let d_obj" << suffix << " = norm2(robot.xy - " << obj << ".xy)\n"
        << "let theta_obj" << suffix << " = abs(wrap(robot.theta - atan2(" << obj << ".y - robot.y, " << obj
        << ".x - robot.x) + pi / 2))\n";
    return out.str();
}

std::string depot_declarations(const std::string& dep, const std::string& suffix) {
    std::ostringstream out;
    out << "let d_dep" << suffix << " = norm2(robot.xy - " << dep << ".xy)\n"
        << "let theta_dep" << suffix << " = abs(wrap(robot.theta - atan2(" << dep << ".y - robot.y, " << dep
        << ".x - robot.x) + pi / 2))\n";
    return out.str();
}

/// The five pick-and-place clauses for object `obj` and depot `dep`, written
/// over the aliases d_obj, theta_obj, d_dep<suffix>, theta_dep<suffix>.
std::string collect_formula(const std::string& obj, const std::string& dep, const std::string& dep_suffix) {
    const std::string d_dep = "d_dep" + dep_suffix;
    const std::string theta_dep = "theta_dep" + dep_suffix;
    std::ostringstream out;
    out << "G(pick => F[0,30](d_obj < 1))\n"
        << "  & G(d_obj < 1 => F[0,15](theta_obj < 0.1))\n"
        << "  & G((d_obj < 1 & theta_obj < 0.1) => F[0,10](abs(robot.z - " << obj
        << ".z) < 0.05 & abs(robot.d - d_obj) < 0.05) & F[10,15](robot.beta < 1))\n"
        << "  & G(robot.beta < 1 => (robot.beta < 1) U[0,25] (" << d_dep << " < 1 & robot.d < 0.2 & abs(robot.z - "
        << dep << ".z) < 0.1))\n"
        << "  & G(" << d_dep << " < 1 => F[0,20](" << theta_dep << " < 0.1 & abs(robot.d - " << d_dep
        << ") < 0.05) & F[20,25](robot.beta > 3))\n";
    return out.str();
}

std::string collect_document(const std::vector<std::string>& entity_names) {
    std::ostringstream out;
    out << "# Pick up obj1 and deliver it to depot1.\n"
        << object_declarations("obj1", "") << depot_declarations("depot1", "") << "events pick\n"
        << "entities ";
    for (std::size_t i = 0; i < entity_names.size(); ++i) out << (i ? ", " : "") << entity_names[i];
    out << "\n" << collect_formula("obj1", "depot1", "");
    return out.str();
}

/// Heading that puts the arm side toward `target` when standing at (x, y).
double facing(double x, double y, const Position& target) {
    return wrap_angle(std::atan2(target.y - y, target.x - x) - std::numbers::pi / 2.0);
}

Entity entity(const std::string& name, EntityKind kind, Position p) {
    Entity e;
    e.name = name;
    e.kind = kind;
    e.position = p;
    return e;
}

std::vector<std::string> names_of(const std::vector<Entity>& entities) {
    std::vector<std::string> out;
    for (const auto& e : entities) out.push_back(e.name);
    return out;
}

ScenarioScript collect_base(const std::string& name, const Position& target, std::vector<Entity> entities) {
    ScenarioScript s;
    s.name = name;
    s.robot0 = {6.0, 6.0, facing(6.0, 6.0, target), 0.0, 0.2, 4.0};
    s.entities = std::move(entities);
    s.spec = collect_document(names_of(s.entities));
    s.events = {{1.0, "pick"}};
    s.duration = 120.0;
    return s;
}

const Position kObj1{2.0, 5.0, 0.5};
const Position kObj2{5.0, 2.0, 0.5};
const Position kDepot1{0.0, 0.0, 0.3};
const Position kDepot2{4.0, 1.0, 0.3};

ScenarioScript make_alarm() {
    ScenarioScript s;
    s.name = "alarm";
    s.description = "Reach within 1 unit of [3,4] within 7 s of the alarm.";
    s.spec = "events alarm\nG(alarm => F[0,7](norm2(robot.xy - [3,4]) < 1))\n";
    s.events = {{1.0, "alarm"}};
    s.duration = 12.0;
    return s;
}

ScenarioScript make_collect() {
    ScenarioScript s = collect_base("collect", kObj1,
                                    {entity("obj1", EntityKind::Object, kObj1),
                                     entity("depot1", EntityKind::Depot, kDepot1)});
    s.description = "Pick obj1 after the pick event and deposit it at depot1.";
    return s;
}

ScenarioScript make_collect_far(bool modified) {
    Position obj{2.0, 5.0, 0.5};
    ScenarioScript s = collect_base(modified ? "collect-far" : "collect-far-unmodified", obj,
                                    {entity("obj1", EntityKind::Object, obj),
                                     entity("depot1", EntityKind::Depot, kDepot1)});
    s.robot0.x = 42.0;
    s.robot0.y = 5.0;
    s.robot0.theta = facing(42.0, 5.0, obj);
    s.duration = 60.0;
    if (modified) {
        s.description = "The object is 40 units away; the pick window is widened to 45 s after the warning.";
        ScriptedModification m;
        m.after_warning = true;
        m.command = "set-bounds @0.0.0.0.1 [0,45]";
        s.modifications.push_back(m);
    } else {
        s.description = "The object is 40 units away and the 30 s pick window is kept.";
    }
    return s;
}

ScenarioScript make_collect_mod2() {
    ScenarioScript s = collect_base("collect-mod2", kObj2,
                                    {entity("obj1", EntityKind::Object, kObj1),
                                     entity("obj2", EntityKind::Object, kObj2),
                                     entity("depot1", EntityKind::Depot, kDepot1)});
    s.description = "Predicates are rewritten to target obj2 with a tighter retract threshold.";
    s.modifications = {
        {0.5, false, object_declarations("obj2", "2") + "set-pred d_obj := d_obj2"},
        {0.5, false, "set-pred theta_obj := theta_obj2"},
        {0.5, false, "set-pred obj1.z := obj2.z"},
        {0.5, false, "set-pred robot.d < 0.2 := robot.d < 0.05"},
    };
    return s;
}

ScenarioScript make_collect_cones() {
    ScenarioScript s = collect_base("collect-cones", kObj1, {});
    const Position r0{s.robot0.x, s.robot0.y, 0.0};
    double lx = kObj1.x - r0.x, ly = kObj1.y - r0.y;
    double len = std::hypot(lx, ly);
    double nx = ly / len, ny = -lx / len;
    auto cone_at = [&](double along) {
        return Position{r0.x + along * lx + 0.15 * nx, r0.y + along * ly + 0.15 * ny, 0.0};
    };
    s.entities = {entity("obj1", EntityKind::Object, kObj1), entity("depot1", EntityKind::Depot, kDepot1),
                  entity("cone1", EntityKind::Cone, cone_at(0.35)), entity("cone2", EntityKind::Cone, cone_at(0.6))};
    s.spec = collect_document(names_of(s.entities));
    s.description = "Cone avoidance is conjoined mid-transit.";
    s.modifications = {{8.0, false,
                        "add-conj G[0,100](norm2(robot.xy - cone1.xy) > 0.3 & norm2(robot.xy - cone2.xy) > 0.3)"}};
    s.duration = 150.0;
    return s;
}

ScenarioScript make_collect_two_depots(bool flip) {
    ScenarioScript s = collect_base(flip ? "collect-two-depots-flip" : "collect-two-depots", kObj1,
                                    {entity("obj1", EntityKind::Object, kObj1),
                                     entity("depot1", EntityKind::Depot, kDepot1),
                                     entity("depot2", EntityKind::Depot, kDepot2)});
    s.modifications = {{0.5, false, depot_declarations("depot2", "2") + "add-disj " + collect_formula("obj1", "depot2", "2")}};
    s.duration = 130.0;
    if (flip) {
        s.description = "Depot 2 is moved far away during the retract phase.";
        s.moves = {{58.0, "depot2", {20.0, 20.0, 0.3}}};
    } else {
        s.description = "A second depot is offered by disjunction; it is the nearer one.";
    }
    return s;
}

Position position_from_json(const nlohmann::json& j) {
    if (j.is_array()) {
        if (j.size() < 2 || j.size() > 3) throw Error(ErrorCode::InvalidConfig, "position must have 2 or 3 numbers");
        return {j[0].get<double>(), j[1].get<double>(), j.size() == 3 ? j[2].get<double>() : 0.0};
    }
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.value("z", 0.0)};
}

nlohmann::json position_to_json(const Position& p) { return nlohmann::json::array({p.x, p.y, p.z}); }

} // namespace

double ScenarioScript::last_scripted_time() const {
    double t = 0.0;
    for (const auto& e : events) t = std::max(t, e.t);
    for (const auto& m : moves) t = std::max(t, m.t);
    for (const auto& m : modifications)
        if (!m.after_warning) t = std::max(t, m.t);
    for (const auto& e : entities)
        for (const auto& w : e.waypoints) t = std::max(t, w.t);
    return t;
}

std::vector<std::string> builtin_names() {
    return {"alarm",          "collect",           "collect-far",           "collect-far-unmodified",
            "collect-cones",  "collect-two-depots", "collect-two-depots-flip", "collect-mod2"};
}

ScenarioScript builtin_world(const std::string& name) {
    if (name == "alarm") return make_alarm();
    if (name == "collect") return make_collect();
    if (name == "collect-far") return make_collect_far(true);
    if (name == "collect-far-unmodified") return make_collect_far(false);
    if (name == "collect-cones") return make_collect_cones();
    if (name == "collect-two-depots") return make_collect_two_depots(false);
    if (name == "collect-two-depots-flip") return make_collect_two_depots(true);
    if (name == "collect-mod2") return make_collect_mod2();
    throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
}

nlohmann::json scenario_to_json(const ScenarioScript& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["description"] = s.description;
    j["spec"] = s.spec;
    const auto& r = s.robot0;
    j["robot0"] = {{"x", r.x}, {"y", r.y}, {"theta", r.theta}, {"d", r.d}, {"z", r.z}, {"beta", r.beta}};
    j["entities"] = nlohmann::json::array();
    for (const auto& e : s.entities) {
        nlohmann::json je{{"name", e.name}, {"kind", to_string(e.kind)}, {"position", position_to_json(e.position)}};
        if (!e.waypoints.empty()) {
            je["waypoints"] = nlohmann::json::array();
            for (const auto& w : e.waypoints)
                je["waypoints"].push_back({{"t", w.t}, {"position", position_to_json(w.position)}});
        }
        j["entities"].push_back(je);
    }
    j["events"] = nlohmann::json::array();
    for (const auto& e : s.events) j["events"].push_back({{"t", e.t}, {"name", e.name}});
    j["moves"] = nlohmann::json::array();
    for (const auto& m : s.moves)
        j["moves"].push_back({{"t", m.t}, {"entity", m.entity}, {"position", position_to_json(m.position)}});
    j["modifications"] = nlohmann::json::array();
    for (const auto& m : s.modifications) {
        nlohmann::json jm{{"command", m.command}};
        if (m.after_warning) jm["at"] = "warning";
        else jm["t"] = m.t;
        j["modifications"].push_back(jm);
    }
    j["dt"] = s.dt;
    j["duration"] = s.duration;
    j["caps"] = s.bounds.caps;
    j["method"] = s.method;
    return j;
}

ScenarioScript scenario_from_json(const nlohmann::json& j) {
    try {
        ScenarioScript s;
        s.name = j.value("name", std::string("scenario"));
        s.description = j.value("description", std::string());
        s.spec = j.at("spec").get<std::string>();
        if (j.contains("robot0")) {
            const auto& r = j.at("robot0");
            s.robot0 = {r.value("x", 0.0), r.value("y", 0.0), r.value("theta", 0.0),
                        r.value("d", 0.0), r.value("z", 0.0), r.value("beta", 0.0)};
        }
        for (const auto& je : j.value("entities", nlohmann::json::array())) {
            Entity e;
            e.name = je.at("name").get<std::string>();
            e.kind = entity_kind_from_string(je.value("kind", std::string("object")));
            e.position = position_from_json(je.at("position"));
            for (const auto& w : je.value("waypoints", nlohmann::json::array()))
                e.waypoints.push_back({w.at("t").get<double>(), position_from_json(w.at("position"))});
            s.entities.push_back(std::move(e));
        }
        for (const auto& e : j.value("events", nlohmann::json::array()))
            s.events.push_back({e.at("t").get<double>(), e.at("name").get<std::string>()});
        for (const auto& m : j.value("moves", nlohmann::json::array()))
            s.moves.push_back(
                {m.at("t").get<double>(), m.at("entity").get<std::string>(), position_from_json(m.at("position"))});
        for (const auto& m : j.value("modifications", nlohmann::json::array())) {
            ScriptedModification sm;
            sm.command = m.at("command").get<std::string>();
            if (m.value("at", std::string()) == "warning") sm.after_warning = true;
            else sm.t = m.at("t").get<double>();
            s.modifications.push_back(std::move(sm));
        }
        s.dt = j.value("dt", 0.1);
        s.duration = j.value("duration", 60.0);
        if (j.contains("caps")) s.bounds.caps = j.at("caps").get<ChannelVector>();
        s.method = j.value("method", std::string("reevaluate"));
        if (!(s.dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "dt must be positive");
        if (s.duration < 0.0) throw Error(ErrorCode::InvalidConfig, "duration must be nonnegative");
        s.bounds.validate();
        auto by_time = [](const auto& a, const auto& b) { return a.t < b.t; };
        std::stable_sort(s.events.begin(), s.events.end(), by_time);
        std::stable_sort(s.moves.begin(), s.moves.end(), by_time);
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("scenario JSON: ") + e.what());
    }
}

ScenarioScript load_scenario(const std::string& name_or_path) {
    auto names = builtin_names();
    if (std::find(names.begin(), names.end(), name_or_path) != names.end()) return builtin_world(name_or_path);
    std::ifstream in(name_or_path);
    if (!in) throw Error(ErrorCode::UnknownScenario, "no builtin scenario or file named '" + name_or_path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("scenario JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

Simulator::Simulator(ScenarioScript script) : script_(std::move(script)), entities_(script_.entities) {
    auto by_time = [](const auto& a, const auto& b) { return a.t < b.t; };
    std::stable_sort(script_.events.begin(), script_.events.end(), by_time);
    std::stable_sort(script_.moves.begin(), script_.moves.end(), by_time);
    world_.robot = script_.robot0;
    place_entities();
}

void Simulator::fire(const std::string& name) { external_.insert(name); }

void Simulator::place_entities() {
    for (const auto& e : entities_) {
        if (world_.carried && *world_.carried == e.name) world_.entities[e.name] = gripper_tip(world_.robot);
        else world_.entities[e.name] = e.position_at(world_.t);
    }
}

const WorldState& Simulator::begin_step() {
    world_.t = time();
    while (next_move_ < script_.moves.size() && script_.moves[next_move_].t <= world_.t + kStepTolerance) {
        const auto& m = script_.moves[next_move_++];
        for (auto& e : entities_)
            if (e.name == m.entity) {
                e.position = m.position;
                e.waypoints.clear();
            }
    }
    place_entities();
    world_.events = std::move(external_);
    external_.clear();
    while (next_event_ < script_.events.size() && script_.events[next_event_].t <= world_.t + kStepTolerance)
        world_.events.insert(script_.events[next_event_++].name);
    return world_;
}

void Simulator::end_step(const ChannelVector& u) {
    if (!script_.bounds.contains(u, 1e-7)) throw Error(ErrorCode::InvalidConfig, "control outside the box");
    world_.robot = integrate(world_.robot, u, script_.dt);
    ++step_;
    world_.t = time();
    update_grasp();
    world_.events.clear();
    place_entities();
}

void Simulator::update_grasp() {
    const auto& g = script_.grasp;
    Position tip = gripper_tip(world_.robot);
    if (!world_.carried && world_.robot.beta < g.grasp_below) {
        const Entity* best = nullptr;
        double best_dist = 0.0;
        for (const auto& e : entities_) {
            if (e.kind != EntityKind::Object) continue;
            Position p = e.position_at(world_.t);
            double dxy = std::hypot(p.x - tip.x, p.y - tip.y);
            if (dxy <= g.reach_tolerance && std::abs(p.z - tip.z) <= g.height_tolerance &&
                (!best || dxy < best_dist)) {
                best = &e;
                best_dist = dxy;
            }
        }
        if (best) world_.carried = best->name;
    } else if (world_.carried && world_.robot.beta > g.release_above) {
        std::string depot;
        double depot_dist = 0.0;
        for (const auto& e : entities_) {
            if (e.kind != EntityKind::Depot) continue;
            Position p = e.position_at(world_.t);
            double dxy = std::hypot(p.x - tip.x, p.y - tip.y);
            if (dxy <= g.depot_radius && (depot.empty() || dxy < depot_dist)) {
                depot = e.name;
                depot_dist = dxy;
            }
        }
        for (auto& e : entities_)
            if (e.name == *world_.carried) {
                e.position = tip;
                e.waypoints.clear();
            }
        world_.deposits.emplace_back(*world_.carried, depot);
        world_.carried.reset();
    }
}

} // namespace respec
