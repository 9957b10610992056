#include <doctest.h>

#include "respec/error.hpp"
#include "respec/parser.hpp"
#include "respec/runtime.hpp"
#include "respec/session.hpp"

using namespace respec;

namespace {

const char* kAlarm = "events alarm\nG(alarm => F[0,7](norm2(robot.xy - [3,4]) < 1))";

const char* kAlarmNew =
    "G(alarm => F[0,15](norm2(robot.xy - [3,5]) < 0.5)) & G[0,50](norm2(robot.xy - [1,1]) > 0.5)"
    " | G(alarm => F[0,15](norm2(robot.xy - [0,4]) < 1))";

WorldState origin_world() { return WorldState{}; }

RuntimeContext alarm_context() { return init(parse_document(kAlarm), origin_world(), RuntimeConfig{}); }

std::vector<std::string> fingerprints(const RuntimeContext& ctx) {
    std::vector<std::string> out;
    for (const auto& s : ctx.automata) out.push_back(fingerprint(*s.automaton));
    return out;
}

WorldState at(double t, double x = 0.0, double y = 0.0) {
    WorldState X;
    X.t = t;
    X.robot.x = x;
    X.robot.y = y;
    return X;
}

} // namespace

TEST_CASE("new alarm formula yields [B x B1, B2]") {
    RuntimeContext ctx = alarm_context();
    SpecFormula psi_new = parse_spec(kAlarmNew, ctx.spec.schema);
    ModificationDiff diff = find_mods(ctx.spec, psi_new);
    REQUIRE(diff.additions.size() == 2);
    CHECK(diff.additions[0].conjunction);
    CHECK_FALSE(diff.additions[1].conjunction);
    REQUIRE(diff.rewrites.size() == 1);

    // Independent construction of the expected automata.
    AbstractionResult base = prep_spec(parse_document(kAlarm).formula);
    AbstractionResult b1 = prep_spec(parse_spec("G[0,50](norm2(robot.xy - [1,1]) > 0.5)"), {}, "c1:");
    AbstractionResult b2 =
        prep_spec(parse_spec("G(alarm => F[0,15](norm2(robot.xy - [0,4]) < 1))", ctx.spec.schema), {}, "c2:");
    BuchiAutomaton product = intersect(*base.automaton, *b1.automaton, base.initial, b1.initial);

    ModificationResult r = modify(ctx, diff, origin_world());
    REQUIRE(r.ok);
    REQUIRE(ctx.automata.size() == 2);
    CHECK(fingerprints(ctx) == std::vector<std::string>{fingerprint(product), fingerprint(*b2.automaton)});
    CHECK(find_prop(ctx.props, "p1")->window == Bounds{0, 15});
    CHECK(print_formula(ctx.spec.formula) == print_formula(psi_new));
}

TEST_CASE("structured commands give the same B_set as the whole-formula diff") {
    RuntimeContext a = alarm_context();
    RuntimeContext b = alarm_context();
    REQUIRE(modify(a, find_mods(a.spec, parse_spec(kAlarmNew, a.spec.schema)), origin_world()).ok);
    for (const char* cmd : {"set-bounds @1 [0,15]", "set-pred @1.0 norm2(robot.xy - [3,5]) < 0.5",
                            "add-conj G[0,50](norm2(robot.xy - [1,1]) > 0.5)",
                            "add-disj G(alarm => F[0,15](norm2(robot.xy - [0,4]) < 1))"})
        REQUIRE_MESSAGE(apply_modification(b, cmd, origin_world()).ok, cmd);
    CHECK(fingerprints(a) == fingerprints(b));
    CHECK(print_formula(a.spec.formula) == print_formula(b.spec.formula));
}

TEST_CASE("empty diff leaves the context unchanged") {
    RuntimeContext ctx = alarm_context();
    auto before = fingerprints(ctx);
    ModificationDiff diff = find_mods(ctx.spec, ctx.spec.formula);
    CHECK(diff.empty());
    ModificationResult r = modify(ctx, diff, origin_world());
    CHECK(r.ok);
    CHECK(fingerprints(ctx) == before);
    CHECK(ctx.automata.size() == 1);
}

TEST_CASE("set-bounds is idempotent") {
    RuntimeContext ctx = alarm_context();
    REQUIRE(apply_modification(ctx, "set-bounds @1 [0,12]", origin_world()).ok);
    auto props_once = ctx.props;
    auto formula_once = print_formula(ctx.spec.formula);
    REQUIRE(apply_modification(ctx, "set-bounds @1 [0,12]", origin_world()).ok);
    CHECK(print_formula(ctx.spec.formula) == formula_once);
    REQUIRE(ctx.props.size() == props_once.size());
    for (std::size_t i = 0; i < props_once.size(); ++i) CHECK(ctx.props[i].window == props_once[i].window);
    CHECK(ctx.templates.at("p1").window == Bounds{0, 12});
}

TEST_CASE("failed modifications leave the context untouched") {
    RuntimeContext ctx = alarm_context();
    REQUIRE(apply_modification(ctx, "set-bounds @1 [0,9]", origin_world()).ok);
    const auto fp = fingerprints(ctx);
    const auto formula = print_formula(ctx.spec.formula);

    SUBCASE("structural replace") {
        auto r = apply_modification(ctx, "replace G(alarm => G[0,7](norm2(robot.xy - [3,4]) < 1))", origin_world());
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "UndiffableChange");
    }
    SUBCASE("syntax error") {
        auto r = apply_modification(ctx, "set-bounds @1 [0,", origin_world());
        CHECK_FALSE(r.ok);
        CHECK(r.error_code == "Syntax");
    }
    SUBCASE("reversed bounds") {
        auto r = apply_modification(ctx, "set-bounds @1 [9,2]", origin_world());
        CHECK_FALSE(r.ok);
    }
    SUBCASE("unknown selector") {
        auto r = apply_modification(ctx, "set-bounds @0.0.0.7 [0,2]", origin_world());
        CHECK_FALSE(r.ok);
    }
    CHECK(fingerprints(ctx) == fp);
    CHECK(print_formula(ctx.spec.formula) == formula);
    CHECK(find_prop(ctx.props, "p1")->window == Bounds{0, 9});
}

TEST_CASE("rewrites keep every automaton and its current state") {
    RuntimeContext ctx = alarm_context();
    run_step(ctx, [] { auto X = at(0.0); X.events = {"alarm"}; return X; }(), nullptr, {});
    const auto* automaton = ctx.automata[0].automaton.get();
    const int state = ctx.automata[0].state;
    auto r = apply_modification(ctx, "set-pred @1.0 norm2(robot.xy - [3,5]) < 0.5", at(0.1));
    REQUIRE(r.ok);
    CHECK(r.cost.cost == CostClass::InStep);
    CHECK(ctx.automata[0].automaton.get() == automaton);
    CHECK(ctx.automata[0].state == state);
    // The live barrier follows the new predicate.
    REQUIRE(ctx.barriers.count("p1"));
    CHECK(ctx.barriers.at("p1").reach.at(0).delta_sat == doctest::Approx(0.05));
    CHECK(evaluate(ctx.barriers.at("p1").reach.at(0).h, at(0.1, 3, 5)) == doctest::Approx(0.5));
}

TEST_CASE("rewriting a finished obligation is reported irrelevant") {
    RuntimeContext ctx = init(parse_document("F[0,5](robot.x > 1)"), at(0.0, 2.0), RuntimeConfig{});
    StepReport rep = run_step(ctx, at(0.0, 2.0), nullptr, {});
    REQUIRE(ctx.monitor.instances.at("p").status == InstanceStatus::Completed);
    const auto formula = print_formula(ctx.spec.formula);

    auto r = apply_modification(ctx, "set-pred robot.x > 1 := robot.x > 3", at(0.1, 2.0));
    REQUIRE(r.ok);
    CHECK(r.rewritten.empty());
    REQUIRE(r.feedback.size() == 2);
    CHECK(r.feedback[0].kind == FeedbackKind::IrrelevantModification);
    CHECK(r.feedback[1].kind == FeedbackKind::RecommendConjunction);
    CHECK(r.feedback[1].message.find("conjunction") != std::string::npos);
    CHECK(print_formula(ctx.spec.formula) == formula);
    CHECK(print_predicate(find_prop(ctx.props, "p")->reach.at(0)) == "robot.x > 1");
}

TEST_CASE("widening a missed window revives the obligation") {
    RuntimeContext ctx = alarm_context();
    WorldState X = at(0.0, -20.0, 0.0);
    X.events = {"alarm"};
    run_step(ctx, X, nullptr, {});
    X.events.clear();
    X.t = 7.2;
    auto rep = run_step(ctx, X, nullptr, {});
    REQUIRE(ctx.monitor.instances.at("p1").status == InstanceStatus::Violated);
    CHECK(run_violations(ctx) == 1);
    CHECK_FALSE(ctx.barriers.count("p1"));

    X.t = 7.3;
    auto mod = run_step(ctx, X, nullptr, {"set-bounds @1 [0,40]"});
    REQUIRE(mod.modifications.size() == 1);
    const auto& fb = mod.modifications[0].result.feedback;
    CHECK(std::any_of(fb.begin(), fb.end(), [](const Feedback& f) { return f.kind == FeedbackKind::Revived; }));
    CHECK(ctx.monitor.instances.at("p1").status == InstanceStatus::Active);
    CHECK(ctx.barriers.count("p1"));
    CHECK(run_violations(ctx) == 0);
    CHECK(mod.activated == std::vector<std::string>{"p1"});
}

TEST_CASE("cost classes") {
    SUBCASE("bounds and predicate rewrites are in-step") {
        RuntimeContext ctx = alarm_context();
        ModificationDiff d = find_mods(ctx.spec, parse_modification("set-bounds @1 [0,9]").command);
        CHECK(classify_cost(ctx, d).cost == CostClass::InStep);
    }
    SUBCASE("a small conjunction fits in the step") {
        RuntimeContext ctx = alarm_context();
        ModificationDiff d =
            find_mods(ctx.spec, parse_modification("add-conj G[0,50](robot.x > -5)", ctx.spec.schema).command);
        CHECK(classify_cost(ctx, d).cost == CostClass::InStep);
    }
    SUBCASE("conjoining onto the pick-and-place automaton needs a pause") {
        ScenarioScript s = builtin_world("collect-cones");
        Session session(s);
        RuntimeContext ctx = session.context();
        auto parsed = parse_modification(s.modifications.at(0).command, ctx.spec.schema);
        ModificationDiff d = find_mods(ctx.spec, parsed.command);
        CostEstimate c = classify_cost(ctx, d);
        CHECK(c.cost == CostClass::RequiresPause);
        CHECK(c.estimate_ms > 0.5 * 0.1 * 1000.0);
    }
}

TEST_CASE("conjunction merges into every automaton of the set") {
    RuntimeContext ctx = alarm_context();
    REQUIRE(apply_modification(ctx, "add-disj G(alarm => F[0,9](robot.x > 2))", origin_world()).ok);
    REQUIRE(ctx.automata.size() == 2);
    auto r = apply_modification(ctx, "add-conj G[0,50](robot.y > -5)", origin_world());
    REQUIRE(r.ok);
    REQUIRE(ctx.automata.size() == 2);
    for (const auto& slot : ctx.automata) CHECK(slot.automaton->alphabet.count("c2:p"));
    CHECK(ctx.spec.clauses.size() == 3);
    CHECK(selector_to_string(ctx.spec.clauses[0].path) == "0.0");
    CHECK(selector_to_string(ctx.spec.clauses[1].path) == "0.1");
    CHECK(selector_to_string(ctx.spec.clauses[2].path) == "1");
}

TEST_CASE("declarations in a modification extend the schema") {
    RuntimeContext ctx = alarm_context();
    auto r = apply_modification(ctx, "let far = norm2(robot.xy - [9,9])\nadd-conj G[0,20](far > 1)", origin_world());
    REQUIRE(r.ok);
    CHECK(ctx.spec.schema.aliases.count("far"));
    auto bad = apply_modification(ctx, "add-conj G[0,20](nowhere > 1)", origin_world());
    CHECK_FALSE(bad.ok);
}
