#include <doctest.h>

#include "generators.hpp"
#include "respec/error.hpp"
#include "respec/parser.hpp"

using namespace respec;

namespace {

ErrorCode code_of(const std::string& text, const Schema& schema = {}) {
    try {
        parse_document(text, schema);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a parse error for: " << text);
    return ErrorCode::Io;
}

const char* kCollect = R"(# pick and place
let d_obj = norm2(robot.xy - obj1.xy)
let d_dep = norm2(robot.xy - depot1.xy)
let theta_obj = abs(wrap(robot.theta - atan2(obj1.y - robot.y, obj1.x - robot.x) + pi / 2))
events pick
entities obj1, depot1
G(pick => F[0,30](d_obj < 1))
  & G(d_obj < 1 => F[0,15](theta_obj < 0.1))
  & G((robot.beta < 1) => (robot.beta < 1) U[0,25] (d_dep < 1 & robot.d < 0.2))
)";

} // namespace

TEST_CASE("alarm specification parses to a trigger over an eventually") {
    SpecFormula f = parse_spec("G(alarm => F[0,7](norm2(robot.xy - [3,4]) < 1))");
    REQUIRE(f->kind == SpecKind::Trigger);
    CHECK(f->trigger->kind == EventKind::Atom);
    CHECK(f->trigger->atom == "alarm");
    const SpecFormula& body = f->children[0];
    REQUIRE(body->kind == SpecKind::Eventually);
    CHECK(body->bounds == Bounds{0, 7});
    CHECK(body->state[0]->kind == StateKind::Pred);
}

TEST_CASE("aliases resolve by name") {
    SpecDocument doc = parse_document("let d_obj = norm2(robot.xy - obj1.xy)\nG(pick => F[0,30](d_obj < 1))");
    const auto& pred = doc.formula->children[0]->state[0]->pred;
    CHECK(pred.lhs->kind == ExprKind::Alias);
    CHECK(pred.lhs->name == "d_obj");
    CHECK(print_formula(doc.formula) == "G(pick => F[0,30](d_obj < 1))");
}

TEST_CASE("parse errors carry codes and positions") {
    CHECK(code_of("F[7,0](robot.x < 1)") == ErrorCode::BoundsReversed);
    CHECK(code_of("F[0,inf](robot.x < 1)") == ErrorCode::BoundsReversed);
    CHECK(code_of("F[0,1](robot.q < 1)") == ErrorCode::UnknownName);
    CHECK(code_of("F[0,1](speed < 1)") == ErrorCode::UnknownName);
    CHECK(code_of("events pick\nG(pikc => F[0,1](robot.x < 1))") == ErrorCode::UnknownName);
    CHECK(code_of("entities obj1\nF[0,1](norm2(robot.xy - obj2.xy) < 1)") == ErrorCode::UnknownName);
    CHECK(code_of("F[0,1](robot.x < 1") == ErrorCode::Syntax);
    CHECK(code_of("F[0,1](!(robot.x < 1 & robot.y < 2))") == ErrorCode::Syntax);
    try {
        parse_document("F[0,1](robot.x < 1)\n  & F[0,2](robot.x $ 2)");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(e.column() == 20);
    }
    try {
        parse_document("F[0,1](robot.x <)");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(e.code() == ErrorCode::Syntax);
        CHECK(e.column() == 17);
    }
}

TEST_CASE("canonical printing") {
    CHECK(print_formula(parse_spec("F [0, 7] ( robot.x<1 )")) == "F[0,7](robot.x < 1)");
    CHECK(print_formula(parse_spec("F[0,7](robot.x < 1) & G[0,inf](robot.y > 0)")) ==
          "(F[0,7](robot.x < 1)) & (G[0,inf](robot.y > 0))");
    CHECK(print_formula(parse_spec("G(robot.y > 0)")) == "G[0,inf](robot.y > 0)");
}

TEST_CASE("collect-style document round-trips") {
    SpecDocument doc = parse_document(kCollect);
    CHECK(doc.schema.alias_order.size() == 3);
    SpecDocument again = parse_document(print_document(doc));
    CHECK(structurally_equal(doc.formula, again.formula));
    CHECK(again.schema.events == doc.schema.events);
    CHECK(again.schema.entities == doc.schema.entities);
    for (const auto& name : doc.schema.alias_order)
        CHECK(structurally_equal(doc.schema.aliases.at(name), again.schema.aliases.at(name)));
}

TEST_CASE("random specifications round-trip through the printer") {
    testing::Generator g(99);
    for (int i = 0; i < 1000; ++i) {
        SpecFormula f = g.spec(3);
        std::string text = print_formula(f);
        SpecFormula again = parse_spec(text);
        REQUIRE_MESSAGE(structurally_equal(f, again), text);
        CHECK(print_formula(again) == text);
    }
}

TEST_CASE("selectors") {
    SpecFormula f = parse_spec("(G(pick => F[0,30](robot.x < 1))) & (F[0,5](robot.y > 2 & robot.z < 1))");
    auto root = select_node(f, {});
    CHECK(std::get<SpecFormula>(root) == f);
    auto ev = std::get<SpecFormula>(select_node(f, {0, 1}));
    CHECK(ev->kind == SpecKind::Eventually);
    CHECK(ev->bounds == Bounds{0, 30});
    CHECK(std::get<EventFormula>(select_node(f, {0, 0}))->atom == "pick");
    CHECK(std::holds_alternative<StateFormula>(select_node(f, {1, 0, 1})));
    CHECK_THROWS_AS(select_node(f, {0, 1, 0, 0}), Error);
    CHECK_THROWS_AS(select_node(f, {2}), Error);
    CHECK(selector_to_string(parse_selector("@0.1.2")) == "0.1.2");
    CHECK(parse_selector("@").empty());
}

TEST_CASE("bound edits leave other selectors untouched") {
    SpecFormula f = parse_spec("(G(pick => F[0,30](robot.x < 1))) & (F[0,5](robot.y > 2))");
    SpecFormula g = with_bounds(f, {0, 1}, Bounds{0, 45});
    CHECK(std::get<SpecFormula>(select_node(g, {0, 1}))->bounds == Bounds{0, 45});
    CHECK(std::get<SpecFormula>(select_node(g, {1})) == std::get<SpecFormula>(select_node(f, {1})));
    CHECK(same_shape(f, g));
    CHECK(structurally_equal(with_bounds(g, {0, 1}, Bounds{0, 45}), g));
    CHECK_THROWS_AS(with_bounds(f, {0, 1}, Bounds{0, std::numeric_limits<double>::infinity()}), Error);
}

TEST_CASE("modification commands") {
    Schema schema;
    schema.aliases["d_obj"] = parse_expression("norm2(robot.xy - obj1.xy)");
    schema.alias_order.push_back("d_obj");
    schema.aliases["d_obj2"] = parse_expression("norm2(robot.xy - obj2.xy)");
    schema.alias_order.push_back("d_obj2");

    auto sb = parse_modification("set-bounds @0.1 [0,45]", schema);
    auto& bounds = std::get<SetBounds>(sb.command);
    CHECK(bounds.target == Selector{0, 1});
    CHECK(bounds.bounds == Bounds{0, 45});

    auto sp = parse_modification("set-pred d_obj := d_obj2", schema);
    auto& pred = std::get<SetPredicate>(sp.command);
    REQUIRE(pred.pattern_expr);
    CHECK(pred.pattern_expr->name == "d_obj");
    CHECK(pred.replacement_expr->name == "d_obj2");

    auto pp = parse_modification("set-pred robot.d < 0.2 := robot.d < 0.05", schema);
    CHECK(std::get<SetPredicate>(pp.command).pattern_pred.has_value());

    auto at = parse_modification("set-pred @1.0 robot.x > 3", schema);
    CHECK(std::get<SetPredicate>(at.command).target == Selector{1, 0});

    auto ac = parse_modification(
        "add-conj G[0,100](norm2(robot.xy - cone1.xy) > 0.3 & norm2(robot.xy - cone2.xy) > 0.3)", schema);
    CHECK(std::get<AddConjunction>(ac.command).clause->kind == SpecKind::Always);
    CHECK(command_kind(ac.command) == "add-conj");

    auto ad = parse_modification("let d_dep2 = norm2(robot.xy - depot2.xy)\nadd-disj F[0,9](d_dep2 < 1)", schema);
    CHECK(ad.declarations.aliases.count("d_dep2") == 1);
    CHECK(command_kind(ad.command) == "add-disj");

    CHECK_THROWS_AS(parse_modification("set-bounds @0.1 [5,1]", schema), ParseError);
    CHECK_THROWS_AS(parse_modification("frobnicate", schema), ParseError);
    CHECK_THROWS_AS(parse_modification("replace F[0,1](", schema), ParseError);
}
