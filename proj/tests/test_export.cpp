#include <doctest.h>

#include "respec/abstraction.hpp"
#include "respec/export.hpp"
#include "respec/parser.hpp"
#include "respec/session.hpp"

using namespace respec;
using nlohmann::json;

namespace {

std::vector<json> full_trace(const Session& s) {
    std::vector<json> out{s.header_json()};
    out.insert(out.end(), s.trace().begin(), s.trace().end());
    return out;
}

ScenarioScript short_far() {
    ScenarioScript script = builtin_world("collect-far");
    script.duration = 8.0;
    return script;
}

} // namespace

TEST_CASE("automaton export lists every state and transition") {
    SpecDocument doc = parse_document("events alarm\nG(alarm => F[0,7](norm2(robot.xy - [3,4]) < 1))");
    AbstractionResult r = prep_spec(doc.formula);
    json a = automaton_to_json(*r.automaton);
    CHECK(a["states"].size() == static_cast<std::size_t>(r.automaton->size()));
    CHECK(a["transitions"].size() == r.automaton->transitions.size());
    CHECK(a["initial"] == r.automaton->initial);
    CHECK(a["alphabet"].size() == 2);
    json full = abstraction_to_json(r);
    CHECK(full["templates"].size() == 1);
    CHECK(full["templates"][0]["kind"] == "EVENTUALLY");
    CHECK(full["props"].size() == 2);
}

TEST_CASE("a recorded run validates") {
    Session s(short_far());
    while (!s.finished()) s.step();
    REQUIRE(!s.modification_log().empty());
    ValidationReport rep = validate_trace(full_trace(s));
    for (const auto& i : rep.issues) MESSAGE(i.kind << " " << i.step << ": " << i.message);
    CHECK(rep.ok());
    CHECK(rep.steps == static_cast<long>(s.trace().size()));
    CHECK(rep.violations == 0);
}

TEST_CASE("a teleported robot breaks admissibility") {
    Session s(short_far());
    while (!s.finished()) s.step();
    auto records = full_trace(s);
    records[20]["robot"]["x"] = records[20]["robot"]["x"].get<double>() - 3.0;
    ValidationReport rep = validate_trace(records);
    CHECK_FALSE(rep.ok());
    CHECK(rep.count("admissibility") >= 1);
    CHECK(rep.issues.front().step == 19);
}

TEST_CASE("controls outside the caps and time gaps are reported") {
    Session s(short_far());
    for (int i = 0; i < 10; ++i) s.step();
    auto records = full_trace(s);
    records[5]["u"][0] = 100.0;
    records[8]["t"] = records[8]["t"].get<double>() + 0.05;
    ValidationReport rep = validate_trace(records);
    bool box = false, time = false;
    for (const auto& i : rep.issues) {
        box |= i.message == "control outside the box";
        time |= i.message == "time does not advance by dt";
    }
    CHECK(box);
    CHECK(time);
}

TEST_CASE("an unmodified replay of a modified run records the violation") {
    ScenarioScript script = builtin_world("collect-far-unmodified");
    script.duration = 35.0;
    Session s(script);
    while (!s.finished()) s.step();
    ValidationReport rep = validate_trace(full_trace(s));
    CHECK(rep.violations == 1);
    CHECK(rep.count("violation") == 1);
    CHECK(rep.count("admissibility") == 0);
}

TEST_CASE("a missing header is a format issue") {
    ValidationReport rep = validate_trace({json{{"type", "step"}}});
    CHECK(rep.count("format") == 1);
    CHECK(validate_trace({}).ok());
}
