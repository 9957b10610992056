#include "respec/export.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "respec/error.hpp"
#include "respec/parser.hpp"
#include "respec/runtime.hpp"

namespace respec {

using nlohmann::json;

namespace {

constexpr double kStateTolerance = 1e-6;

json label_json(const Label& label) {
    json out = json::array();
    for (const auto& l : label) out.push_back({{"prop", l.prop}, {"positive", l.positive}});
    return out;
}

json predicate_json(const Predicate& p) {
    return {{"text", print_predicate(p)}, {"h", print_expr(p.margin_expr())}};
}

Position position_of(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

RobotState robot_of(const json& j) {
    return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("theta").get<double>(),
            j.at("d").get<double>(), j.at("z").get<double>(), j.at("beta").get<double>()};
}

WorldState world_of(const json& r) {
    WorldState X;
    X.t = r.at("t").get<double>();
    X.robot = robot_of(r.at("robot"));
    for (const auto& [name, p] : r.at("entities").items()) X.entities[name] = position_of(p);
    for (const auto& e : r.at("events")) X.events.insert(e.get<std::string>());
    return X;
}

} // namespace

json automaton_to_json(const BuchiAutomaton& b) {
    json states = json::array();
    for (int s = 0; s < b.size(); ++s)
        states.push_back({{"id", s}, {"name", b.state_names[s]}, {"accepting", static_cast<bool>(b.accepting[s])}});
    json transitions = json::array();
    for (const auto& t : b.transitions)
        transitions.push_back({{"from", t.from}, {"to", t.to}, {"label", label_json(t.label)}});
    return {{"initial", b.initial},
            {"alphabet", std::vector<std::string>(b.alphabet.begin(), b.alphabet.end())},
            {"states", states},
            {"transitions", transitions}};
}

json abstraction_to_json(const AbstractionResult& r) {
    json props = json::array();
    for (const auto& p : r.props) {
        json jp{{"id", p.id}, {"kind", to_string(p.kind)}, {"origin", selector_to_string(p.origin)}};
        if (is_obligation(p.kind)) jp["window"] = json::array({p.window.lower, p.window.upper});
        jp["reach"] = json::array();
        for (const auto& mu : p.reach) jp["reach"].push_back(predicate_json(mu));
        jp["hold"] = json::array();
        for (const auto& mu : p.hold) jp["hold"].push_back(predicate_json(mu));
        if (p.kind != PropKind::Event) jp["guard"] = print_ltl(p.guard);
        props.push_back(jp);
    }
    json templates = json::array();
    for (const auto& t : r.templates) {
        json jt{{"prop", t.prop}, {"kind", to_string(t.kind)}, {"gain", t.gain}};
        jt["window"] = json::array({t.window.lower, t.window.upper});
        for (const char* part : {"reach", "hold"}) {
            jt[part] = json::array();
            for (const auto& pt : std::string(part) == "reach" ? t.reach : t.hold)
                jt[part].push_back({{"h", print_expr(pt.h)}, {"delta_sat", pt.delta_sat}, {"epsilon", pt.epsilon}});
        }
        templates.push_back(jt);
    }
    return {{"gamma", print_ltl(r.gamma)},
            {"props", props},
            {"templates", templates},
            {"automaton", {{"states", r.automaton->size()}, {"transitions", r.automaton->transitions.size()}}},
            {"prep_ms", r.prep_ms}};
}

int ValidationReport::count(const std::string& kind) const {
    int n = 0;
    for (const auto& i : issues) n += i.kind == kind;
    return n;
}

ValidationReport validate_trace(const std::vector<json>& records, const std::optional<std::string>& spec_text) {
    ValidationReport report;
    if (records.empty()) return report;
    const json& header = records.front();
    if (header.value("type", std::string()) != "header") {
        report.issues.push_back({"format", -1, 0.0, "the first record is not a header"});
        return report;
    }
    const double dt = header.at("dt").get<double>();
    ControlBounds bounds;
    bounds.caps = header.at("caps").get<ChannelVector>();

    std::optional<RuntimeContext> ctx;
    std::optional<WorldState> previous;
    std::optional<ChannelVector> previous_u;
    int recorded_violations = 0;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const json& r = records[i];
        const long step = r.value("step", static_cast<long>(i - 1));
        WorldState X;
        ChannelVector u{};
        try {
            X = world_of(r);
            u = r.at("u").get<ChannelVector>();
            recorded_violations = r.value("violations", 0);
        } catch (const json::exception& e) {
            report.issues.push_back({"format", step, 0.0, std::string("malformed step record: ") + e.what()});
            continue;
        }
        ++report.steps;

        if (!ctx) {
            try {
                Schema base;
                for (const auto& [name, p] : X.entities) base.entities.insert(name);
                SpecDocument doc = parse_document(spec_text ? *spec_text : header.at("spec").get<std::string>(), base);
                RuntimeConfig config;
                config.control.dt = dt;
                config.control.bounds = bounds;
                config.method = choice_method_from_string(header.value("method", std::string("reevaluate")));
                ctx = init(doc, X, config);
            } catch (const Error& e) {
                report.issues.push_back({"format", step, X.t, std::string("specification: ") + e.what()});
                return report;
            }
        }

        if (previous) {
            if (std::abs(X.t - (previous->t + dt)) > kStateTolerance)
                report.issues.push_back({"admissibility", step, X.t, "time does not advance by dt"});
            RobotState expected = integrate(previous->robot, *previous_u, dt);
            for (int c = 0; c < kChannels; ++c) {
                double diff = c == kTheta ? wrap_angle(expected[c] - X.robot[c]) : expected[c] - X.robot[c];
                if (std::abs(diff) > kStateTolerance) {
                    std::ostringstream msg;
                    msg << "robot." << channel_name(c) << " jumps by " << diff << " against the integrated control";
                    report.issues.push_back({"admissibility", step, X.t, msg.str()});
                }
            }
        }
        if (!bounds.contains(u, 1e-7))
            report.issues.push_back({"admissibility", step, X.t, "control outside the box"});

        std::vector<std::string> mods;
        for (const auto& m : r.value("modifications", json::array())) mods.push_back(m.at("command").get<std::string>());
        StepReport replay = run_step(*ctx, X, previous ? &*previous : nullptr, mods);
        for (const auto& e : replay.monitor)
            if (e.what == "violated")
                report.issues.push_back({"violation", step, X.t, "obligation " + e.prop + " violated"});
        previous = X;
        previous_u = u;
    }
    if (ctx) {
        report.violations = run_violations(*ctx);
        if (report.violations != recorded_violations) {
            std::ostringstream msg;
            msg << "replay counts " << report.violations << " violations, the trace records " << recorded_violations;
            report.issues.push_back({"format", report.steps - 1, ctx->t, msg.str()});
        }
    }
    // Violations charged to an unchosen disjunct are not run violations.
    if (report.violations == 0)
        std::erase_if(report.issues, [](const ValidationIssue& i) { return i.kind == "violation"; });
    return report;
}

ValidationReport validate_trace_file(const std::filesystem::path& trace, const std::optional<std::string>& spec_text) {
    std::ifstream in(trace);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + trace.string());
    std::vector<json> records;
    ValidationReport bad;
    std::string line;
    long n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            records.push_back(json::parse(line));
        } catch (const json::exception& e) {
            bad.issues.push_back({"format", n, 0.0, std::string("line is not JSON: ") + e.what()});
        }
    }
    if (!bad.issues.empty()) return bad;
    return validate_trace(records, spec_text);
}

} // namespace respec
