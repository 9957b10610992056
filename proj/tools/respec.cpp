#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "respec/abstraction.hpp"
#include "respec/error.hpp"
#include "respec/export.hpp"
#include "respec/parser.hpp"
#include "respec/session.hpp"
#ifdef RESPEC_WITH_SERVICE
#include "respec/service.hpp"
#endif

using namespace respec;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
    out << content;
}

struct RunArgs {
    std::string spec;
    std::string scenario;
    std::optional<double> dt;
    std::optional<std::string> method;
    std::string out;
};

int run(const RunArgs& a) {
    ScenarioScript script = load_scenario(a.scenario);
    if (!a.spec.empty()) script.spec = read_file(a.spec);
    if (a.dt) script.dt = *a.dt;
    if (a.method) script.method = *a.method;
    Session session = run_scenario(script, std::filesystem::path(a.out));
    std::cout << session.summary_json().dump(2) << "\n";
    return 0;
}

struct CompileArgs {
    std::string spec;
    std::string scenario;
    std::string dot;
    std::string json_out;
};

int compile(const CompileArgs& a) {
    Schema base;
    if (!a.scenario.empty())
        for (const auto& e : load_scenario(a.scenario).entities) base.entities.insert(e.name);
    SpecDocument doc = parse_document(read_file(a.spec), base);
    AbstractionResult r = prep_spec(doc.formula);
    if (!a.dot.empty()) write_file(a.dot, to_dot(*r.automaton));
    json j = abstraction_to_json(r);
    j["automaton"] = automaton_to_json(*r.automaton);
    if (!a.json_out.empty())
        write_file(a.json_out, j.dump(2) + "\n");
    else
        std::cout << j.dump(2) << "\n";
    std::cerr << r.props.size() << " propositions, " << r.automaton->size() << " states, "
              << r.automaton->transitions.size() << " transitions\n";
    return 0;
}

int validate(const std::string& trace, const std::string& spec) {
    std::optional<std::string> text;
    if (!spec.empty()) text = read_file(spec);
    ValidationReport rep = validate_trace_file(trace, text);
    for (const auto& i : rep.issues) std::cout << i.kind << " step " << i.step << " t=" << i.t << ": " << i.message << "\n";
    std::cout << rep.steps << " steps, " << rep.violations << " violations, " << rep.issues.size() << " issues\n";
    return rep.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-based STL runtime with online modification"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run a scenario to its stop condition and write trace, log and summary");
    run_cmd->add_option("--spec", run_args.spec, "Specification file; defaults to the scenario's own");
    run_cmd->add_option("--scenario", run_args.scenario, "Builtin scenario name or scenario JSON file")->required();
    run_cmd->add_option("--dt", run_args.dt, "Control period in seconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--method", run_args.method, "Automaton choice method")
        ->check(CLI::IsMember({"reevaluate", "commit"}));
    run_cmd->add_option("--out", run_args.out, "Output directory")->required();

    CompileArgs compile_args;
    auto* compile_cmd = app.add_subcommand("compile", "Abstract a specification and dump its automaton");
    compile_cmd->add_option("--spec", compile_args.spec, "Specification file")->required()->check(CLI::ExistingFile);
    compile_cmd->add_option("--scenario", compile_args.scenario, "Scenario whose entity names are in scope");
    compile_cmd->add_option("--dot", compile_args.dot, "Graphviz output");
    compile_cmd->add_option("--json", compile_args.json_out, "Abstraction and automaton as JSON");

    std::string trace, validate_spec;
    auto* validate_cmd = app.add_subcommand("validate", "Replay a trace and check admissibility and the specification");
    validate_cmd->add_option("--trace", trace, "trace.jsonl")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--spec", validate_spec, "Specification file; defaults to the one in the trace header");

    std::string scenario_name, scenario_out;
    auto* scenario_cmd = app.add_subcommand("scenario", "Write a builtin scenario as JSON");
    scenario_cmd->add_option("name", scenario_name, "Builtin scenario name")->required();
    scenario_cmd->add_option("--out", scenario_out, "Output file; stdout when omitted");

    auto* list_cmd = app.add_subcommand("list", "List builtin scenarios");

#ifdef RESPEC_WITH_SERVICE
    ServiceConfig service_config = service_config_from_env();
    std::string scenario_dir;
    auto* serve_cmd = app.add_subcommand("serve", "Serve sessions over websocket");
    serve_cmd->add_option("--port", service_config.port, "TCP port");
    serve_cmd->add_option("--address", service_config.address, "Bind address");
    serve_cmd->add_option("--scenarios", scenario_dir, "Directory of scenario JSON files");
    serve_cmd->add_option("--data", service_config.data_dir, "Persistence root (RESPEC_DATA_DIR)");
    serve_cmd->add_option("--rate", service_config.rate, "Simulated seconds per second")->check(CLI::Range(1e-3, 1000.0));
    serve_cmd->add_option("--decimate", service_config.decimation, "Broadcast every n-th step")->check(CLI::PositiveNumber);
#endif

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return run(run_args);
        if (compile_cmd->parsed()) return compile(compile_args);
        if (validate_cmd->parsed()) return validate(trace, validate_spec);
        if (scenario_cmd->parsed()) {
            std::string text = scenario_to_json(builtin_world(scenario_name)).dump(2) + "\n";
            if (scenario_out.empty())
                std::cout << text;
            else
                write_file(scenario_out, text);
            return 0;
        }
        if (list_cmd->parsed()) {
            for (const auto& name : builtin_names()) std::cout << name << "\t" << builtin_world(name).description << "\n";
            return 0;
        }
#ifdef RESPEC_WITH_SERVICE
        if (serve_cmd->parsed()) {
            service_config.scenario_dir = scenario_dir;
            Service service(service_config);
            std::cerr << "serving on " << service_config.address << ":" << service_config.port << "\n";
            service.run();
            return 0;
        }
#endif
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
