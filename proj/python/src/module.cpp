#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "json.hpp"

#include "respec/abstraction.hpp"
#include "respec/buchi.hpp"
#include "respec/error.hpp"
#include "respec/export.hpp"
#include "respec/parser.hpp"
#include "respec/session.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::object to_python(const json& j) {
    switch (j.type()) {
    case json::value_t::null: return py::none();
    case json::value_t::boolean: return py::bool_(j.get<bool>());
    case json::value_t::number_integer: return py::int_(j.get<long long>());
    case json::value_t::number_unsigned: return py::int_(j.get<unsigned long long>());
    case json::value_t::number_float: return py::float_(j.get<double>());
    case json::value_t::string: return py::str(j.get_ref<const std::string&>());
    case json::value_t::array: {
        py::list out;
        for (const auto& v : j) out.append(to_python(v));
        return out;
    }
    case json::value_t::object: {
        py::dict out;
        for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
        return out;
    }
    default: return py::none();
    }
}

json from_python(const py::handle& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

respec::ScenarioScript script_of(const py::object& scenario) {
    if (py::isinstance<py::str>(scenario)) return respec::load_scenario(scenario.cast<std::string>());
    return respec::scenario_from_json(from_python(scenario));
}

py::list records(const std::vector<json>& rs) {
    py::list out;
    for (const auto& r : rs) out.append(to_python(r));
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Event-based STL runtime with online modification";
    m.attr("SCHEMA_VERSION") = respec::kSchemaVersion;

    static py::exception<respec::Error> error(m, "RespecError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const respec::Error& e) {
            py::object exc = py::reinterpret_borrow<py::object>(error.ptr())(py::str(e.what()));
            exc.attr("code") = respec::to_string(e.code());
            PyErr_SetObject(error.ptr(), exc.ptr());
        }
    });

    m.def("builtin_scenarios", &respec::builtin_names);
    m.def(
        "scenario", [](const std::string& name) { return to_python(respec::scenario_to_json(respec::load_scenario(name))); },
        py::arg("name_or_path"));

    m.def(
        "compile",
        [](const std::string& text, const std::vector<std::string>& entities) {
            respec::Schema base;
            base.entities.insert(entities.begin(), entities.end());
            respec::SpecDocument doc = respec::parse_document(text, base);
            respec::AbstractionResult r = respec::prep_spec(doc.formula);
            json j = respec::abstraction_to_json(r);
            j["automaton"] = respec::automaton_to_json(*r.automaton);
            j["dot"] = respec::to_dot(*r.automaton);
            return to_python(j);
        },
        py::arg("spec"), py::arg("entities") = std::vector<std::string>{},
        "Abstraction, automaton and DOT text of a specification document.");

    m.def(
        "validate_trace",
        [](const std::filesystem::path& path, std::optional<std::string> spec) {
            respec::ValidationReport rep = respec::validate_trace_file(path, spec);
            json issues = json::array();
            for (const auto& i : rep.issues)
                issues.push_back({{"kind", i.kind}, {"step", i.step}, {"t", i.t}, {"message", i.message}});
            return to_python(
                {{"ok", rep.ok()}, {"steps", rep.steps}, {"violations", rep.violations}, {"issues", issues}});
        },
        py::arg("trace"), py::arg("spec") = py::none());

    py::class_<respec::Session>(m, "Session")
        .def(py::init([](const py::object& scenario) { return std::make_unique<respec::Session>(script_of(scenario)); }),
             py::arg("scenario"), "A builtin name, a scenario file path or a scenario dict.")
        .def("step", &respec::Session::step)
        .def(
            "run",
            [](respec::Session& s) {
                {
                    py::gil_scoped_release release;
                    while (!s.finished()) s.step();
                }
                return to_python(s.summary_json());
            },
            "Steps to the stop condition and returns the summary.")
        .def_property_readonly("finished", &respec::Session::finished)
        .def_property_readonly("stop_reason", &respec::Session::stop_reason)
        .def_property_readonly("t", [](const respec::Session& s) { return s.simulator().time(); })
        .def("fire_event", &respec::Session::fire_event, py::arg("name"))
        .def("queue_modification", &respec::Session::queue_modification, py::arg("command"))
        .def(
            "modify",
            [](respec::Session& s, const std::string& command) {
                s.modify_now(command);
                return to_python(s.modification_log().back());
            },
            py::arg("command"), "Applies a modification now; returns its log record.")
        .def("state", [](const respec::Session& s) { return to_python(s.state_json()); })
        .def("header", [](const respec::Session& s) { return to_python(s.header_json()); })
        .def("summary", [](const respec::Session& s) { return to_python(s.summary_json()); })
        .def("trace", [](const respec::Session& s) { return records(s.trace()); })
        .def("modification_log", [](const respec::Session& s) { return records(s.modification_log()); })
        .def("write", &respec::Session::write, py::arg("directory"));
}
