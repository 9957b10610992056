#include "respec/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "respec/error.hpp"
#include "respec/parser.hpp"

namespace respec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kStepTolerance = 1e-9;

using nlohmann::json;

json robot_json(const RobotState& r) {
    return {{"x", r.x}, {"y", r.y}, {"theta", r.theta}, {"d", r.d}, {"z", r.z}, {"beta", r.beta}};
}

json window_json(const Bounds& w) { return json::array({w.lower, w.upper}); }

json feedback_json(const Feedback& f) {
    return {{"kind", to_string(f.kind)}, {"prop", f.prop}, {"selector", f.selector}, {"message", f.message}};
}

json modification_json(const ModificationRecord& m) {
    json j{{"v", kSchemaVersion},
           {"t", m.t},
           {"command", m.command},
           {"kind", m.kind},
           {"ok", m.result.ok},
           {"summary", m.summary},
           {"timing_ms", m.result.timing_ms},
           {"cost", to_string(m.result.cost.cost)},
           {"estimate_ms", m.result.cost.estimate_ms},
           {"rewritten", m.result.rewritten},
           {"feedback", json::array()}};
    for (const auto& f : m.result.feedback) j["feedback"].push_back(feedback_json(f));
    if (!m.result.ok) {
        j["error"] = m.result.error;
        j["error_code"] = m.result.error_code;
    }
    return j;
}

json world_json(const WorldState& X) {
    json entities = json::object();
    for (const auto& [name, p] : X.entities) entities[name] = json::array({p.x, p.y, p.z});
    json deposits = json::array();
    for (const auto& [obj, depot] : X.deposits) deposits.push_back({{"object", obj}, {"depot", depot}});
    return {{"t", X.t},
            {"robot", robot_json(X.robot)},
            {"entities", entities},
            {"events", json(std::vector<std::string>(X.events.begin(), X.events.end()))},
            {"carried", X.carried ? json(*X.carried) : json(nullptr)},
            {"deposits", deposits}};
}

json obligations_json(const RuntimeContext& ctx, const WorldState& X) {
    json out = json::array();
    for (const auto& [id, inst] : ctx.monitor.instances) {
        const AbstractProposition* p = find_prop(ctx.props, id);
        double h = kInf;
        if (p)
            for (const auto& mu : p->reach) h = std::min(h, mu.margin(X));
        json gamma = nullptr;
        auto b = ctx.barriers.find(id);
        if (b != ctx.barriers.end()) {
            double worst = kInf;
            for (const auto& bp : b->second.reach) {
                double hv = evaluate(bp.h, X);
                double g = bp.gamma.value(X.t);
                if (hv - g < worst) {
                    worst = hv - g;
                    gamma = g;
                }
            }
        }
        out.push_back({{"id", id},
                       {"kind", to_string(inst.kind)},
                       {"serial", inst.serial},
                       {"t_act", inst.t_act},
                       {"window", window_json(inst.window)},
                       {"h", h},
                       {"gamma", gamma},
                       {"status", to_string(inst.status)},
                       {"activated", ctx.activated.count(id) > 0}});
    }
    return out;
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string jsonl(const std::vector<json>& records) {
    std::string out;
    for (const auto& r : records) out += r.dump() + "\n";
    return out;
}

} // namespace

RuntimeConfig config_for(const ScenarioScript& script) {
    RuntimeConfig config;
    config.control.dt = script.dt;
    config.control.bounds = script.bounds;
    config.method = choice_method_from_string(script.method);
    return config;
}

SpecDocument parse_scenario_spec(const ScenarioScript& script) {
    Schema base;
    for (const auto& e : script.entities) base.entities.insert(e.name);
    return parse_document(script.spec, base);
}

Session::Session(ScenarioScript script) : Session(script, config_for(script)) {}

Session::Session(ScenarioScript script, const RuntimeConfig& config)
    : sim_(std::move(script)), ctx_(init(parse_scenario_spec(sim_.script()), sim_.world(), config)) {
    scripted_done_.assign(sim_.script().modifications.size(), false);
    check_stop();
}

void Session::fire_event(const std::string& name) {
    if (!ctx_.spec.schema.events.count(name)) throw Error(ErrorCode::UnknownName, "unknown event '" + name + "'");
    sim_.fire(name);
}

void Session::queue_modification(const std::string& command) { queued_mods_.push_back(command); }

ModificationRecord Session::modify_now(const std::string& command) {
    ModificationRecord rec = apply_command(ctx_, command, sim_.world());
    mod_log_.push_back(modification_json(rec));
    unreported_.push_back(rec);
    return rec;
}

void Session::step() {
    if (finished_) return;
    const WorldState X = sim_.begin_step();

    std::vector<std::string> pending(queued_mods_.begin(), queued_mods_.end());
    queued_mods_.clear();
    const auto& mods = sim_.script().modifications;
    for (std::size_t i = 0; i < mods.size(); ++i) {
        if (scripted_done_[i]) continue;
        bool due = mods[i].after_warning ? warning_pending_ : mods[i].t <= X.t + kStepTolerance;
        if (due) {
            pending.push_back(mods[i].command);
            scripted_done_[i] = true;
        }
    }
    warning_pending_ = false;

    StepReport report = run_step(ctx_, X, previous_ ? &*previous_ : nullptr, pending);
    const std::size_t fresh = report.modifications.size();
    report.modifications.insert(report.modifications.begin(), unreported_.begin(), unreported_.end());
    const std::size_t early = unreported_.size();
    unreported_.clear();
    if (!report.warnings.empty()) {
        warning_count_ += static_cast<int>(report.warnings.size());
        if (!warning_seen_) {
            warning_seen_ = true;
            warning_pending_ = true;
            first_warning_t_ = X.t;
        }
    }
    for (std::size_t i = early; i < early + fresh; ++i) mod_log_.push_back(modification_json(report.modifications[i]));
    trace_.push_back(step_record(report, X));
    step_ms_.push_back(report.compute_ms);

    sim_.end_step(report.u);
    previous_ = X;
    last_ = std::move(report);
    check_stop();
}

void Session::check_stop() {
    const auto& s = sim_.script();
    if (sim_.time() >= s.duration - kStepTolerance) {
        finished_ = true;
        stop_reason_ = "duration";
        return;
    }
    bool scripted_pending = std::find(scripted_done_.begin(), scripted_done_.end(), false) != scripted_done_.end();
    if (stop_on_acceptance_ && last_ && !scripted_pending && queued_mods_.empty() && sim_.time() > s.last_scripted_time() + kStepTolerance &&
        globally_accepted(ctx_)) {
        finished_ = true;
        stop_reason_ = "accepted";
    }
}

json Session::step_record(const StepReport& report, const WorldState& X) const {
    json j = world_json(X);
    j["type"] = "step";
    j["v"] = kSchemaVersion;
    j["step"] = report.step;
    j["u"] = report.u;
    j["chosen"] = report.chosen;
    j["activated"] = report.activated;
    j["rhoset"] = json::array();
    for (const auto& c : report.rhoset)
        j["rhoset"].push_back({{"rho", c.rho},
                               {"transition", c.transition},
                               {"next_state", c.next_state},
                               {"path_length", c.path_length},
                               {"no_accepting_path", c.no_accepting_path},
                               {"activated", c.activated}});
    j["buchi_states"] = report.buchi_states;
    json sigma = json::array();
    for (const auto& [id, v] : report.sigma)
        if (v) sigma.push_back(id);
    j["sigma"] = sigma;
    j["obligations"] = obligations_json(ctx_, X);
    j["monitor"] = json::array();
    for (const auto& e : report.monitor)
        j["monitor"].push_back({{"t", e.t}, {"prop", e.prop}, {"what", e.what}, {"serial", e.serial}});
    j["warnings"] = json::array();
    for (const auto& w : report.warnings)
        j["warnings"].push_back({{"prop", w.prop},
                                 {"kind", w.kind},
                                 {"required_rate", w.required_rate},
                                 {"achievable_rate", w.achievable_rate},
                                 {"time_remaining", w.time_remaining},
                                 {"message", w.message}});
    j["violations"] = report.violations;
    j["rows"] = json::array();
    for (const auto& r : report.control.rows)
        j["rows"].push_back(
            {{"label", r.label}, {"prop", r.prop}, {"h", r.h}, {"gamma", r.gamma}, {"rhs", r.rhs}, {"slack", r.slack}});
    j["kkt"] = report.control.kkt_residual;
    j["relaxed"] = report.control.relaxed;
    j["paused"] = report.paused;
    j["compute_ms"] = report.compute_ms;
    j["automata"] = ctx_.automata.size();
    j["modifications"] = json::array();
    j["feedback"] = json::array();
    for (const auto& m : report.modifications) {
        j["modifications"].push_back(modification_json(m));
        for (const auto& f : m.result.feedback) j["feedback"].push_back(feedback_json(f));
    }
    return j;
}

json Session::header_json() const {
    json props = json::array();
    for (const auto& p : ctx_.props) {
        json jp{{"id", p.id}, {"kind", to_string(p.kind)}};
        if (is_obligation(p.kind)) jp["window"] = window_json(p.window);
        if (p.kind != PropKind::Event) jp["guard"] = print_ltl(p.guard);
        props.push_back(jp);
    }
    json automata = json::array();
    for (const auto& s : ctx_.automata)
        automata.push_back({{"origin", s.origin},
                            {"states", s.automaton->size()},
                            {"transitions", s.automaton->transitions.size()}});
    const auto& s = sim_.script();
    return {{"type", "header"},
            {"v", kSchemaVersion},
            {"scenario", s.name},
            {"spec", s.spec},
            {"dt", s.dt},
            {"duration", s.duration},
            {"caps", s.bounds.caps},
            {"method", s.method},
            {"robot0", robot_json(s.robot0)},
            {"props", props},
            {"automata", automata},
            {"prep_time_ms", ctx_.prep_ms}};
}

json Session::summary_json() const {
    double mean = step_ms_.empty() ? 0.0 : std::accumulate(step_ms_.begin(), step_ms_.end(), 0.0) / step_ms_.size();
    double max = step_ms_.empty() ? 0.0 : *std::max_element(step_ms_.begin(), step_ms_.end());
    json mods = json::array();
    for (const auto& m : mod_log_)
        mods.push_back({{"t", m["t"]},
                        {"kind", m["kind"]},
                        {"ok", m["ok"]},
                        {"cost", m["cost"]},
                        {"timing_ms", m["timing_ms"]}});
    json deposits = json::array();
    for (const auto& [obj, depot] : sim_.world().deposits) deposits.push_back({{"object", obj}, {"depot", depot}});
    return {{"v", kSchemaVersion},
            {"scenario", sim_.script().name},
            {"prep_time_ms", ctx_.prep_ms},
            {"mean_step_ms", mean},
            {"max_step_ms", max},
            {"steps", step_ms_.size()},
            {"t_end", sim_.time()},
            {"stop_reason", stop_reason_},
            {"modifications", mods},
            {"violations", run_violations(ctx_)},
            {"warnings", warning_count_},
            {"first_warning_t", first_warning_t_ ? json(*first_warning_t_) : json(nullptr)},
            {"deposits", deposits},
            {"automata", ctx_.automata.size()}};
}

json Session::state_json() const {
    if (!trace_.empty()) {
        // Modifications made since the last step show up at once.
        json j = trace_.back();
        j["obligations"] = obligations_json(ctx_, *previous_);
        j["automata"] = ctx_.automata.size();
        j["violations"] = run_violations(ctx_);
        return j;
    }
    json j = world_json(sim_.world());
    j["type"] = "step";
    j["v"] = kSchemaVersion;
    j["obligations"] = obligations_json(ctx_, sim_.world());
    j["rhoset"] = json::array();
    j["chosen"] = -1;
    j["activated"] = json::array();
    j["buchi_states"] = json::array();
    for (const auto& s : ctx_.automata) j["buchi_states"].push_back(s.state);
    j["warnings"] = json::array();
    j["feedback"] = json::array();
    j["violations"] = 0;
    return j;
}

void Session::write(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    // A run without steps leaves the trace empty.
    std::vector<json> trace;
    if (!trace_.empty()) trace.push_back(header_json());
    trace.insert(trace.end(), trace_.begin(), trace_.end());
    write_atomically(dir / "trace.jsonl", jsonl(trace));
    write_atomically(dir / "modifications.jsonl", jsonl(mod_log_));
    write_atomically(dir / "summary.json", summary_json().dump(2) + "\n");
}

Session run_scenario(const ScenarioScript& script, const std::optional<std::filesystem::path>& out_dir) {
    Session session(script);
    while (!session.finished()) session.step();
    if (out_dir) session.write(*out_dir);
    return session;
}

} // namespace respec
