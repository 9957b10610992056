// Acceptance suite: one pass/fail line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbf_harness.hpp"
#include "generators.hpp"
#include "lasso_oracle.hpp"
#include "ltl_enum.hpp"
#include "respec/buchi.hpp"
#include "respec/error.hpp"
#include "respec/export.hpp"
#include "respec/parser.hpp"
#include "respec/qp.hpp"
#include "respec/runtime.hpp"
#include "respec/session.hpp"

using namespace respec;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            if (detail.tellp() > 0) detail << "; ";
            pass = false;
            detail << "FAILED " << what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<json> full_trace(const Session& s) {
    std::vector<json> out{s.header_json()};
    out.insert(out.end(), s.trace().begin(), s.trace().end());
    return out;
}

Session run(const std::string& name) {
    Session s(builtin_world(name));
    while (!s.finished()) s.step();
    return s;
}

bool deposited(const Session& s, const std::string& object, const std::string& depot) {
    for (const auto& [o, d] : s.simulator().world().deposits)
        if (o == object && d == depot) return true;
    return false;
}

/// Trace-level oracle: the offline validator finds no admissibility or format issue.
bool admissible(const Session& s) {
    ValidationReport rep = validate_trace(full_trace(s));
    return rep.count("admissibility") == 0 && rep.count("format") == 0;
}

std::vector<std::string> fingerprints(const RuntimeContext& ctx) {
    std::vector<std::string> out;
    for (const auto& slot : ctx.automata) out.push_back(fingerprint(*slot.automaton));
    return out;
}

// ---------------------------------------------------------------------------

void automata_oracle(Verdict& v) {
    const auto formulas = testing::enumerate_ltl(6);
    const auto lassos = testing::enumerate_lassos(2, 3, 3);
    const std::vector<std::string> props{"p", "q"};
    testing::LassoOracle oracle(props);
    long checked = 0, disagreements = 0, n_formulas = 0;
    for (int n = 1; n <= 6; ++n)
        for (const auto& f : formulas[n]) {
            ++n_formulas;
            BuchiAutomaton b = ltl_to_buchi(f, {true, {"p", "q"}});
            LassoChecker checker(b, props);
            for (const auto& w : lassos) {
                ++checked;
                if (checker.accepts(w.prefix, w.loop) != oracle.holds(f, w.prefix, w.loop)) {
                    if (disagreements++ == 0) v.detail << "first mismatch " << print_ltl(f) << "; ";
                }
            }
        }
    v.detail << n_formulas << " formulas x " << lassos.size() << " lassos, " << checked - disagreements << "/"
             << checked << " agree";
    v.require(disagreements == 0, "100% agreement");
}

void intersection_law(Verdict& v) {
    const auto formulas = testing::enumerate_ltl(4);
    std::vector<Ltl> pool;
    for (int n = 1; n <= 4; ++n) pool.insert(pool.end(), formulas[n].begin(), formulas[n].end());
    const auto lassos = testing::enumerate_lassos(2, 3, 3);
    const std::vector<std::string> props{"p", "q"};
    std::mt19937 rng(2718);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1), word(0, lassos.size() - 1);
    int agree = 0, bounded = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        Ltl f1 = pool[pick(rng)], f2 = pool[pick(rng)];
        const auto& w = lassos[word(rng)];
        BuchiAutomaton b1 = ltl_to_buchi(f1), b2 = ltl_to_buchi(f2);
        BuchiAutomaton prod = intersect(b1, b2, b1.initial, b2.initial);
        LassoChecker c1(b1, props), c2(b2, props), cp(prod, props);
        agree += cp.accepts(w.prefix, w.loop) == (c1.accepts(w.prefix, w.loop) && c2.accepts(w.prefix, w.loop));
        bounded += prod.size() <= b1.size() * b2.size() * 3;
    }
    v.detail << agree << "/1000 agree, " << bounded << "/1000 within |S1||S2|*3";
    v.require(agree == 1000, "language law");
    v.require(bounded == 1000, "state bound");
}

void ordering(Verdict& v) {
    const char* alarm = "events alarm\nG(alarm => F[0,7](norm2(robot.xy - [3,4]) < 1))";
    const char* alarm_new =
        "G(alarm => F[0,15](norm2(robot.xy - [3,5]) < 0.5)) & G[0,50](norm2(robot.xy - [1,1]) > 0.5)"
        " | G(alarm => F[0,15](norm2(robot.xy - [0,4]) < 1))";
    RuntimeContext ctx = init(parse_document(alarm), WorldState{}, {});
    ModificationResult r = modify(ctx, find_mods(ctx.spec, parse_spec(alarm_new, ctx.spec.schema)), WorldState{});
    v.require(r.ok, "modification applies");

    // Expected list built directly from the clauses, without the modification engine.
    AbstractionResult base = prep_spec(parse_document(alarm).formula);
    AbstractionResult b1 = prep_spec(parse_spec("G[0,50](norm2(robot.xy - [1,1]) > 0.5)"), {}, "c1:");
    AbstractionResult b2 = prep_spec(parse_spec("G(alarm => F[0,15](norm2(robot.xy - [0,4]) < 1))", ctx.spec.schema),
                                     {}, "c2:");
    BuchiAutomaton product = intersect(*base.automaton, *b1.automaton, base.initial, b1.initial);
    std::vector<std::string> expected{fingerprint(product), fingerprint(*b2.automaton)};
    v.detail << "B_set size " << ctx.automata.size();
    v.require(fingerprints(ctx) == expected, "fingerprints equal [B x B1, B2]");
}

void mod1(Verdict& v) {
    Session modified = run("collect-far");
    Session again = run("collect-far");
    Session unmodified = run("collect-far-unmodified");
    json summary = modified.summary_json();
    const double first = summary["first_warning_t"].is_null() ? INFINITY : summary["first_warning_t"].get<double>();
    v.detail << "warning at t=" << first << ", violations " << summary["violations"] << " (modified) / "
             << run_violations(unmodified.context()) << " (unmodified)";
    v.require(first < 30.0, "warning before t = 30");
    v.require(!modified.modification_log().empty() && modified.modification_log()[0]["ok"] == true &&
                  std::abs(modified.modification_log()[0]["t"].get<double>() - first - modified.script().dt) < 1e-9,
              "set-bounds applied on the step after the warning");
    v.require(summary["violations"] == 0, "zero violations with the modification");
    auto it = unmodified.context().violations.find("p0.0.0.0.1");
    v.require(it != unmodified.context().violations.end() && it->second >= 1 && run_violations(unmodified.context()) >= 1,
              "pick violated without the modification");
    v.require(modified.simulator().time() <= 60.0 + 1e-9 && unmodified.simulator().time() <= 60.0 + 1e-9,
              "within 60 s");
    auto strip = [](const Session& s) {
        json out = json::array();
        for (auto r : s.trace()) {
            r.erase("compute_ms");
            for (auto& m : r["modifications"]) m.erase("timing_ms");
            out.push_back(r);
        }
        return out;
    };
    v.require(strip(modified) == strip(again), "deterministic");
    v.require(admissible(modified) && admissible(unmodified), "traces validate");
}

void mod2(Verdict& v) {
    Session s(builtin_world("collect-mod2"));
    bool unchanged = true, in_period = true;
    int rewrites = 0;
    while (!s.finished()) {
        // Identical automaton objects are unchanged; fingerprints only settle a replaced object.
        std::vector<const BuchiAutomaton*> before;
        std::vector<std::shared_ptr<const BuchiAutomaton>> keep;
        for (const auto& slot : s.context().automata) {
            before.push_back(slot.automaton.get());
            keep.push_back(slot.automaton);
        }
        s.step();
        const auto& mods = s.last_report()->modifications;
        if (mods.empty()) continue;
        for (const auto& m : mods) {
            ++rewrites;
            unchanged = unchanged && m.result.ok && !m.result.rewritten.empty() && m.result.cost.cost == CostClass::InStep;
            in_period = in_period && m.result.timing_ms < s.script().dt * 1000.0;
        }
        const auto& after = s.context().automata;
        unchanged = unchanged && after.size() == before.size();
        for (std::size_t i = 0; unchanged && i < after.size(); ++i)
            unchanged = after[i].automaton.get() == before[i] || fingerprint(*after[i].automaton) == fingerprint(*keep[i]);
    }
    v.detail << rewrites << " rewrites, deposits "
             << (s.simulator().world().deposits.empty() ? "none" : s.simulator().world().deposits[0].first);
    v.require(rewrites >= 2, "rewrites applied");
    v.require(unchanged, "automata untouched");
    v.require(in_period, "each within one control period");
    v.require(deposited(s, "obj2", "depot1"), "object 2 deposited");
    v.require(run_violations(s.context()) == 0, "zero violations");
    v.require(admissible(s), "trace validates");
}

void mod3(Verdict& v) {
    Session s = run("collect-cones");
    double t_mod = INFINITY;
    for (const auto& m : s.modification_log())
        if (m["kind"] == "add-conj" && m["ok"] == true) t_mod = std::min(t_mod, m["t"].get<double>());
    double d1 = INFINITY, d2 = INFINITY;
    for (const auto& r : s.trace()) {
        if (r["t"].get<double>() < t_mod - 1e-9) continue;
        const double x = r["robot"]["x"], y = r["robot"]["y"];
        d1 = std::min(d1, std::hypot(x - r["entities"]["cone1"][0].get<double>(), y - r["entities"]["cone1"][1].get<double>()));
        d2 = std::min(d2, std::hypot(x - r["entities"]["cone2"][0].get<double>(), y - r["entities"]["cone2"][1].get<double>()));
    }
    v.detail << "add-conj at t=" << t_mod << ", min distances " << d1 << " / " << d2 << ", violations "
             << run_violations(s.context());
    v.require(std::isfinite(t_mod), "conjunction applied");
    v.require(d1 > 0.3 && d2 > 0.3, "cones cleared by more than 0.3");
    v.require(run_violations(s.context()) == 0, "zero violations");
    v.require(deposited(s, "obj1", "depot1"), "task completed");
    v.require(admissible(s), "trace validates");
}

void mod4(Verdict& v) {
    Session near = run("collect-two-depots");
    Session flip = run("collect-two-depots-flip");
    // Premise: depot 2 strictly closer than depot 1 at every step once it exists.
    bool closer = true;
    for (const auto& r : near.trace()) {
        if (r["automata"].get<int>() < 2) continue;
        const double x = r["robot"]["x"], y = r["robot"]["y"];
        const auto& e = r["entities"];
        closer = closer && std::hypot(x - e["depot2"][0].get<double>(), y - e["depot2"][1].get<double>()) <
                               std::hypot(x - e["depot1"][0].get<double>(), y - e["depot1"][1].get<double>());
    }
    v.detail << "deposits " << (near.simulator().world().deposits.empty() ? "-" : near.simulator().world().deposits[0].second)
             << " then " << (flip.simulator().world().deposits.empty() ? "-" : flip.simulator().world().deposits[0].second)
             << " after the move";
    v.require(closer, "depot 2 strictly closer at every decision step");
    v.require(deposited(near, "obj1", "depot2"), "reevaluate deposits at depot 2");
    v.require(deposited(flip, "obj1", "depot1"), "moving depot 2 flips to depot 1");
    v.require(run_violations(near.context()) == 0 && run_violations(flip.context()) == 0, "zero violations");
    v.require(admissible(near) && admissible(flip), "traces validate");
}

void cbf_suite(Verdict& v) {
    std::mt19937 rng(99);
    int counted = 0, attempted = 0, eventually = 0, met = 0, always = 0, breaches = 0;
    double margin = INFINITY;
    bool bounds = true;
    while (counted < 500 && attempted < 5000) {
        ++attempted;
        auto out = testing::run_trial(testing::random_trial(rng));
        bounds = bounds && out.bounds_respected;
        if (!out.zero_slack) continue;
        ++counted;
        eventually += out.eventually;
        met += out.eventually_met;
        always += out.always;
        breaches += out.always_breaches;
        margin = std::min(margin, out.invariance_margin);
    }
    v.detail << counted << " zero-slack trials of " << attempted << ", EVENTUALLY " << met << "/" << eventually
             << ", ALWAYS breaches " << breaches << "/" << always << ", min invariance margin " << margin;
    v.require(counted >= 500, ">= 500 trials");
    v.require(met == eventually, "all EVENTUALLY met");
    v.require(breaches == 0, "no ALWAYS breach");
    v.require(margin >= -1e-6, "discrete invariance within 1e-6");
    v.require(bounds, "controls within the box");
}

double central_difference(const Expr& e, WorldState w, int channel, double step) {
    const double base = w.robot[channel];
    w.robot[channel] = base + step;
    const double hi = evaluate(e, w);
    w.robot[channel] = base - step;
    const double lo = evaluate(e, w);
    return (hi - lo) / (2 * step);
}

/// min of 1/2 x'Gx + a'x over C'x >= b by nested grid refinement on [-4, 4]^2.
double grid_minimum(const QpProblem& p) {
    auto value = [&](double x, double y) {
        Eigen::Vector2d z(x, y);
        for (int j = 0; j < p.C.cols(); ++j)
            if (p.C.col(j).dot(z) < p.b(j) - 1e-12) return std::numeric_limits<double>::infinity();
        return 0.5 * z.dot(p.G * z) + p.a.dot(z);
    };
    double cx = 0, cy = 0, half = 4.0, best = INFINITY;
    for (int level = 0; level < 14; ++level) {
        const int n = 200;
        double bx = cx, by = cy;
        for (int i = 0; i <= n; ++i)
            for (int k = 0; k <= n; ++k) {
                double x = cx - half + 2 * half * i / n, y = cy - half + 2 * half * k / n;
                double f = value(x, y);
                if (f < best) {
                    best = f;
                    bx = x;
                    by = y;
                }
            }
        cx = bx;
        cy = by;
        half /= 4.0;
    }
    return best;
}

void numerics(Verdict& v) {
    testing::Generator g(4242);
    int gradients = 0;
    double worst_grad = 0;
    while (gradients < 100) {
        Expr e = g.scalar_expr(3);
        WorldState w;
        w.robot = {g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-3, 3), g.uniform(0.1, 2), g.uniform(0.1, 2),
                   g.uniform(0.1, 4)};
        w.entities["obj1"] = {3, 4, 0.5};
        w.entities["depot1"] = {0.5, 0.5, 0.6};
        w.entities["cone1"] = {-2, 1, 0};
        EvalResult r;
        ChannelVector fd{}, fd_coarse{};
        try {
            r = differentiate(e, w);
            for (int c = 0; c < kChannels; ++c) {
                fd[c] = central_difference(e, w, c, 1e-6);
                fd_coarse[c] = central_difference(e, w, c, 1e-5);
            }
        } catch (const Error&) {
            continue;
        }
        // Pairs at kinks or too badly conditioned for finite differences are redrawn.
        bool smooth = !r.perturbed && std::abs(r.value) < 1e3;
        double gmax = 0;
        for (int c = 0; c < kChannels; ++c) {
            gmax = std::max(gmax, std::abs(r.grad[c]));
            if (std::abs(fd[c] - fd_coarse[c]) > 1e-6 * std::max(1.0, std::abs(fd[c]))) smooth = false;
        }
        if (!smooth || gmax > 1e3) continue;
        double err = 0;
        for (int c = 0; c < kChannels; ++c) err = std::max(err, std::abs(r.grad[c] - fd[c]));
        worst_grad = std::max(worst_grad, err / std::max(1.0, gmax));
        ++gradients;
    }

    std::mt19937 rng(31);
    std::normal_distribution<double> N(0.0, 1.0);
    double worst_kkt = 0, worst_gap = 0;
    int qps = 0;
    while (qps < 200) {
        QpProblem p;
        Eigen::Matrix2d L;
        L << N(rng), N(rng), N(rng), N(rng);
        p.G = L * L.transpose() + 0.3 * Eigen::Matrix2d::Identity();
        p.a = Eigen::Vector2d(N(rng), N(rng)) * 2.0;
        const int m = 1 + qps % 4;
        // Box rows keep the minimizer inside the grid; random rows pass near an interior point.
        p.C = Eigen::MatrixXd(2, m + 4);
        p.b = Eigen::VectorXd(m + 4);
        Eigen::Vector2d anchor(0.5 * N(rng), 0.5 * N(rng));
        for (int j = 0; j < m; ++j) {
            Eigen::Vector2d c(N(rng), N(rng));
            p.C.col(j) = c;
            p.b(j) = c.dot(anchor) - std::abs(N(rng)) * 0.5;
        }
        p.C.col(m) << 1, 0;
        p.C.col(m + 1) << -1, 0;
        p.C.col(m + 2) << 0, 1;
        p.C.col(m + 3) << 0, -1;
        p.b.tail(4).setConstant(-3.5);
        QpResult r = solve_qp(p);
        if (!r.feasible) continue;
        const double f_qp = 0.5 * r.x.dot(p.G * r.x) + p.a.dot(r.x);
        worst_gap = std::max(worst_gap, std::abs(f_qp - grid_minimum(p)));
        worst_kkt = std::max(worst_kkt, r.kkt_residual);
        ++qps;
    }
    // KKT residuals of the control QP on random row sets.
    ControlBounds box;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ControlRow> rows(1 + trial % 6);
        for (auto& row : rows) {
            for (auto& gr : row.grad) gr = 2.0 * N(rng);
            row.rhs = 6.0 * N(rng);
        }
        worst_kkt = std::max(worst_kkt, solve_control_qp(rows, box).kkt_residual);
    }
    v.detail << "gradient rel. err " << worst_grad << ", KKT residual " << worst_kkt << ", grid gap " << worst_gap;
    v.require(worst_grad <= 1e-6, "gradients");
    v.require(worst_kkt <= 1e-6, "KKT");
    v.require(worst_gap <= 1e-4, "grid oracle");
}

void timing_ordering(Verdict& v) {
    const ScenarioScript script = builtin_world("collect");
    Simulator sim(script);
    const WorldState X = sim.begin_step();
    const RuntimeContext base = init(parse_scenario_spec(script), X, config_for(script));
    const std::vector<std::string> local{
        "set-bounds @0.0.0.0.1 [0,45]",
        "set-bounds @0.0.1.1.1 [10,20]",
        "set-bounds @1.1.0 [0,25]",
        "set-pred robot.d < 0.2 := robot.d < 0.05",
        "set-pred @0.0.0.0.1.0 norm2(robot.xy - obj1.xy) < 0.8",
        "set-pred @0.0.1.1.1.0 robot.beta < 0.5",
    };
    const std::vector<std::string> structural{
        "add-conj G[0,100](norm2(robot.xy - [1,3]) > 0.3)",
        "add-conj G[0,100](norm2(robot.xy - [1,3]) > 0.3 & norm2(robot.xy - [2,1]) > 0.3)",
        "add-conj G(pick => F[0,40](robot.z > 0.1))",
    };
    std::vector<double> local_ms, structural_ms;
    bool never_paused = true, all_ok = true;
    for (int rep = 0; rep < 3; ++rep) {
        for (const auto& cmd : local) {
            RuntimeContext ctx = base;
            ModificationResult r = apply_modification(ctx, cmd, X);
            all_ok = all_ok && r.ok;
            if (!r.ok) v.detail << cmd << ": " << r.error << "; ";
            never_paused = never_paused && r.cost.cost == CostClass::InStep;
            local_ms.push_back(r.timing_ms);
        }
        for (const auto& cmd : structural) {
            RuntimeContext ctx = base;
            ModificationResult r = apply_modification(ctx, cmd, X);
            all_ok = all_ok && r.ok;
            if (!r.ok) v.detail << cmd << ": " << r.error << "; ";
            structural_ms.push_back(r.timing_ms);
        }
    }
    const double ml = median(local_ms), ms = median(structural_ms);
    v.detail << "median bound/predicate " << ml << " ms, median add-conj " << ms << " ms, ratio " << ml / ms;
    v.require(all_ok, "all modifications apply");
    v.require(ml < 0.1 * ms, "ratio < 10%");
    v.require(never_paused, "bound/predicate never requires-pause");
}

} // namespace

int main(int argc, char** argv) {
    // An optional argument restricts the run to criteria whose name contains it.
    const std::string only = argc > 1 ? argv[1] : "";
    struct Criterion {
        const char* name;
        std::function<void(Verdict&)> check;
    };
    const std::vector<Criterion> criteria{
        {"automata-oracle", automata_oracle},
        {"intersection-law", intersection_law},
        {"ordering", ordering},
        {"scenario-mod-1", mod1},
        {"scenario-mod-2", mod2},
        {"scenario-mod-3", mod3},
        {"scenario-mod-4", mod4},
        {"cbf-property-suite", cbf_suite},
        {"numerics", numerics},
        {"timing-ordering", timing_ordering},
    };
    int failed = 0;
    int ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::string(c.name).find(only) == std::string::npos) continue;
        ++ran;
        Verdict v;
        const auto start = std::chrono::steady_clock::now();
        try {
            c.check(v);
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        failed += !v.pass;
        std::printf("%s %-20s %7.1fs  %s\n", v.pass ? "PASS" : "FAIL", c.name, seconds_since(start),
                    v.detail.str().c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
