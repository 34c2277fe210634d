#include "gridfc/scenario.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "gridfc/errors.hpp"

namespace gridfc {

namespace {

using json = nlohmann::ordered_json;

double require_number(const json& obj, const std::string& field, const std::string& ctx) {
    if (!obj.contains(field) || !obj[field].is_number())
        throw InputError("scenario: " + ctx + " requires numeric field '" + field + "'");
    return obj[field].get<double>();
}

// The control box implied by one bus's spec.
std::pair<double, double> control_bounds(const Bus& bus, const ControlSpec& spec) {
    if (!spec.controllable) return {bus.p_set, bus.p_set};
    const double c = spec.capacity;
    if (bus.kind == BusKind::Generator) {
        if (bus.p_set < 0.0)
            throw InputError("scenario: controllable generator bus " +
                             std::to_string(bus.id) + " requires p_set >= 0");
        return {bus.p_set * (1.0 - c), bus.p_set * (1.0 + c)};
    }
    if (bus.p_set > 0.0)
        throw InputError("scenario: controllable load bus " + std::to_string(bus.id) +
                         " requires p_set <= 0");
    return {bus.p_set * (1.0 + c / 2.0), bus.p_set * (1.0 - c / 2.0)};
}

ControlLaw make_law(const Bus& bus, const ControlSpec& spec) {
    const auto [lo, hi] = control_bounds(bus, spec);
    if (!spec.controllable) return ControlLaw::constant(bus.p_set);
    return ControlLaw(std::make_shared<QuadraticCost>(spec.gain, bus.p_set), lo, hi);
}

// Rebuilds the model with bus bounds matching a law set (the case
// variants change the boxes).
NetworkModel with_bounds(const NetworkModel& model, std::span<const ControlLaw> laws) {
    std::vector<Bus> buses = model.buses();
    for (size_t j = 0; j < buses.size(); ++j) {
        buses[j].p_min = laws[j].p_min();
        buses[j].p_max = laws[j].p_max();
    }
    return NetworkModel(std::move(buses), model.lines());
}

std::string verdict_name(Verdict v) {
    return v == Verdict::Certified ? "Certified" : "Inconclusive";
}

json ofc_to_json(const OfcSolution& sol) {
    json j;
    j["lambda_star"] = sol.lambda_star;
    j["p_star"] = sol.p_star;
    j["d_star"] = sol.d_star;
    j["objective"] = sol.objective;
    std::vector<std::string> sat;
    sat.reserve(sol.saturation.size());
    for (Saturation s : sol.saturation)
        sat.push_back(s == Saturation::Lower ? "lower"
                                             : (s == Saturation::Upper ? "upper" : "interior"));
    j["saturation"] = sat;
    return j;
}

json certificate_to_json(const StabilityCertificate& cert) {
    json j;
    j["verdict"] = verdict_name(cert.verdict);
    j["omega_star"] = cert.omega_star;
    j["lipschitz_delta"] = cert.delta;
    json gens = json::array();
    for (const auto& g : cert.generators) {
        json e;
        e["bus"] = g.bus;
        e["lipschitz"] = g.lipschitz;
        e["damping"] = g.damping;
        e["condition_l_below_d"] = g.lipschitz < g.damping;
        if (g.p) {
            e["P11"] = g.p->p11;
            e["P22"] = g.p->p22;
            e["alpha"] = g.p->alpha;
            e["beta"] = g.p->beta;
            e["gamma"] = g.p->gamma;
            e["eta"] = g.p->eta;
            e["xi"] = g.p->xi;
            e["sigma"] = g.p->sigma;
            e["z"] = g.p->z;
        }
        gens.push_back(std::move(e));
    }
    j["generators"] = std::move(gens);
    json lines = json::array();
    for (const auto& s : cert.lines) {
        json e;
        e["line"] = s.line;
        e["theta_diff"] = s.theta_diff;
        e["secure"] = s.secure;
        lines.push_back(std::move(e));
    }
    j["security"] = std::move(lines);
    return j;
}

json report_to_json(const RunReport& r) {
    json j;
    j["scenario"] = r.scenario;
    j["ofc"] = ofc_to_json(r.ofc);
    j["terminal"] = {{"omega_rad_s", r.terminal_omega},
                     {"frequency_hz", r.terminal_hz},
                     {"sync_gap", r.terminal_sync_gap}};
    j["nadir"] = {{"per_bus", r.nadir}, {"worst", r.worst_nadir}};
    if (r.settling_time)
        j["settling_time"] = *r.settling_time;
    else
        j["settling_time"] = nullptr;
    j["certificate"] = certificate_to_json(r.certificate);
    j["trajectory_csv"] = r.trajectory_csv;
    return j;
}

} // namespace

namespace {

Scenario parse_scenario(const json& doc, const std::filesystem::path& path) {
    if (!doc.contains("buses") || !doc["buses"].is_array() || doc["buses"].empty())
        throw InputError("scenario: a non-empty 'buses' array is required");
    if (!doc.contains("lines") || !doc["lines"].is_array())
        throw InputError("scenario: a 'lines' array is required");

    std::vector<ScenarioBus> specs;
    std::vector<Bus> buses;
    for (const json& jb : doc["buses"]) {
        ScenarioBus sb;
        Bus& b = sb.bus;
        if (!jb.contains("id") || !jb["id"].is_number_integer())
            throw InputError("scenario: every bus requires an integer 'id'");
        b.id = jb["id"].get<int>();
        const std::string ctx = "bus " + std::to_string(b.id);
        const std::string kind = jb.value("kind", "");
        if (kind == "generator")
            b.kind = BusKind::Generator;
        else if (kind == "load")
            b.kind = BusKind::Load;
        else
            throw InputError("scenario: " + ctx + " has unknown kind '" + kind +
                             "' (expected 'generator' or 'load')");
        b.damping = require_number(jb, "D", ctx);
        b.p_set = require_number(jb, "p_set", ctx);
        if (b.kind == BusKind::Generator) {
            b.inertia = require_number(jb, "M", ctx);
            b.tau_g = require_number(jb, "tau_g", ctx);
            b.tau_b = require_number(jb, "tau_b", ctx);
        }

        if (!jb.contains("control") || !jb["control"].is_object())
            throw InputError("scenario: " + ctx + " requires a 'control' object");
        const json& jc = jb["control"];
        sb.control.kind = jc.value("kind", "quadratic");
        if (sb.control.kind != "quadratic")
            throw InputError("scenario: " + ctx + " has unsupported cost kind '" +
                             sb.control.kind + "'");
        sb.control.gain = require_number(jc, "R", ctx + " control");
        if (!(sb.control.gain > 0.0))
            throw InputError("scenario: " + ctx + " control gain R must be positive");
        sb.control.capacity = jc.value("capacity", 0.0);
        if (sb.control.capacity < 0.0)
            throw InputError("scenario: " + ctx + " capacity must be non-negative, got " +
                             std::to_string(sb.control.capacity));
        sb.control.controllable = jc.value("controllable", false);

        if (jb.contains("cases")) {
            sb.in_case1 = jb["cases"].value("case1", false);
            sb.in_case2 = jb["cases"].value("case2", false);
        }

        const auto [lo, hi] = control_bounds(b, sb.control);
        b.p_min = lo;
        b.p_max = hi;
        buses.push_back(b);
        specs.push_back(std::move(sb));
    }

    std::vector<Line> lines;
    for (const json& jl : doc["lines"]) {
        Line l;
        l.from = jl.value("from", -1);
        l.to = jl.value("to", -1);
        l.y_max = require_number(jl, "Y", "line");
        lines.push_back(l);
    }

    Scenario sc{.name = doc.value("name", path.stem().string()),
                .model = NetworkModel(std::move(buses), std::move(lines)),
                .laws = {},
                .bus_specs = std::move(specs),
                .disturbances = {},
                .t_end = 10.0,
                .dt = 1e-3,
                .sample_every = 10,
                .lipschitz_delta = 0.01};

    for (const ScenarioBus& sb : sc.bus_specs) sc.laws.push_back(make_law(sb.bus, sb.control));

    if (doc.contains("disturbances")) {
        for (const json& jd : doc["disturbances"]) {
            Disturbance d;
            d.time = require_number(jd, "time", "disturbance");
            if (!jd.contains("bus") || !jd["bus"].is_number_integer())
                throw InputError("scenario: disturbance requires an integer 'bus'");
            d.bus = jd["bus"].get<int>();
            d.delta_p = require_number(jd, "delta_p", "disturbance");
            if (d.time < 0.0) throw InputError("scenario: disturbance time must be >= 0");
            if (d.bus < 0 || d.bus >= sc.model.n_buses())
                throw InputError("scenario: disturbance references unknown bus " +
                                 std::to_string(d.bus));
            sc.disturbances.push_back(d);
        }
        std::stable_sort(sc.disturbances.begin(), sc.disturbances.end(),
                         [](const Disturbance& a, const Disturbance& b) {
                             return a.time < b.time;
                         });
    }

    if (doc.contains("run")) {
        const json& jr = doc["run"];
        sc.t_end = jr.value("t_end", sc.t_end);
        sc.dt = jr.value("dt", sc.dt);
        sc.sample_every = jr.value("sample_every", sc.sample_every);
        sc.lipschitz_delta = jr.value("lipschitz_delta", sc.lipschitz_delta);
    }
    if (!(sc.dt > 0.0)) throw InputError("scenario: run.dt must be positive");
    if (!(sc.t_end > sc.dt)) throw InputError("scenario: run.t_end must exceed dt");
    if (sc.sample_every < 1) throw InputError("scenario: run.sample_every must be >= 1");
    if (!(sc.lipschitz_delta > 0.0))
        throw InputError("scenario: run.lipschitz_delta must be positive");
    const long steps = std::lround(sc.t_end / sc.dt);
    if (steps < 1 || std::abs(steps * sc.dt - sc.t_end) > 1e-9 * std::max(1.0, sc.t_end) ||
        steps % sc.sample_every != 0)
        throw InputError("scenario: t_end/dt must be a whole number of steps divisible "
                         "by sample_every");
    return sc;
}

} // namespace

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("scenario: cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError("scenario: " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        return parse_scenario(doc, path);
    } catch (const json::exception& e) {
        throw InputError("scenario: " + path.string() + ": malformed field: " + e.what());
    }
}

double total_capacity(std::span<const ControlLaw> laws) {
    double c = 0.0;
    for (const ControlLaw& law : laws) c += law.p_max() - law.p_min();
    return c;
}

RunReport run_scenario(const Scenario& scenario, const std::filesystem::path& out_dir) {
    const NetworkModel& model = scenario.model;
    const size_t n = static_cast<size_t>(model.n_buses());

    const std::vector<double> zeros(n, 0.0);
    SystemState initial = equilibrium(model, scenario.laws, zeros).first;

    // Terminal constants: every scripted disturbance applied.
    std::vector<double> terminal_constants(n, 0.0);
    for (const Disturbance& d : scenario.disturbances)
        if (d.time <= scenario.t_end)
            terminal_constants[static_cast<size_t>(d.bus)] += d.delta_p;

    auto [eq_term, ofc_term] = equilibrium(model, scenario.laws, terminal_constants);
    StabilityCertificate cert =
        certify(model, scenario.laws, eq_term, scenario.lipschitz_delta);

    std::function<double(const SystemState&)> monitor;
    if (cert.all_p_valid())
        monitor = [&model, &eq_term, &cert](const SystemState& s) {
            return energy_total(model, s, eq_term, cert);
        };

    Trajectory traj = simulate(model, scenario.laws, initial, zeros, scenario.disturbances,
                               scenario.t_end, scenario.dt, scenario.sample_every, monitor);

    RunReport r;
    r.scenario = scenario.name;
    r.ofc = ofc_term;
    r.certificate = cert;
    r.verdict = cert.verdict;

    const TrajectorySample& last = traj.samples.back();
    double mean = 0.0;
    for (double w : last.state.omega) mean += w;
    r.terminal_omega = mean / static_cast<double>(n);
    r.terminal_hz = 60.0 + r.terminal_omega / (2.0 * std::numbers::pi);
    r.terminal_sync_gap = traj.terminal.sync_gap;

    r.nadir.assign(n, 0.0);
    for (const TrajectorySample& s : traj.samples)
        for (size_t j = 0; j < n; ++j)
            if (std::abs(s.state.omega[j]) > std::abs(r.nadir[j]))
                r.nadir[j] = s.state.omega[j];
    for (double x : r.nadir)
        if (std::abs(x) > std::abs(r.worst_nadir)) r.worst_nadir = x;

    // Settled once every bus moves less than 1e-7 rad/s per trailing second,
    // from that sample onward.
    const auto lookback =
        static_cast<size_t>(std::max(1.0, std::round(1.0 / traj.sample_dt)));
    if (traj.samples.size() > lookback) {
        std::optional<size_t> settled_at;
        for (size_t i = traj.samples.size(); i-- > lookback;) {
            double delta = 0.0;
            for (size_t j = 0; j < n; ++j)
                delta = std::max(delta, std::abs(traj.samples[i].state.omega[j] -
                                                 traj.samples[i - lookback].state.omega[j]));
            if (delta <= 1e-7)
                settled_at = i;
            else
                break;
        }
        if (settled_at) r.settling_time = traj.samples[*settled_at].t;
    }

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path csv_path = out_dir / (scenario.name + "_trajectory.csv");
    {
        std::ofstream out(csv_path);
        if (!out) throw InputError("run: cannot write " + csv_path.string());
        write_trajectory_csv(out, model, traj);
    }
    r.trajectory_csv = csv_path.string();

    const std::filesystem::path json_path = out_dir / (scenario.name + "_report.json");
    {
        std::ofstream out(json_path);
        if (!out) throw InputError("run: cannot write " + json_path.string());
        out << report_to_json(r).dump(2) << '\n';
    }
    r.report_json = json_path.string();
    r.trajectory = std::move(traj);
    return r;
}

ComparisonReport compare_cases(const Scenario& scenario,
                               const std::filesystem::path& out_dir) {
    const size_t n = static_cast<size_t>(scenario.model.n_buses());

    bool any1 = false, any2 = false;
    for (const ScenarioBus& sb : scenario.bus_specs) {
        if (sb.in_case1) {
            if (sb.bus.kind != BusKind::Generator)
                throw InputError("compare: case1 participants must be generators (bus " +
                                 std::to_string(sb.bus.id) + ")");
            any1 = true;
        }
        if (sb.in_case2) any2 = true;
    }
    if (!any1 || !any2)
        throw InputError("compare: the scenario must mark case1 and case2 participants");

    auto build_case = [&](bool case1) {
        Scenario variant = scenario;
        variant.name = scenario.name + (case1 ? "_case1" : "_case2");
        variant.laws.clear();
        for (size_t j = 0; j < n; ++j) {
            const ScenarioBus& sb = scenario.bus_specs[j];
            ControlSpec cs = sb.control;
            cs.controllable = case1 ? sb.in_case1 : sb.in_case2;
            variant.laws.push_back(make_law(sb.bus, cs));
        }
        variant.model = with_bounds(scenario.model, variant.laws);
        return variant;
    };

    const Scenario case1 = build_case(true);
    const Scenario case2 = build_case(false);

    ComparisonReport rep;
    rep.capacity_case1 = total_capacity(case1.laws);
    rep.capacity_case2 = total_capacity(case2.laws);
    if (std::abs(rep.capacity_case1 - rep.capacity_case2) > 1e-9)
        throw std::logic_error("compare: constructed cases have unequal control capacity (" +
                               std::to_string(rep.capacity_case1) + " vs " +
                               std::to_string(rep.capacity_case2) + ")");

    rep.case1 = run_scenario(case1, out_dir);
    rep.case2 = run_scenario(case2, out_dir);

    const std::filesystem::path json_path = out_dir / (scenario.name + "_comparison.json");
    {
        json j;
        j["scenario"] = scenario.name;
        j["capacity"] = {{"case1", rep.capacity_case1}, {"case2", rep.capacity_case2}};
        auto summarize = [](const RunReport& r) {
            json e;
            e["worst_nadir_rad_s"] = r.worst_nadir;
            e["worst_nadir_hz"] = 60.0 + r.worst_nadir / (2.0 * std::numbers::pi);
            e["terminal_hz"] = r.terminal_hz;
            e["terminal_omega_rad_s"] = r.terminal_omega;
            if (r.settling_time)
                e["settling_time"] = *r.settling_time;
            else
                e["settling_time"] = nullptr;
            e["report"] = r.report_json;
            return e;
        };
        j["case1"] = summarize(rep.case1);
        j["case2"] = summarize(rep.case2);
        j["nadir_improvement_rad_s"] =
            std::abs(rep.case1.worst_nadir) - std::abs(rep.case2.worst_nadir);
        std::ofstream out(json_path);
        if (!out) throw InputError("compare: cannot write " + json_path.string());
        out << j.dump(2) << '\n';
    }
    rep.report_json = json_path.string();
    return rep;
}

std::string ofc_solution_json(const OfcSolution& sol) { return ofc_to_json(sol).dump(2); }

std::string certificate_json(const StabilityCertificate& cert) {
    return certificate_to_json(cert).dump(2);
}

std::string run_report_json(const RunReport& report) {
    return report_to_json(report).dump(2);
}

std::string comparison_report_json(const ComparisonReport& report) {
    json j;
    j["capacity"] = {{"case1", report.capacity_case1}, {"case2", report.capacity_case2}};
    j["case1"] = {{"worst_nadir", report.case1.worst_nadir},
                  {"terminal_hz", report.case1.terminal_hz}};
    j["case2"] = {{"worst_nadir", report.case2.worst_nadir},
                  {"terminal_hz", report.case2.terminal_hz}};
    j["report"] = report.report_json;
    return j.dump(2);
}

std::string equilibrium_json(const SystemState& state, const OfcSolution& sol) {
    json j;
    j["ofc"] = ofc_to_json(sol);
    j["theta"] = state.theta;
    j["omega"] = state.omega;
    j["valve"] = state.valve;
    j["p_mech"] = state.p_mech;
    return j.dump(2);
}

} // namespace gridfc
