#include "gridfc/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

#include "gridfc/errors.hpp"

namespace gridfc {

namespace {

void check_dimensions(const NetworkModel& model, const SystemState& state,
                      std::span<const ControlLaw> laws, std::span<const double> constants) {
    const size_t n = static_cast<size_t>(model.n_buses());
    const size_t g = static_cast<size_t>(model.n_generators());
    if (state.theta.size() != n || state.omega.size() != n || state.valve.size() != g ||
        state.p_mech.size() != g)
        throw InputError("dynamics: state dimensions do not match the model");
    if (laws.size() != n) throw InputError("dynamics: one control law per bus required");
    if (constants.size() != n)
        throw InputError("dynamics: one constant injection per bus required");
}

// Root of D*w - law(w) - c = 0 for one load bus. c = k_j - F_j(theta).
double solve_load_omega(const ControlLaw& law, double damping, double c) {
    if (const auto* quad = law.cost() ? law.cost()->as_quadratic() : nullptr;
        quad != nullptr && !law.is_constant()) {
        // Piecewise linear in omega: try the unsaturated branch first, then
        // the two saturated ones. Monotonicity makes exactly one consistent.
        const double gain = 1.0 / quad->gain();
        const double w_int = (quad->setpoint() + c) / (damping + gain);
        const double u = quad->setpoint() - w_int * gain;
        if (u >= law.p_min() && u <= law.p_max()) return w_int;
        const double w_hi = (law.p_max() + c) / damping;
        if (quad->setpoint() - w_hi * gain >= law.p_max()) return w_hi;
        return (law.p_min() + c) / damping;
    }
    if (law.is_constant()) return (law.p_min() + c) / damping;

    // Generic non-increasing law: bisection. The feedback range bounds the
    // root inside [ (p_min + c)/D, (p_max + c)/D ].
    double lo = (law.p_min() + c) / damping;
    double hi = (law.p_max() + c) / damping;
    if (lo > hi) std::swap(lo, hi);
    lo -= 1e-12;
    hi += 1e-12;
    auto g = [&](double w) { return damping * w - law.feedback(w) - c; };
    double best = 0.5 * (lo + hi);
    double best_abs = std::abs(g(best));
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double f = g(mid);
        if (std::abs(f) < best_abs) {
            best = mid;
            best_abs = std::abs(f);
        }
        if (best_abs <= 1e-13) break;
        if (f < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return best;
}

std::vector<double> load_omegas(const NetworkModel& model, std::span<const ControlLaw> laws,
                                std::span<const double> constants,
                                const std::vector<double>& flow) {
    std::vector<double> w(static_cast<size_t>(model.n_loads()), 0.0);
    for (int j = model.n_generators(); j < model.n_buses(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        w[static_cast<size_t>(model.load_ordinal(j))] =
            solve_load_omega(laws[sj], model.bus(j).damping, constants[sj] - flow[sj]);
    }
    return w;
}

// Packed differential vector: theta (all buses), omega (generators),
// valve, p_mech.
struct Packed {
    std::vector<double> v;
};

Packed pack(const NetworkModel& model, const SystemState& s) {
    Packed p;
    p.v.reserve(s.theta.size() + 3 * s.valve.size());
    p.v.insert(p.v.end(), s.theta.begin(), s.theta.end());
    for (int j = 0; j < model.n_generators(); ++j)
        p.v.push_back(s.omega[static_cast<size_t>(j)]);
    p.v.insert(p.v.end(), s.valve.begin(), s.valve.end());
    p.v.insert(p.v.end(), s.p_mech.begin(), s.p_mech.end());
    return p;
}

SystemState unpack(const NetworkModel& model, const Packed& p) {
    const size_t n = static_cast<size_t>(model.n_buses());
    const size_t g = static_cast<size_t>(model.n_generators());
    SystemState s;
    s.theta.assign(p.v.begin(), p.v.begin() + static_cast<long>(n));
    s.omega.assign(n, 0.0);
    for (size_t j = 0; j < g; ++j) s.omega[j] = p.v[n + j];
    s.valve.assign(p.v.begin() + static_cast<long>(n + g),
                   p.v.begin() + static_cast<long>(n + 2 * g));
    s.p_mech.assign(p.v.begin() + static_cast<long>(n + 2 * g), p.v.end());
    return s;
}

std::vector<double> packed_rhs(const NetworkModel& model, const Packed& y,
                               std::span<const ControlLaw> laws,
                               std::span<const double> constants) {
    const SystemState s = unpack(model, y);
    const std::vector<double> flow = net_power_flow(model, s.theta);
    const std::vector<double> wl = load_omegas(model, laws, constants, flow);

    const size_t n = static_cast<size_t>(model.n_buses());
    const size_t g = static_cast<size_t>(model.n_generators());
    std::vector<double> dy(n + 3 * g, 0.0);
    for (int j = 0; j < model.n_buses(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        dy[sj] = model.is_generator(j) ? s.omega[sj]
                                       : wl[static_cast<size_t>(model.load_ordinal(j))];
    }
    for (int j = 0; j < model.n_generators(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        const Bus& b = model.bus(j);
        dy[n + sj] = (-b.damping * s.omega[sj] + s.p_mech[sj] + constants[sj] - flow[sj]) /
                     b.inertia;
        dy[n + g + sj] = (laws[sj].feedback(s.omega[sj]) - s.valve[sj]) / b.tau_g;
        dy[n + 2 * g + sj] = (s.valve[sj] - s.p_mech[sj]) / b.tau_b;
    }
    return dy;
}

} // namespace

std::vector<double> load_bus_frequency(const NetworkModel& model,
                                       std::span<const double> theta,
                                       std::span<const ControlLaw> laws,
                                       std::span<const double> constants) {
    if (static_cast<int>(theta.size()) != model.n_buses())
        throw InputError("load_bus_frequency: theta size mismatch");
    if (static_cast<int>(laws.size()) != model.n_buses() ||
        static_cast<int>(constants.size()) != model.n_buses())
        throw InputError("load_bus_frequency: laws/constants size mismatch");
    const std::vector<double> flow = net_power_flow(model, theta);
    return load_omegas(model, laws, constants, flow);
}

Derivatives rhs(const NetworkModel& model, const SystemState& state,
                std::span<const ControlLaw> laws, std::span<const double> constants) {
    check_dimensions(model, state, laws, constants);
    const std::vector<double> dy = packed_rhs(model, pack(model, state), laws, constants);
    const size_t n = static_cast<size_t>(model.n_buses());
    const size_t g = static_cast<size_t>(model.n_generators());
    Derivatives d;
    d.dtheta.assign(dy.begin(), dy.begin() + static_cast<long>(n));
    d.domega.assign(dy.begin() + static_cast<long>(n), dy.begin() + static_cast<long>(n + g));
    d.dvalve.assign(dy.begin() + static_cast<long>(n + g),
                    dy.begin() + static_cast<long>(n + 2 * g));
    d.dp_mech.assign(dy.begin() + static_cast<long>(n + 2 * g), dy.end());
    return d;
}

SystemState step_rk4(const NetworkModel& model, const SystemState& state,
                     std::span<const ControlLaw> laws, std::span<const double> constants,
                     double dt) {
    if (!(dt > 0.0)) throw InputError("step_rk4: dt must be positive");
    check_dimensions(model, state, laws, constants);

    const Packed y0 = pack(model, state);
    const size_t m = y0.v.size();
    Packed stage{std::vector<double>(m)};

    const std::vector<double> k1 = packed_rhs(model, y0, laws, constants);
    for (size_t i = 0; i < m; ++i) stage.v[i] = y0.v[i] + 0.5 * dt * k1[i];
    const std::vector<double> k2 = packed_rhs(model, stage, laws, constants);
    for (size_t i = 0; i < m; ++i) stage.v[i] = y0.v[i] + 0.5 * dt * k2[i];
    const std::vector<double> k3 = packed_rhs(model, stage, laws, constants);
    for (size_t i = 0; i < m; ++i) stage.v[i] = y0.v[i] + dt * k3[i];
    const std::vector<double> k4 = packed_rhs(model, stage, laws, constants);

    Packed y1{std::vector<double>(m)};
    for (size_t i = 0; i < m; ++i)
        y1.v[i] = y0.v[i] + dt / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);

    SystemState next = unpack(model, y1);
    // Restore the algebraic invariant on the accepted state.
    const std::vector<double> wl = load_bus_frequency(model, next.theta, laws, constants);
    for (int j = model.n_generators(); j < model.n_buses(); ++j)
        next.omega[static_cast<size_t>(j)] = wl[static_cast<size_t>(model.load_ordinal(j))];

    for (double x : y1.v)
        if (!std::isfinite(x)) throw NumericalError("numerical blow-up in step_rk4");
    return next;
}

Trajectory simulate(const NetworkModel& model, std::span<const ControlLaw> laws,
                    const SystemState& initial, std::span<const double> constants,
                    std::vector<Disturbance> disturbances, double t_end, double dt,
                    int sample_every,
                    const std::function<double(const SystemState&)>& lyapunov) {
    if (!(t_end > 0.0) || !(dt > 0.0)) throw InputError("simulate: t_end and dt must be positive");
    if (sample_every < 1) throw InputError("simulate: sample_every must be >= 1");
    check_dimensions(model, initial, laws, constants);

    const long steps = std::lround(t_end / dt);
    if (steps < 1 || std::abs(steps * dt - t_end) > 1e-9 * std::max(1.0, t_end))
        throw InputError("simulate: t_end must be a whole number of dt steps");
    if (steps % sample_every != 0)
        throw InputError("simulate: step count must be divisible by sample_every");

    for (size_t i = 0; i < disturbances.size(); ++i) {
        const Disturbance& d = disturbances[i];
        if (d.time < 0.0) throw InputError("simulate: disturbance time must be >= 0");
        if (d.bus < 0 || d.bus >= model.n_buses())
            throw InputError("simulate: disturbance references unknown bus " +
                             std::to_string(d.bus));
        if (i > 0 && d.time < disturbances[i - 1].time)
            throw InputError("simulate: disturbances must be sorted by time");
    }

    std::vector<double> k(constants.begin(), constants.end());
    size_t next_disturbance = 0;
    auto apply_due = [&](double t_boundary) {
        while (next_disturbance < disturbances.size() &&
               disturbances[next_disturbance].time <= t_boundary + 1e-9) {
            const Disturbance& d = disturbances[next_disturbance];
            k[static_cast<size_t>(d.bus)] += d.delta_p;
            ++next_disturbance;
        }
    };

    SystemState state = initial;
    apply_due(0.0);
    // Re-solve the load-bus algebra so sample 0 reflects any t = 0 step.
    {
        const std::vector<double> wl = load_bus_frequency(model, state.theta, laws, k);
        for (int j = model.n_generators(); j < model.n_buses(); ++j)
            state.omega[static_cast<size_t>(j)] = wl[static_cast<size_t>(model.load_ordinal(j))];
    }

    Trajectory traj;
    traj.sample_dt = dt * sample_every;
    traj.has_lyapunov = static_cast<bool>(lyapunov);
    traj.samples.reserve(static_cast<size_t>(steps / sample_every) + 1);

    auto record = [&](double t) {
        TrajectorySample s;
        s.t = t;
        s.state = state;
        s.control.reserve(static_cast<size_t>(model.n_buses()));
        for (int j = 0; j < model.n_buses(); ++j)
            s.control.push_back(laws[static_cast<size_t>(j)].feedback(
                state.omega[static_cast<size_t>(j)]));
        s.v_total = lyapunov ? lyapunov(state) : std::numeric_limits<double>::quiet_NaN();
        traj.samples.push_back(std::move(s));
    };

    record(0.0);
    for (long step = 0; step < steps; ++step) {
        state = step_rk4(model, state, laws, k, dt);
        const double t = static_cast<double>(step + 1) * dt;
        apply_due(t);
        if ((step + 1) % sample_every == 0) record(t);
    }

    double mean = 0.0;
    for (double w : state.omega) mean += w;
    mean /= state.omega.size();
    for (double w : state.omega)
        traj.terminal.sync_gap = std::max(traj.terminal.sync_gap, std::abs(w - mean));
    const Derivatives dend = rhs(model, state, laws, k);
    for (double x : dend.domega)
        traj.terminal.max_domega = std::max(traj.terminal.max_domega, std::abs(x));
    for (double x : dend.dvalve)
        traj.terminal.max_dvalve = std::max(traj.terminal.max_dvalve, std::abs(x));
    for (double x : dend.dp_mech)
        traj.terminal.max_dp_mech = std::max(traj.terminal.max_dp_mech, std::abs(x));
    return traj;
}

std::pair<SystemState, OfcSolution> equilibrium(const NetworkModel& model,
                                                std::span<const ControlLaw> laws,
                                                std::span<const double> constants) {
    if (static_cast<int>(laws.size()) != model.n_buses() ||
        static_cast<int>(constants.size()) != model.n_buses())
        throw InputError("equilibrium: laws/constants size mismatch");

    std::vector<OfcBus> ofc_buses;
    ofc_buses.reserve(laws.size());
    for (int j = 0; j < model.n_buses(); ++j)
        ofc_buses.push_back(OfcBus{laws[static_cast<size_t>(j)], model.bus(j).damping,
                                   constants[static_cast<size_t>(j)]});
    const OfcSolution sol = OfcProblem(std::move(ofc_buses)).solve();

    std::vector<double> injections(static_cast<size_t>(model.n_buses()), 0.0);
    for (int j = 0; j < model.n_buses(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        injections[sj] = sol.p_star[sj] + constants[sj] - sol.d_star[sj];
    }
    const PowerFlowResult pf = solve_equilibrium_angles(model, injections);

    SystemState state;
    state.theta = pf.theta;
    state.omega.assign(static_cast<size_t>(model.n_buses()), sol.lambda_star);
    state.valve.assign(sol.p_star.begin(), sol.p_star.begin() + model.n_generators());
    state.p_mech = state.valve;
    return {std::move(state), sol};
}

void write_trajectory_csv(std::ostream& out, const NetworkModel& model,
                          const Trajectory& trajectory) {
    const int n = model.n_buses();
    const int g = model.n_generators();
    out << "t";
    for (int j = 0; j < n; ++j) out << ",theta_" << j;
    for (int j = 0; j < n; ++j) out << ",omega_" << j;
    for (int j = 0; j < g; ++j) out << ",a_" << j;
    for (int j = 0; j < g; ++j) out << ",p_" << j;
    out << ",V_total\n";

    char buf[32];
    auto emit = [&](double x) {
        std::snprintf(buf, sizeof(buf), "%.12g", x);
        out << ',' << buf;
    };
    for (const TrajectorySample& s : trajectory.samples) {
        std::snprintf(buf, sizeof(buf), "%.12g", s.t);
        out << buf;
        for (double x : s.state.theta) emit(x);
        for (double x : s.state.omega) emit(x);
        for (double x : s.state.valve) emit(x);
        for (double x : s.state.p_mech) emit(x);
        emit(s.v_total);
        out << '\n';
    }
}

} // namespace gridfc
