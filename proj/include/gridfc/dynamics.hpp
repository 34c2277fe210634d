#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "gridfc/control.hpp"
#include "gridfc/network.hpp"
#include "gridfc/ofc.hpp"

namespace gridfc {

/// Dynamic state of the closed loop. theta and omega have one entry per
/// bus; omega at load buses is algebraic (recomputed from theta after
/// every accepted step). valve (a) and p_mech (p) have one entry per
/// generator, in bus order.
struct SystemState {
    std::vector<double> theta;
    std::vector<double> omega;
    std::vector<double> valve;
    std::vector<double> p_mech;
};

/// A step change applied to a bus's constant injection at the first step
/// boundary at or after `time` (negative delta_p models increased
/// consumption). The bus's setpoint and control law are unchanged.
struct Disturbance {
    double time = 0.0;
    int bus = 0;
    double delta_p = 0.0;
};

struct Derivatives {
    std::vector<double> dtheta;     // per bus
    std::vector<double> domega;     // per generator
    std::vector<double> dvalve;     // per generator
    std::vector<double> dp_mech;    // per generator
};

struct TrajectorySample {
    double t = 0.0;
    SystemState state;
    std::vector<double> control; ///< per bus: p^c at generators, p(omega) at loads
    double v_total = 0.0;        ///< NaN when no Lyapunov monitor is attached
};

/// Terminal diagnostics against the closed-loop equilibrium conditions.
struct TerminalDiagnostics {
    double sync_gap = 0.0;      ///< max_j |omega_j - mean omega|
    double max_domega = 0.0;    ///< generator swing residual
    double max_dvalve = 0.0;
    double max_dp_mech = 0.0;
};

struct Trajectory {
    double sample_dt = 0.0;
    std::vector<TrajectorySample> samples;
    TerminalDiagnostics terminal;
    bool has_lyapunov = false;
};

/// Per-load-bus frequency deviations solving the algebraic balance
/// D_j w = p_j(w) + k_j - F_j(theta). The left side is strictly
/// increasing and the feedback non-increasing, so the root is unique;
/// it is found in closed form for quadratic laws and by bisection
/// otherwise (residual driven below 1e-12).
std::vector<double> load_bus_frequency(const NetworkModel& model,
                                       std::span<const double> theta,
                                       std::span<const ControlLaw> laws,
                                       std::span<const double> constants);

/// Closed-loop right-hand side: theta' = omega on every bus (load-bus
/// omega solved algebraically), M w' = -D w + p + k - F(theta) on
/// generators, a' = (p^c(w) - a)/tau_g, p' = (a - p)/tau_b.
Derivatives rhs(const NetworkModel& model, const SystemState& state,
                std::span<const ControlLaw> laws, std::span<const double> constants);

/// One classical fixed-step RK4 update of the differential variables with
/// the load-bus algebra re-solved at every stage. Deterministic: equal
/// inputs give bit-identical outputs. Throws NumericalError when the new
/// state is not finite.
SystemState step_rk4(const NetworkModel& model, const SystemState& state,
                     std::span<const ControlLaw> laws, std::span<const double> constants,
                     double dt);

/// Integrates from `initial`, applying disturbance steps to a private
/// copy of `constants`, and records every sample_every-th state.
/// `t_end/dt` must be a whole number of steps divisible by sample_every
/// so sampling stays uniform. The optional `lyapunov` callback is
/// evaluated at each recorded sample.
Trajectory simulate(const NetworkModel& model, std::span<const ControlLaw> laws,
                    const SystemState& initial, std::span<const double> constants,
                    std::vector<Disturbance> disturbances, double t_end, double dt,
                    int sample_every,
                    const std::function<double(const SystemState&)>& lyapunov = {});

/// The closed-loop equilibrium under the given constants: solves the
/// dispatch problem for (p*, d*, lambda*), sets every omega to lambda*,
/// a = p = p* on generators, and the angles from the static power flow
/// with injections p* + k - d*. Propagates OFC and power-flow errors.
std::pair<SystemState, OfcSolution> equilibrium(const NetworkModel& model,
                                                std::span<const ControlLaw> laws,
                                                std::span<const double> constants);

/// CSV export: header t,theta_<i>...,omega_<i>...,a_<g>...,p_<g>...,V_total
/// with one row per sample, 12 significant digits.
void write_trajectory_csv(std::ostream& out, const NetworkModel& model,
                          const Trajectory& trajectory);

} // namespace gridfc
