#pragma once

#include <numbers>
#include <span>
#include <vector>

namespace gridfc {

enum class BusKind { Generator, Load };

/// Static per-bus data. Powers are per-unit on a common MVA base, angles
/// in radians, frequency deviations in rad/s.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    double inertia = 0.0;   ///< M, pu*s^2; > 0 for generators, exactly 0 for loads
    double damping = 0.0;   ///< D, pu/(rad/s); > 0 everywhere
    double p_set = 0.0;     ///< setpoint injection, pu (negative for loads)
    double p_min = 0.0;     ///< lower injection bound, pu
    double p_max = 0.0;     ///< upper injection bound, pu
    double tau_g = 0.0;     ///< governor time constant, s (generators only)
    double tau_b = 0.0;     ///< turbine time constant, s (generators only)
};

/// A lossless line with precomputed maximum real power transfer
/// Y = |V_i||V_j| / x_ij. The orientation (from -> to) is arbitrary but
/// each pair may appear only once.
struct Line {
    int from = 0;
    int to = 0;
    double y_max = 0.0; ///< Y, pu
};

/// Immutable bus/line graph. Buses are ordered generators first, then
/// loads, with ids equal to their position. The graph must be connected.
/// Safe to share across threads after construction.
class NetworkModel {
public:
    /// Nominal grid frequency, rad/s.
    static constexpr double kNominalFrequency = 120.0 * std::numbers::pi;

    NetworkModel(std::vector<Bus> buses, std::vector<Line> lines);

    [[nodiscard]] int n_buses() const { return static_cast<int>(buses_.size()); }
    [[nodiscard]] int n_generators() const { return n_generators_; }
    [[nodiscard]] int n_loads() const { return n_buses() - n_generators_; }
    [[nodiscard]] int n_lines() const { return static_cast<int>(lines_.size()); }

    [[nodiscard]] const std::vector<Bus>& buses() const { return buses_; }
    [[nodiscard]] const std::vector<Line>& lines() const { return lines_; }
    [[nodiscard]] const Bus& bus(int j) const { return buses_[static_cast<size_t>(j)]; }
    [[nodiscard]] const Line& line(int l) const { return lines_[static_cast<size_t>(l)]; }

    [[nodiscard]] bool is_generator(int j) const { return j < n_generators_; }
    /// Position of load bus j within the load block (j >= n_generators()).
    [[nodiscard]] int load_ordinal(int j) const { return j - n_generators_; }

private:
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    int n_generators_ = 0;
};

/// Result of the static angle solve. `secure` reports whether every line
/// satisfies -pi/2 < theta_i - theta_j < pi/2 at the solution.
struct PowerFlowResult {
    std::vector<double> theta;
    bool secure = false;
    int iterations = 0;
    double residual = 0.0;
};

/// Net real power flowing out of each bus for the given absolute angles:
/// F_j = sum_{j->k} Y sin(theta_j - theta_k) - sum_{i->j} Y sin(theta_i - theta_j).
/// The entries always sum to zero up to roundoff.
std::vector<double> net_power_flow(const NetworkModel& model,
                                   std::span<const double> theta);

/// Solves F(theta) = injections for the bus angles with bus 0 as the
/// angle reference (theta[0] = 0), by damped Newton iteration from a flat
/// start. The injections must sum to zero (|sum| <= 1e-9). Throws
/// NumericalError ("power-flow infeasible") when the iteration does not
/// reach an infinity-norm residual of 1e-10 within 50 steps. Only the
/// flat-start solution is returned even when others exist; callers decide
/// what to do with an insecure solution via `secure`.
PowerFlowResult solve_equilibrium_angles(const NetworkModel& model,
                                         std::span<const double> injections);

} // namespace gridfc
