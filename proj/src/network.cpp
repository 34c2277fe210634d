#include "gridfc/network.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <queue>
#include <set>
#include <string>

#include "gridfc/errors.hpp"

namespace gridfc {

NetworkModel::NetworkModel(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
    const int n = static_cast<int>(buses_.size());
    if (n == 0) throw InputError("network: at least one bus is required");

    bool seen_load = false;
    for (int j = 0; j < n; ++j) {
        const Bus& b = buses_[static_cast<size_t>(j)];
        if (b.id != j)
            throw InputError("network: bus ids must be contiguous 0..N-1 in order, got id " +
                             std::to_string(b.id) + " at position " + std::to_string(j));
        if (b.kind == BusKind::Generator) {
            if (seen_load)
                throw InputError("network: generators must precede load buses (bus " +
                                 std::to_string(j) + ")");
            if (!(b.inertia > 0.0))
                throw InputError("network: generator bus " + std::to_string(j) +
                                 " must have M > 0");
            if (!(b.tau_g > 0.0) || !(b.tau_b > 0.0))
                throw InputError("network: generator bus " + std::to_string(j) +
                                 " must have tau_g > 0 and tau_b > 0");
            ++n_generators_;
        } else {
            seen_load = true;
            if (b.inertia != 0.0)
                throw InputError("network: load bus " + std::to_string(j) +
                                 " must have M = 0");
        }
        if (!(b.damping > 0.0))
            throw InputError("network: bus " + std::to_string(j) + " must have D > 0");
        if (!(b.p_min <= b.p_set && b.p_set <= b.p_max))
            throw InputError("network: bus " + std::to_string(j) +
                             " violates p_min <= p_set <= p_max");
    }

    std::set<std::pair<int, int>> seen;
    for (const Line& l : lines_) {
        if (l.from < 0 || l.from >= n || l.to < 0 || l.to >= n)
            throw InputError("network: line endpoint out of range");
        if (l.from == l.to)
            throw InputError("network: self-loop on bus " + std::to_string(l.from));
        if (!(l.y_max > 0.0))
            throw InputError("network: line Y must be positive");
        auto key = std::minmax(l.from, l.to);
        if (!seen.insert(key).second)
            throw InputError("network: duplicate line between buses " +
                             std::to_string(key.first) + " and " + std::to_string(key.second));
    }

    // Connectivity (BFS over the undirected graph).
    std::vector<char> visited(static_cast<size_t>(n), 0);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int j = frontier.front();
        frontier.pop();
        for (const Line& l : lines_) {
            const int other = l.from == j ? l.to : (l.to == j ? l.from : -1);
            if (other >= 0 && !visited[static_cast<size_t>(other)]) {
                visited[static_cast<size_t>(other)] = 1;
                ++reached;
                frontier.push(other);
            }
        }
    }
    if (reached != n) throw InputError("network: graph is not connected");
}

std::vector<double> net_power_flow(const NetworkModel& model,
                                   std::span<const double> theta) {
    const int n = model.n_buses();
    if (static_cast<int>(theta.size()) != n)
        throw InputError("net_power_flow: theta has " + std::to_string(theta.size()) +
                         " entries, expected " + std::to_string(n));
    std::vector<double> flow(static_cast<size_t>(n), 0.0);
    for (const Line& l : model.lines()) {
        const double f = l.y_max * std::sin(theta[static_cast<size_t>(l.from)] -
                                            theta[static_cast<size_t>(l.to)]);
        flow[static_cast<size_t>(l.from)] += f;
        flow[static_cast<size_t>(l.to)] -= f;
    }
    return flow;
}

namespace {

double inf_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Residual F(theta) - target with the infinity norm.
std::vector<double> residual(const NetworkModel& model, const std::vector<double>& theta,
                             const std::vector<double>& target) {
    std::vector<double> r = net_power_flow(model, theta);
    for (size_t j = 0; j < r.size(); ++j) r[j] -= target[j];
    return r;
}

} // namespace

PowerFlowResult solve_equilibrium_angles(const NetworkModel& model,
                                         std::span<const double> injections) {
    const int n = model.n_buses();
    if (static_cast<int>(injections.size()) != n)
        throw InputError("solve_equilibrium_angles: injection size mismatch");

    double sum = 0.0;
    for (double p : injections) sum += p;
    if (std::abs(sum) > 1e-9)
        throw InputError("solve_equilibrium_angles: injections must sum to zero, got " +
                         std::to_string(sum));

    // Spread the residual imbalance (roundoff-sized by the check above)
    // uniformly so the dropped reference equation stays consistent.
    std::vector<double> target(injections.begin(), injections.end());
    for (double& p : target) p -= sum / n;

    std::vector<double> theta(static_cast<size_t>(n), 0.0); // flat start
    std::vector<double> r = residual(model, theta, target);
    double rnorm = inf_norm(r);

    constexpr int kMaxIterations = 50;
    constexpr double kTol = 1e-10;
    int it = 0;
    bool converged = rnorm <= 1e-12;
    while (!converged && it < kMaxIterations) {
        ++it;
        // Reduced Jacobian: drop bus 0 (reference) to remove the uniform
        // translation null space.
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n - 1, n - 1);
        for (const Line& l : model.lines()) {
            const double w = l.y_max * std::cos(theta[static_cast<size_t>(l.from)] -
                                                theta[static_cast<size_t>(l.to)]);
            const int a = l.from - 1;
            const int b = l.to - 1;
            if (a >= 0) jac(a, a) += w;
            if (b >= 0) jac(b, b) += w;
            if (a >= 0 && b >= 0) {
                jac(a, b) -= w;
                jac(b, a) -= w;
            }
        }
        Eigen::VectorXd rhs(n - 1);
        for (int j = 1; j < n; ++j) rhs(j - 1) = r[static_cast<size_t>(j)];

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) break;
        const Eigen::VectorXd step = lu.solve(rhs);

        // Damped update: halve the step until the residual decreases.
        double scale = 1.0;
        bool accepted = false;
        std::vector<double> trial(static_cast<size_t>(n));
        for (int halving = 0; halving < 30; ++halving) {
            trial[0] = 0.0;
            for (int j = 1; j < n; ++j)
                trial[static_cast<size_t>(j)] =
                    theta[static_cast<size_t>(j)] - scale * step(j - 1);
            std::vector<double> rt = residual(model, trial, target);
            const double rtnorm = inf_norm(rt);
            if (rtnorm < rnorm) {
                theta = trial;
                r = std::move(rt);
                rnorm = rtnorm;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if (!accepted) break;
        converged = rnorm <= 1e-12;
    }

    if (rnorm > kTol)
        throw NumericalError("power-flow infeasible: Newton residual " +
                             std::to_string(rnorm) + " after " + std::to_string(it) +
                             " iterations");

    PowerFlowResult result;
    result.theta = std::move(theta);
    result.iterations = it;
    result.residual = rnorm;
    result.secure = true;
    constexpr double kHalfPi = std::numbers::pi / 2.0;
    for (const Line& l : model.lines()) {
        const double d = result.theta[static_cast<size_t>(l.from)] -
                         result.theta[static_cast<size_t>(l.to)];
        if (!(d > -kHalfPi && d < kHalfPi)) result.secure = false;
    }
    return result;
}

} // namespace gridfc
