#pragma once

#include <span>
#include <vector>

#include "gridfc/control.hpp"

namespace gridfc {

/// One bus of the dispatch problem. A constant law marks an
/// uncontrollable injection: it enters the balance but not the cost sum.
/// `constant_injection` is an exogenous offset (accumulated disturbance
/// steps) that shifts the balance without being a decision variable.
struct OfcBus {
    ControlLaw law;
    double damping = 0.0; ///< D > 0
    double constant_injection = 0.0;
};

enum class Saturation { Lower, Interior, Upper };

struct OfcSolution {
    std::vector<double> p_star;
    std::vector<double> d_star;
    double lambda_star = 0.0; ///< equals the equilibrium frequency deviation, rad/s
    std::vector<Saturation> saturation;
    double objective = 0.0;
};

struct KktCondition {
    bool pass = true;
    double worst = 0.0; ///< largest violation found
};

struct KktReport {
    KktCondition stationarity_p;
    KktCondition stationarity_d;
    KktCondition balance;
    KktCondition boxes;
    KktCondition dual_feasibility;
    KktCondition complementary_slackness;
    std::vector<double> mu_plus;
    std::vector<double> mu_minus;

    [[nodiscard]] bool all_pass() const {
        return stationarity_p.pass && stationarity_d.pass && balance.pass &&
               boxes.pass && dual_feasibility.pass && complementary_slackness.pass;
    }
};

/// Minimize sum_j c_j(p_j) + d_j^2/(2 D_j) subject to
/// sum_j (p_j + k_j - d_j) = 0 and the per-bus boxes. The KKT system
/// collapses to one scalar equation in the multiplier lambda, which the
/// solver finds by bracketed bisection; no general-purpose optimizer is
/// involved.
class OfcProblem {
public:
    explicit OfcProblem(std::vector<OfcBus> buses);

    [[nodiscard]] const std::vector<OfcBus>& buses() const { return buses_; }
    [[nodiscard]] int n_buses() const { return static_cast<int>(buses_.size()); }

    /// sum_j p_j(lambda) + k_j - lambda * sum_j D_j where p_j(lambda) is the
    /// saturated inverse marginal cost (constants contribute their fixed
    /// value). Strictly decreasing in lambda.
    [[nodiscard]] double balance_residual(double lambda) const;

    /// Bisection on balance_residual. The initial bracket (default
    /// [-1, 1] rad/s) is doubled until it straddles a sign change;
    /// expansion past |lambda| = 1e6 raises NumericalError ("OFC
    /// infeasible or unbounded"). Stops at |residual| <= 1e-12 or bracket
    /// width <= 1e-13. The root is independent of the initial bracket.
    [[nodiscard]] OfcSolution solve(double bracket_lo = -1.0, double bracket_hi = 1.0) const;

    /// Test oracle: scan lambda over [lo, hi] with the given step, keep the
    /// grid point with the smallest |balance_residual|, then refine with a
    /// golden-section pass over the two neighboring cells. Independent of
    /// solve(); intended for validation only.
    [[nodiscard]] OfcSolution oracle_solve(double lo, double hi, double step) const;

    /// Verifies the first-order optimality system for a candidate
    /// (p, d, lambda). Multipliers are reconstructed per bus from
    /// mu+ - mu- = -c'(p) - lambda, split by sign; for buses strictly inside
    /// their box, stationarity additionally requires that gradient to vanish.
    /// Constant buses are checked against their fixed value and enter only
    /// the balance.
    [[nodiscard]] KktReport kkt_check(std::span<const double> p, std::span<const double> d,
                                      double lambda, double tol) const;

    /// Objective at injections p with d_j = lambda D_j implied by stationarity.
    [[nodiscard]] double objective(std::span<const double> p, std::span<const double> d) const;

private:
    [[nodiscard]] OfcSolution complete(double lambda) const;

    std::vector<OfcBus> buses_;
    double total_damping_ = 0.0;
};

} // namespace gridfc
