#pragma once

#include <memory>
#include <optional>

namespace gridfc {

class QuadraticCost;

/// Strictly convex, twice continuously differentiable cost on a box.
/// Implementations must provide the analytic inverse of the marginal
/// cost; no numeric inversion happens in the control path.
class CostFunction {
public:
    virtual ~CostFunction() = default;

    virtual double cost(double p) const = 0;
    /// c'(p)
    virtual double marginal(double p) const = 0;
    /// (c')^{-1}(y)
    virtual double inverse_marginal(double y) const = 0;

    /// A uniform bound on |d/dy (c')^{-1}(y)| when one exists in closed
    /// form (quadratic costs: 1/R). Others fall back to sampling.
    virtual std::optional<double> uniform_inverse_marginal_slope() const {
        return std::nullopt;
    }
    virtual const QuadraticCost* as_quadratic() const { return nullptr; }
};

/// c(p) = (R/2)(p - p_set)^2, the droop-control cost: the resulting
/// feedback is p_set - omega/R clipped to the box.
class QuadraticCost final : public CostFunction {
public:
    QuadraticCost(double gain, double p_set);

    double cost(double p) const override;
    double marginal(double p) const override;
    double inverse_marginal(double y) const override;
    std::optional<double> uniform_inverse_marginal_slope() const override;
    const QuadraticCost* as_quadratic() const override { return this; }

    [[nodiscard]] double gain() const { return gain_; }
    [[nodiscard]] double setpoint() const { return p_set_; }

private:
    double gain_;  // R > 0
    double p_set_;
};

/// max(min(x, hi), lo). Throws InputError when lo > hi.
double clip(double x, double lo, double hi);

/// Decentralized frequency feedback for one bus: the saturated inverse
/// marginal cost [(c')^{-1}(-omega)] restricted to [p_min, p_max]. The
/// same formula serves as the generator command p^c(omega) and the load
/// injection p(omega). Output is non-increasing in omega and always
/// inside the box. A law with p_min == p_max is a constant,
/// uncontrollable injection and needs no cost function.
class ControlLaw {
public:
    ControlLaw(std::shared_ptr<const CostFunction> cost, double p_min, double p_max);

    /// Fixed injection: p_min == p_max == value.
    static ControlLaw constant(double value);

    [[nodiscard]] double feedback(double omega) const;

    /// Upper bound on the feedback slope over |omega - omega_star| <= delta.
    /// Quadratic costs: 1/R when the unclipped value meets the box anywhere
    /// in the neighborhood, 0 otherwise (saturated throughout). Other costs:
    /// the supremum of finite-difference slopes over a dense sample of the
    /// neighborhood, times a 1.01 safety factor. A constant law returns 0.
    [[nodiscard]] double lipschitz_constant(double omega_star, double delta) const;

    [[nodiscard]] bool is_constant() const { return p_min_ == p_max_; }
    [[nodiscard]] double p_min() const { return p_min_; }
    [[nodiscard]] double p_max() const { return p_max_; }
    [[nodiscard]] const CostFunction* cost() const { return cost_.get(); }

private:
    std::shared_ptr<const CostFunction> cost_;
    double p_min_;
    double p_max_;
};

} // namespace gridfc
