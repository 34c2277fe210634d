#include "gridfc/control.hpp"

#include <cmath>
#include <string>

#include "gridfc/errors.hpp"

namespace gridfc {

QuadraticCost::QuadraticCost(double gain, double p_set) : gain_(gain), p_set_(p_set) {
    if (!(gain > 0.0))
        throw InputError("QuadraticCost: gain R must be positive, got " +
                         std::to_string(gain));
}

double QuadraticCost::cost(double p) const {
    const double d = p - p_set_;
    return 0.5 * gain_ * d * d;
}

double QuadraticCost::marginal(double p) const { return gain_ * (p - p_set_); }

double QuadraticCost::inverse_marginal(double y) const { return p_set_ + y / gain_; }

std::optional<double> QuadraticCost::uniform_inverse_marginal_slope() const {
    return 1.0 / gain_;
}

double clip(double x, double lo, double hi) {
    if (lo > hi)
        throw InputError("clip: lo > hi (" + std::to_string(lo) + " > " +
                         std::to_string(hi) + ")");
    return std::max(std::min(x, hi), lo);
}

ControlLaw::ControlLaw(std::shared_ptr<const CostFunction> cost, double p_min, double p_max)
    : cost_(std::move(cost)), p_min_(p_min), p_max_(p_max) {
    if (p_min > p_max) throw InputError("ControlLaw: p_min > p_max");
    if (!cost_ && p_min != p_max)
        throw InputError("ControlLaw: a controllable law requires a cost function");
}

ControlLaw ControlLaw::constant(double value) { return ControlLaw(nullptr, value, value); }

double ControlLaw::feedback(double omega) const {
    if (!std::isfinite(omega)) throw InputError("feedback: omega must be finite");
    if (is_constant()) return p_min_;
    return clip(cost_->inverse_marginal(-omega), p_min_, p_max_);
}

double ControlLaw::lipschitz_constant(double omega_star, double delta) const {
    if (!(delta > 0.0)) throw InputError("lipschitz_constant: delta must be positive");
    if (is_constant()) return 0.0;

    if (auto slope = cost_->uniform_inverse_marginal_slope()) {
        // inverse_marginal is monotone increasing, so the unclipped values
        // over the neighborhood form the interval below.
        const double u_lo = cost_->inverse_marginal(-(omega_star + delta));
        const double u_hi = cost_->inverse_marginal(-(omega_star - delta));
        const bool meets_box = u_lo <= p_max_ && u_hi >= p_min_;
        return meets_box ? *slope : 0.0;
    }

    constexpr int kSamples = 2001;
    const double h = 2.0 * delta / (kSamples - 1);
    double worst = 0.0;
    double prev = feedback(omega_star - delta);
    for (int i = 1; i < kSamples; ++i) {
        const double cur = feedback(omega_star - delta + i * h);
        worst = std::max(worst, std::abs(cur - prev) / h);
        prev = cur;
    }
    return 1.01 * worst;
}

} // namespace gridfc
