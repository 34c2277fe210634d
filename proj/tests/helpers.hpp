#pragma once

// Shared fixtures and generators for the test suites.

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "gridfc/control.hpp"
#include "gridfc/network.hpp"

namespace gridfc::testing {

inline Bus make_generator(int id, double p_set, double inertia = 4.0, double damping = 1.0,
                          double tau_g = 0.1, double tau_b = 0.3) {
    Bus b;
    b.id = id;
    b.kind = BusKind::Generator;
    b.inertia = inertia;
    b.damping = damping;
    b.p_set = p_set;
    b.p_min = p_set - 10.0;
    b.p_max = p_set + 10.0;
    b.tau_g = tau_g;
    b.tau_b = tau_b;
    return b;
}

inline Bus make_load(int id, double p_set, double damping = 1.0) {
    Bus b;
    b.id = id;
    b.kind = BusKind::Load;
    b.inertia = 0.0;
    b.damping = damping;
    b.p_set = p_set;
    b.p_min = p_set - 10.0;
    b.p_max = p_set + 10.0;
    return b;
}

inline NetworkModel two_bus(double y = 1.0) {
    return NetworkModel({make_generator(0, 0.0), make_load(1, 0.0)}, {Line{0, 1, y}});
}

inline NetworkModel three_bus_chain(double y = 1.0) {
    return NetworkModel({make_generator(0, 0.0), make_load(1, 0.0), make_load(2, 0.0)},
                        {Line{0, 1, y}, Line{1, 2, y}});
}

/// Cost with c'(p) = (p - s)^3 / w: strictly convex, twice continuously
/// differentiable, non-quadratic, with an analytic inverse marginal.
class CubicMarginalCost final : public CostFunction {
public:
    CubicMarginalCost(double w, double s) : w_(w), s_(s) {}
    double cost(double p) const override {
        const double d = p - s_;
        return d * d * d * d / (4.0 * w_);
    }
    double marginal(double p) const override {
        const double d = p - s_;
        return d * d * d / w_;
    }
    double inverse_marginal(double y) const override { return s_ + std::cbrt(w_ * y); }

private:
    double w_;
    double s_;
};

/// Random connected network of up to max_buses buses: a random spanning
/// tree plus a few extra chords, with at least one generator.
inline NetworkModel random_network(std::mt19937_64& rng, int max_buses = 20) {
    std::uniform_int_distribution<int> nd(2, max_buses);
    const int n = nd(rng);
    std::uniform_int_distribution<int> gd(1, n - 1);
    const int g = gd(rng);
    std::uniform_real_distribution<double> yd(0.5, 5.0);
    std::uniform_real_distribution<double> md(0.5, 5.0);
    std::uniform_real_distribution<double> dd(0.5, 2.0);

    std::vector<Bus> buses;
    for (int j = 0; j < n; ++j) {
        if (j < g) {
            Bus b = make_generator(j, 0.0, md(rng), dd(rng));
            buses.push_back(b);
        } else {
            buses.push_back(make_load(j, 0.0, dd(rng)));
        }
    }

    std::vector<Line> lines;
    for (int j = 1; j < n; ++j) {
        std::uniform_int_distribution<int> pd(0, j - 1);
        lines.push_back(Line{pd(rng), j, yd(rng)});
    }
    // A few chords; duplicates are skipped.
    std::uniform_int_distribution<int> extra(0, 2);
    const int chords = extra(rng);
    for (int c = 0; c < chords && n > 2; ++c) {
        std::uniform_int_distribution<int> bd(0, n - 1);
        const int a = bd(rng);
        const int b = bd(rng);
        if (a == b) continue;
        bool dup = false;
        for (const Line& l : lines)
            if ((l.from == a && l.to == b) || (l.from == b && l.to == a)) dup = true;
        if (!dup) lines.push_back(Line{a, b, yd(rng)});
    }
    return NetworkModel(std::move(buses), std::move(lines));
}

} // namespace gridfc::testing
