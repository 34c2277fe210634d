#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "gridfc/control.hpp"
#include "gridfc/errors.hpp"
#include "helpers.hpp"

using namespace gridfc;
using namespace gridfc::testing;

namespace {

ControlLaw droop_law() {
    return ControlLaw(std::make_shared<QuadraticCost>(0.04, 1.0), 0.9, 1.1);
}

} // namespace

TEST_CASE("clip") {
    CHECK(clip(0.5, 0.0, 1.0) == 0.5);
    CHECK(clip(2.0, 0.0, 1.0) == 1.0);
    CHECK(clip(-2.0, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS((void)clip(0.0, 1.0, 0.0), InputError);
}

TEST_CASE("quadratic feedback hits the setpoint at zero deviation") {
    CHECK(droop_law().feedback(0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("quadratic feedback saturates at the box") {
    // Unclipped value 1 - 25 * 0.01 = 0.75 fell below the lower bound.
    CHECK(droop_law().feedback(0.01) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("quadratic feedback moves 1/R per rad/s inside the box") {
    CHECK(droop_law().feedback(-0.002) == doctest::Approx(1.05).epsilon(1e-12));
}

TEST_CASE("feedback rejects non-finite frequency") {
    CHECK_THROWS_AS((void)droop_law().feedback(std::nan("")), InputError);
}

TEST_CASE("lipschitz constant of an active quadratic law is 1/R") {
    CHECK(droop_law().lipschitz_constant(0.0, 0.001) == doctest::Approx(25.0));
}

TEST_CASE("lipschitz constant vanishes under deep saturation") {
    // At omega* = 0.02 the unclipped command stays below the box over the
    // whole neighborhood.
    CHECK(droop_law().lipschitz_constant(0.02, 0.0005) == 0.0);
}

TEST_CASE("constant law has zero lipschitz constant") {
    CHECK(ControlLaw::constant(1.0).lipschitz_constant(0.0, 0.01) == 0.0);
}

TEST_CASE("lipschitz constant requires positive delta") {
    CHECK_THROWS_AS((void)droop_law().lipschitz_constant(0.0, 0.0), InputError);
}

TEST_CASE("sampled lipschitz bound covers non-quadratic costs") {
    const ControlLaw law(std::make_shared<CubicMarginalCost>(1.0, 0.0), -2.0, 2.0);
    const double l = law.lipschitz_constant(-0.5, 0.01);
    // d/dy of cbrt at y = 0.5 is 1/(3 * 0.5^(2/3)).
    const double expected = 1.0 / (3.0 * std::pow(0.5, 2.0 / 3.0));
    CHECK(l >= expected);
    CHECK(l <= 1.1 * expected);
}

TEST_CASE("feedback is monotone non-increasing and box-contained") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> rd(0.05, 2.0);
    std::uniform_real_distribution<double> sd(-2.0, 2.0);
    std::uniform_real_distribution<double> wd(-1.0, 1.0);
    std::uniform_real_distribution<double> bd(0.0, 1.5);
    for (int rep = 0; rep < 500; ++rep) {
        const double set = sd(rng);
        const double lo = set - bd(rng);
        const double hi = set + bd(rng);
        std::shared_ptr<const CostFunction> cost;
        if (rep % 2 == 0)
            cost = std::make_shared<QuadraticCost>(rd(rng), set);
        else
            cost = std::make_shared<CubicMarginalCost>(rd(rng), set);
        const ControlLaw law(cost, lo, hi);
        double w1 = wd(rng), w2 = wd(rng);
        if (w1 > w2) std::swap(w1, w2);
        const double f1 = law.feedback(w1);
        const double f2 = law.feedback(w2);
        CHECK(f1 >= f2);
        CHECK(f1 >= lo);
        CHECK(f1 <= hi);
        CHECK(f2 >= lo);
        CHECK(f2 <= hi);
    }
}

TEST_CASE("interior outputs invert the marginal cost") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> rd(0.05, 2.0);
    std::uniform_real_distribution<double> wd(-0.5, 0.5);
    for (int rep = 0; rep < 200; ++rep) {
        const auto cost = std::make_shared<QuadraticCost>(rd(rng), 0.0);
        const ControlLaw law(cost, -100.0, 100.0);
        const double w = wd(rng);
        const double p = law.feedback(w);
        CHECK(std::abs(cost->marginal(p) + w) <= 1e-9);
    }
}

TEST_CASE("lipschitz bound is sound on random neighborhoods") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> rd(0.05, 2.0);
    std::uniform_real_distribution<double> sd(-1.0, 1.0);
    std::uniform_real_distribution<double> wd(-0.2, 0.2);
    std::uniform_real_distribution<double> deltad(1e-3, 0.05);
    for (int law_rep = 0; law_rep < 100; ++law_rep) {
        const double set = sd(rng);
        std::shared_ptr<const CostFunction> cost;
        const double delta = deltad(rng);
        double w_star = wd(rng);
        if (law_rep % 2 == 0) {
            cost = std::make_shared<QuadraticCost>(rd(rng), set);
        } else {
            cost = std::make_shared<CubicMarginalCost>(rd(rng), set);
            // The cubic marginal has unbounded inverse slope at omega = 0;
            // the sampled estimator is only claimed away from that point.
            w_star = (w_star < 0.0 ? -1.0 : 1.0) * (std::abs(w_star) + delta + 0.01);
        }
        const ControlLaw law(cost, set - 0.3, set + 0.3);
        const double l = law.lipschitz_constant(w_star, delta);
        std::uniform_real_distribution<double> nd(w_star - delta, w_star + delta);
        for (int rep = 0; rep < 100; ++rep) {
            const double wa = nd(rng);
            const double wb = nd(rng);
            CHECK(std::abs(law.feedback(wa) - law.feedback(wb)) <=
                  l * std::abs(wa - wb) + 1e-12);
        }
    }
}

TEST_CASE("law construction errors") {
    CHECK_THROWS_AS(ControlLaw(std::make_shared<QuadraticCost>(1.0, 0.0), 1.0, -1.0),
                    InputError);
    CHECK_THROWS_AS(ControlLaw(nullptr, -1.0, 1.0), InputError);
    CHECK_THROWS_AS(QuadraticCost(0.0, 0.0), InputError);
    CHECK_THROWS_AS(QuadraticCost(-1.0, 0.0), InputError);
}
