#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "gridfc/errors.hpp"
#include "gridfc/ofc.hpp"
#include "helpers.hpp"

using namespace gridfc;
using namespace gridfc::testing;

namespace {

// Two unit-cost controllable buses plus one constant bus injecting 1 pu.
OfcProblem three_bus_problem(double box = 10.0) {
    std::vector<OfcBus> buses;
    buses.push_back(OfcBus{
        ControlLaw(std::make_shared<QuadraticCost>(1.0, 0.0), -box, box), 1.0, 0.0});
    buses.push_back(OfcBus{
        ControlLaw(std::make_shared<QuadraticCost>(1.0, 0.0), -box, box), 1.0, 0.0});
    buses.push_back(OfcBus{ControlLaw::constant(1.0), 1.0, 0.0});
    return OfcProblem(std::move(buses));
}

struct RandomProblem {
    OfcProblem problem;
    double imbalance;
};

OfcProblem random_problem(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> nd(2, 20);
    std::uniform_real_distribution<double> rd(0.02, 2.0);
    std::uniform_real_distribution<double> sd(-2.0, 2.0);
    std::uniform_real_distribution<double> bd(0.0, 1.5);
    std::uniform_real_distribution<double> dd(0.5, 2.0);
    std::uniform_real_distribution<double> imb(-1.5, 1.5);
    std::bernoulli_distribution constant(0.3);

    const int n = nd(rng);
    std::vector<double> setpoints(static_cast<size_t>(n));
    double mean = 0.0;
    for (double& s : setpoints) {
        s = sd(rng);
        mean += s;
    }
    mean /= n;
    for (double& s : setpoints) s -= mean; // balanced baseline

    std::vector<OfcBus> buses;
    bool has_constant = false;
    for (int j = 0; j < n; ++j) {
        const double set = setpoints[static_cast<size_t>(j)];
        if (j > 0 && constant(rng)) {
            buses.push_back(OfcBus{ControlLaw::constant(set), dd(rng), 0.0});
            has_constant = true;
        } else {
            buses.push_back(
                OfcBus{ControlLaw(std::make_shared<QuadraticCost>(rd(rng), set),
                                  set - bd(rng), set + bd(rng)),
                       dd(rng), 0.0});
        }
    }
    if (!has_constant)
        buses.push_back(OfcBus{ControlLaw::constant(0.0), dd(rng), 0.0});
    // A nonzero imbalance through one constant offset.
    buses.back().constant_injection += imb(rng);
    return OfcProblem(std::move(buses));
}

} // namespace

TEST_CASE("balance residual of the three-bus problem") {
    const OfcProblem p = three_bus_problem();
    CHECK(p.balance_residual(0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(p.balance_residual(0.2)) <= 1e-12);
}

TEST_CASE("balanced constants give zero residual at lambda 0") {
    std::vector<OfcBus> buses;
    buses.push_back(OfcBus{ControlLaw::constant(0.7), 1.0, 0.0});
    buses.push_back(OfcBus{ControlLaw::constant(-0.7), 2.0, 0.0});
    const OfcProblem p(std::move(buses));
    CHECK(p.balance_residual(0.0) == 0.0);
    const OfcSolution s = p.solve();
    CHECK(std::abs(s.lambda_star) <= 1e-12);
    CHECK(std::abs(s.d_star[0]) <= 1e-12);
    CHECK(s.p_star[0] == 0.7);
    CHECK(s.p_star[1] == -0.7);
}

TEST_CASE("solve finds the interior optimum of the three-bus problem") {
    const OfcSolution s = three_bus_problem().solve();
    CHECK(s.lambda_star == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(s.p_star[0] == doctest::Approx(-0.2).epsilon(1e-10));
    CHECK(s.p_star[1] == doctest::Approx(-0.2).epsilon(1e-10));
    CHECK(s.p_star[2] == 1.0);
    for (double d : s.d_star) CHECK(d == doctest::Approx(0.2).epsilon(1e-10));
    CHECK(s.saturation[0] == Saturation::Interior);
    CHECK(s.saturation[1] == Saturation::Interior);
}

TEST_CASE("solve handles saturated boxes") {
    const OfcSolution s = three_bus_problem(0.1).solve();
    CHECK(s.lambda_star == doctest::Approx(0.8 / 3.0).epsilon(1e-10));
    CHECK(s.p_star[0] == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(s.p_star[1] == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(s.saturation[0] == Saturation::Lower);
    CHECK(s.saturation[1] == Saturation::Lower);
    for (double d : s.d_star) CHECK(d == doctest::Approx(0.8 / 3.0).epsilon(1e-10));
}

TEST_CASE("solve reports an error when no root can be bracketed") {
    // One constant bus with vanishing damping pushes the root past the cap.
    std::vector<OfcBus> buses;
    buses.push_back(OfcBus{ControlLaw::constant(10.0), 1e-9, 0.0});
    CHECK_THROWS_AS((void)OfcProblem(std::move(buses)).solve(), NumericalError);
}

TEST_CASE("kkt_check accepts solver output and rejects perturbations") {
    const OfcProblem p = three_bus_problem();
    const OfcSolution s = p.solve();

    const KktReport ok = p.kkt_check(s.p_star, s.d_star, s.lambda_star, 1e-9);
    CHECK(ok.all_pass());

    std::vector<double> bad_p = s.p_star;
    bad_p[0] += 0.01;
    const KktReport bad = p.kkt_check(bad_p, s.d_star, s.lambda_star, 1e-9);
    CHECK_FALSE(bad.balance.pass);
    CHECK_FALSE(bad.stationarity_p.pass);

    const std::vector<double> zero_d(3, 0.0);
    const KktReport bad_d = p.kkt_check(s.p_star, zero_d, 0.2, 1e-9);
    CHECK_FALSE(bad_d.stationarity_d.pass);
}

TEST_CASE("oracle agrees with the hand-computed roots") {
    const OfcSolution a = three_bus_problem().oracle_solve(-10.0, 10.0, 1e-4);
    CHECK(a.lambda_star == doctest::Approx(0.2).epsilon(1e-4));
    const OfcSolution b = three_bus_problem(0.1).oracle_solve(-10.0, 10.0, 1e-4);
    CHECK(b.lambda_star == doctest::Approx(0.8 / 3.0).epsilon(1e-4));

    std::vector<OfcBus> buses;
    buses.push_back(OfcBus{ControlLaw::constant(0.4), 1.0, 0.0});
    buses.push_back(OfcBus{ControlLaw::constant(-0.4), 1.0, 0.0});
    const OfcSolution c = OfcProblem(std::move(buses)).oracle_solve(-1.0, 1.0, 1e-3);
    CHECK(std::abs(c.lambda_star) <= 1e-3);
}

TEST_CASE("oracle input validation") {
    CHECK_THROWS_AS((void)three_bus_problem().oracle_solve(1.0, -1.0, 1e-3), InputError);
    CHECK_THROWS_AS((void)three_bus_problem().oracle_solve(-1.0, 1.0, 0.0), InputError);
}

TEST_CASE("balance residual is monotone decreasing") {
    std::mt19937_64 rng(5150);
    std::uniform_real_distribution<double> ld(-3.0, 3.0);
    for (int rep = 0; rep < 200; ++rep) {
        const OfcProblem p = random_problem(rng);
        double l1 = ld(rng), l2 = ld(rng);
        if (l1 > l2) std::swap(l1, l2);
        if (l1 == l2) continue;
        // Strict decrease everywhere: every bus carries positive damping.
        CHECK(p.balance_residual(l1) > p.balance_residual(l2));
    }
}

TEST_CASE("two different brackets give the same root") {
    std::mt19937_64 rng(31337);
    for (int rep = 0; rep < 50; ++rep) {
        const OfcProblem p = random_problem(rng);
        const double l1 = p.oracle_solve(-5.0, 5.0, 1e-3).lambda_star;
        const double l2 = p.oracle_solve(-4.1, 6.3, 1e-3).lambda_star;
        CHECK(std::abs(l1 - l2) <= 2e-3);
        // And the bisection root lies between both oracle estimates' error bands.
        const double ls = p.solve().lambda_star;
        CHECK(std::abs(ls - l1) <= 1e-2);
    }
}

TEST_CASE("bisection root is insensitive to the initial bracket") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 50; ++rep) {
        const OfcProblem p = random_problem(rng);
        const double l1 = p.solve().lambda_star;
        const double l2 = p.solve(-0.37, 2.11).lambda_star;
        const double l3 = p.solve(-7.3, 8.9).lambda_star;
        CHECK(std::abs(l1 - l2) <= 1e-10);
        CHECK(std::abs(l1 - l3) <= 1e-10);
    }
}

TEST_CASE("solver objective undercuts random balanced feasible points") {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const OfcProblem p = random_problem(rng);
        const OfcSolution s = p.solve();
        const double opt = p.objective(s.p_star, s.d_star);

        double total_damping = 0.0;
        for (const OfcBus& b : p.buses()) total_damping += b.damping;

        for (int draw = 0; draw < 500; ++draw) {
            std::vector<double> cp, cd;
            double net = 0.0;
            for (const OfcBus& b : p.buses()) {
                const double pj = b.law.is_constant()
                                      ? b.law.p_min()
                                      : b.law.p_min() +
                                            ud(rng) * (b.law.p_max() - b.law.p_min());
                cp.push_back(pj);
                net += pj + b.constant_injection;
            }
            // Project onto the balance constraint with d_j proportional to D_j.
            const double scale = net / total_damping;
            for (const OfcBus& b : p.buses()) cd.push_back(b.damping * scale);
            CHECK(opt <= p.objective(cp, cd) + 1e-9);
        }
    }
}

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(OfcProblem({}), InputError);
    std::vector<OfcBus> buses;
    buses.push_back(OfcBus{ControlLaw::constant(0.0), 0.0, 0.0});
    CHECK_THROWS_AS(OfcProblem(std::move(buses)), InputError);
}
