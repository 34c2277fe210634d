#include "gridfc/ofc.hpp"

#include <cmath>
#include <string>

#include "gridfc/errors.hpp"

namespace gridfc {

OfcProblem::OfcProblem(std::vector<OfcBus> buses) : buses_(std::move(buses)) {
    if (buses_.empty()) throw InputError("ofc: at least one bus is required");
    for (size_t j = 0; j < buses_.size(); ++j) {
        if (!(buses_[j].damping > 0.0))
            throw InputError("ofc: bus " + std::to_string(j) + " must have D > 0");
        total_damping_ += buses_[j].damping;
    }
}

double OfcProblem::balance_residual(double lambda) const {
    double sum = 0.0;
    for (const OfcBus& b : buses_) sum += b.law.feedback(lambda) + b.constant_injection;
    return sum - lambda * total_damping_;
}

OfcSolution OfcProblem::complete(double lambda) const {
    OfcSolution s;
    s.lambda_star = lambda;
    s.p_star.reserve(buses_.size());
    s.d_star.reserve(buses_.size());
    s.saturation.reserve(buses_.size());
    double objective = 0.0;
    for (const OfcBus& b : buses_) {
        const double p = b.law.feedback(lambda);
        Saturation sat = Saturation::Interior;
        if (!b.law.is_constant()) {
            const double unclipped = b.law.cost()->inverse_marginal(-lambda);
            if (unclipped < b.law.p_min())
                sat = Saturation::Lower;
            else if (unclipped > b.law.p_max())
                sat = Saturation::Upper;
            objective += b.law.cost()->cost(p);
        }
        const double d = b.damping * lambda;
        objective += d * d / (2.0 * b.damping);
        s.p_star.push_back(p);
        s.d_star.push_back(d);
        s.saturation.push_back(sat);
    }
    s.objective = objective;
    return s;
}

OfcSolution OfcProblem::solve(double bracket_lo, double bracket_hi) const {
    constexpr double kResidualTol = 1e-12;
    constexpr double kWidthTol = 1e-13;
    constexpr double kBracketCap = 1e6;
    if (!(bracket_lo < bracket_hi)) throw InputError("solve: empty initial bracket");

    double lo = bracket_lo, hi = bracket_hi;
    double flo = balance_residual(lo);
    double fhi = balance_residual(hi);
    // The residual is decreasing, so a root needs flo >= 0 >= fhi. Expand
    // geometrically towards the missing sign.
    double width = hi - lo;
    while (flo < 0.0 || fhi > 0.0) {
        if (std::abs(lo) >= kBracketCap || std::abs(hi) >= kBracketCap)
            throw NumericalError("OFC infeasible or unbounded: no sign change of the "
                                 "balance residual within |lambda| <= 1e6");
        width *= 2.0;
        if (flo < 0.0) {
            hi = lo;
            fhi = flo;
            lo = hi - width;
            flo = balance_residual(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi = lo + width;
            fhi = balance_residual(hi);
        }
    }

    double best = 0.5 * (lo + hi);
    double best_abs = std::abs(balance_residual(best));
    if (std::abs(flo) < best_abs) { best = lo; best_abs = std::abs(flo); }
    if (std::abs(fhi) < best_abs) { best = hi; best_abs = std::abs(fhi); }

    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double f = balance_residual(mid);
        if (std::abs(f) < best_abs) {
            best = mid;
            best_abs = std::abs(f);
        }
        if (best_abs <= kResidualTol || hi - lo <= kWidthTol) break;
        if (f > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return complete(best);
}

OfcSolution OfcProblem::oracle_solve(double lo, double hi, double step) const {
    if (!(step > 0.0)) throw InputError("oracle_solve: step must be positive");
    if (!(lo < hi)) throw InputError("oracle_solve: empty bracket");

    double best = lo;
    double best_abs = std::abs(balance_residual(lo));
    const long n = static_cast<long>(std::floor((hi - lo) / step));
    for (long i = 1; i <= n; ++i) {
        const double x = lo + static_cast<double>(i) * step;
        const double f = std::abs(balance_residual(x));
        if (f < best_abs) {
            best = x;
            best_abs = f;
        }
    }

    // Golden-section refinement of |residual| over the bracketing cells.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::max(lo, best - step);
    double b = std::min(hi, best + step);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = std::abs(balance_residual(c));
    double fd = std::abs(balance_residual(d));
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = std::abs(balance_residual(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = std::abs(balance_residual(d));
        }
    }
    const double refined = 0.5 * (a + b);
    if (std::abs(balance_residual(refined)) < best_abs) best = refined;
    return complete(best);
}

KktReport OfcProblem::kkt_check(std::span<const double> p, std::span<const double> d,
                                double lambda, double tol) const {
    const size_t n = buses_.size();
    if (p.size() != n || d.size() != n)
        throw InputError("kkt_check: dimension mismatch");

    KktReport rep;
    rep.mu_plus.assign(n, 0.0);
    rep.mu_minus.assign(n, 0.0);

    auto record = [tol](KktCondition& c, double violation) {
        c.worst = std::max(c.worst, violation);
        if (violation > tol) c.pass = false;
    };

    double balance = 0.0;
    for (size_t j = 0; j < n; ++j) {
        const OfcBus& b = buses_[j];
        balance += p[j] + b.constant_injection - d[j];
        record(rep.stationarity_d, std::abs(d[j] - lambda * b.damping));

        if (b.law.is_constant()) {
            record(rep.boxes, std::abs(p[j] - b.law.p_min()));
            continue;
        }
        const double lo = b.law.p_min();
        const double hi = b.law.p_max();
        record(rep.boxes, std::max(lo - p[j], p[j] - hi));

        const double grad = -b.law.cost()->marginal(p[j]) - lambda; // mu+ - mu-
        rep.mu_plus[j] = std::max(grad, 0.0);
        rep.mu_minus[j] = std::max(-grad, 0.0);
        record(rep.dual_feasibility, std::max(-rep.mu_plus[j], -rep.mu_minus[j]));
        record(rep.complementary_slackness, std::abs(rep.mu_plus[j] * (p[j] - hi)));
        record(rep.complementary_slackness, std::abs(rep.mu_minus[j] * (lo - p[j])));
        // Strictly interior points admit no active multiplier, so the bare
        // gradient must vanish there.
        if (p[j] > lo + tol && p[j] < hi - tol)
            record(rep.stationarity_p, std::abs(grad));
    }
    record(rep.balance, std::abs(balance));
    return rep;
}

double OfcProblem::objective(std::span<const double> p, std::span<const double> d) const {
    const size_t n = buses_.size();
    if (p.size() != n || d.size() != n)
        throw InputError("objective: dimension mismatch");
    double obj = 0.0;
    for (size_t j = 0; j < n; ++j) {
        const OfcBus& b = buses_[j];
        if (!b.law.is_constant()) obj += b.law.cost()->cost(p[j]);
        obj += d[j] * d[j] / (2.0 * b.damping);
    }
    return obj;
}

} // namespace gridfc
