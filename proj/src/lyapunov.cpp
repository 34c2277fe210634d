#include "gridfc/lyapunov.hpp"

#include <cmath>
#include <string>

#include "gridfc/errors.hpp"

namespace gridfc {

namespace {

// Decay coefficients implied by (P11, P22, gamma) for one generator loop.
// Derived by completing squares in
//   V' = -(P11/tau_g) a~^2 - (P22/tau_b) p~^2 + (P22/tau_b) a~ p~
//        + (P11/tau_g) a~ p~^c
// which yields, for any gamma in (P22/(4 tau_b), P11/tau_g),
//   V' = -alpha p~^2 + beta/L^2 (p~^c)^2 - gamma (a~ + eta p~)^2
//        - (P11/tau_g - gamma) (a~ - P11 p~^c / (2(P11 - gamma tau_g)))^2.
PChoice fill_coefficients(double tau_g, double tau_b, double lipschitz, double p11,
                          double p22, double gamma) {
    PChoice c;
    c.p11 = p11;
    c.p22 = p22;
    c.gamma = gamma;
    c.alpha = p22 / tau_b - p22 * p22 / (4.0 * gamma * tau_b * tau_b);
    c.beta = p11 * p11 * lipschitz * lipschitz / (4.0 * tau_g * (p11 - gamma * tau_g));
    c.eta = -p22 / (2.0 * gamma * tau_b);
    c.xi = p22 / (4.0 * tau_b);
    c.sigma = c.xi / gamma;
    c.z = tau_g * gamma / p11;
    return c;
}

bool lemma_conditions_hold(const PChoice& c, double damping) {
    return c.p11 > 0.0 && c.p22 > 0.0 && c.alpha > 0.0 && c.gamma > 0.0 &&
           c.beta < damping && 4.0 * c.alpha * (damping - c.beta) > 1.0 &&
           c.xi > 0.0 && c.sigma > 0.0 && c.sigma < 1.0 && c.z > 0.0 && c.z < 1.0;
}

} // namespace

std::optional<PChoice> construct_p(double tau_g, double tau_b, double damping,
                                   double lipschitz) {
    if (!(tau_g > 0.0) || !(tau_b > 0.0) || !(damping > 0.0))
        throw InputError("construct_p: tau_g, tau_b and D must be positive");
    if (lipschitz < 0.0) throw InputError("construct_p: L must be non-negative");

    if (lipschitz >= damping) return std::nullopt;

    PChoice c;
    if (lipschitz == 0.0) {
        // A constant command decouples the loop from frequency. Any valid
        // diagonal P works; take diag(tau_g, 2 tau_b) with gamma at the
        // midpoint of its admissible range, scaled so 4 alpha D > 1.
        double p11 = tau_g, p22 = 2.0 * tau_b;
        double gamma = 0.5 * (p22 / (4.0 * tau_b) + p11 / tau_g); // = 3/4
        c = fill_coefficients(tau_g, tau_b, 0.0, p11, p22, gamma);
        if (4.0 * c.alpha * damping <= 1.0) {
            const double scale = 1.0 / (2.0 * c.alpha * damping);
            c = fill_coefficients(tau_g, tau_b, 0.0, scale * p11, scale * p22,
                                  scale * gamma);
        }
    } else {
        // The margin-maximizing point: sigma = z = 1/2, xi = D/(4 L^2).
        // There 4 alpha (D - beta) = D^2 / L^2, the best this family
        // attains, so L < D suffices.
        const double l2 = lipschitz * lipschitz;
        const double xi = damping / (4.0 * l2);
        const double gamma = 2.0 * xi;           // xi / sigma
        const double p22 = 4.0 * tau_b * xi;     // tau_b D / L^2
        const double p11 = 2.0 * tau_g * gamma;  // tau_g gamma / z
        c = fill_coefficients(tau_g, tau_b, lipschitz, p11, p22, gamma);
    }

    if (!lemma_conditions_hold(c, damping) || !(c.gamma > c.p22 / (4.0 * tau_b)) ||
        !(c.gamma < c.p11 / tau_g))
        return std::nullopt;
    return c;
}

double energy_v0(const NetworkModel& model, const SystemState& state,
                 const SystemState& eq) {
    const size_t n = static_cast<size_t>(model.n_buses());
    if (state.theta.size() != n || state.omega.size() != n || eq.theta.size() != n ||
        eq.omega.size() != n)
        throw InputError("energy_v0: state dimensions do not match the model");

    double v = 0.0;
    for (int j = 0; j < model.n_generators(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        const double dw = state.omega[sj] - eq.omega[sj];
        v += 0.5 * model.bus(j).inertia * dw * dw;
    }
    for (const Line& l : model.lines()) {
        const double th = state.theta[static_cast<size_t>(l.from)] -
                          state.theta[static_cast<size_t>(l.to)];
        const double th_star = eq.theta[static_cast<size_t>(l.from)] -
                               eq.theta[static_cast<size_t>(l.to)];
        v += l.y_max *
             (std::cos(th_star) - std::cos(th) - std::sin(th_star) * (th - th_star));
    }
    return v;
}

double energy_total(const NetworkModel& model, const SystemState& state,
                    const SystemState& eq, const StabilityCertificate& cert) {
    if (static_cast<int>(cert.generators.size()) != model.n_generators())
        throw InputError("energy_total: certificate does not match the model");
    double v = energy_v0(model, state, eq);
    for (int j = 0; j < model.n_generators(); ++j) {
        const size_t sj = static_cast<size_t>(j);
        const auto& p = cert.generators[sj].p;
        if (!p)
            throw InputError("energy_total: no P choice for generator " + std::to_string(j));
        const double da = state.valve[sj] - eq.valve[sj];
        const double dp = state.p_mech[sj] - eq.p_mech[sj];
        v += 0.5 * (p->p11 * da * da + p->p22 * dp * dp);
    }
    return v;
}

StabilityCertificate certify(const NetworkModel& model, std::span<const ControlLaw> laws,
                             const SystemState& eq_state, double delta) {
    if (static_cast<int>(laws.size()) != model.n_buses())
        throw InputError("certify: one control law per bus required");
    if (!(delta > 0.0)) throw InputError("certify: delta must be positive");

    StabilityCertificate cert;
    cert.delta = delta;
    double mean = 0.0;
    for (double w : eq_state.omega) mean += w;
    cert.omega_star = mean / static_cast<double>(eq_state.omega.size());

    bool ok = true;
    for (int j = 0; j < model.n_generators(); ++j) {
        const Bus& b = model.bus(j);
        GeneratorCertificate g;
        g.bus = j;
        g.damping = b.damping;
        g.tau_g = b.tau_g;
        g.tau_b = b.tau_b;
        g.lipschitz =
            laws[static_cast<size_t>(j)].lipschitz_constant(cert.omega_star, delta);
        g.p = construct_p(b.tau_g, b.tau_b, b.damping, g.lipschitz);
        if (!g.p) ok = false;
        cert.generators.push_back(std::move(g));
    }

    constexpr double kHalfPi = std::numbers::pi / 2.0;
    for (int l = 0; l < model.n_lines(); ++l) {
        const Line& line = model.line(l);
        LineSecurity s;
        s.line = l;
        s.theta_diff = eq_state.theta[static_cast<size_t>(line.from)] -
                       eq_state.theta[static_cast<size_t>(line.to)];
        s.secure = s.theta_diff > -kHalfPi && s.theta_diff < kHalfPi;
        if (!s.secure) ok = false;
        cert.lines.push_back(s);
    }

    cert.verdict = ok ? Verdict::Certified : Verdict::Inconclusive;
    return cert;
}

} // namespace gridfc
