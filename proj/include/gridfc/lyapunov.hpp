#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gridfc/control.hpp"
#include "gridfc/dynamics.hpp"
#include "gridfc/network.hpp"

namespace gridfc {

/// Diagonal quadratic-form choice P = diag(P11, P22) for one generator's
/// governor/turbine loop, together with the decay coefficients it
/// certifies: along the loop dynamics with a command slope bound L,
///   d/dt [ (1/2) y~' P y~ ]  <=  -alpha p~^2 + beta w~^2 - gamma (a~ + eta p~)^2.
/// The transformed coordinates (xi, sigma, z) sit at the point that
/// maximizes the admissible damping margin, which requires L < D.
struct PChoice {
    double p11 = 0.0;
    double p22 = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double eta = 0.0;
    double xi = 0.0;
    double sigma = 0.0;
    double z = 0.0;
};

/// Builds the diagonal P for one generator. Returns nullopt when L >= D
/// (the sufficient condition fails; nothing can be concluded). L = 0
/// uses the fixed base P = diag(tau_g, 2 tau_b) with beta = 0, scaled up
/// when needed so that 4 alpha D > 1. Throws InputError for non-positive
/// tau_g, tau_b, D or negative L.
std::optional<PChoice> construct_p(double tau_g, double tau_b, double damping,
                                   double lipschitz);

enum class Verdict { Certified, Inconclusive };

struct GeneratorCertificate {
    int bus = 0;
    double lipschitz = 0.0;
    double damping = 0.0;
    double tau_g = 0.0;
    double tau_b = 0.0;
    std::optional<PChoice> p; ///< absent when L >= D
};

struct LineSecurity {
    int line = 0;
    double theta_diff = 0.0; ///< equilibrium angle difference across the line
    bool secure = false;     ///< -pi/2 < theta_diff < pi/2
};

/// Sufficient-condition stability certificate for one closed-loop
/// equilibrium. Certified requires every generator to admit a valid P
/// (L_j < D_j) and every line to be secure; anything else is
/// Inconclusive -- never "unstable", the test is one-sided.
struct StabilityCertificate {
    Verdict verdict = Verdict::Inconclusive;
    double omega_star = 0.0;
    double delta = 0.0; ///< Lipschitz neighborhood radius used, rad/s
    std::vector<GeneratorCertificate> generators;
    std::vector<LineSecurity> lines;

    [[nodiscard]] bool all_p_valid() const {
        for (const auto& g : generators)
            if (!g.p) return false;
        return true;
    }
};

/// Open-loop energy relative to the equilibrium eq:
///   1/2 sum_G M_j (w_j - w*)^2
///   + sum_lines Y_ij [cos th*_ij - cos th_ij - sin th*_ij (th_ij - th*_ij)],
/// the closed form of the line potential integral. Zero exactly at eq and
/// locally positive definite when the equilibrium is secure.
double energy_v0(const NetworkModel& model, const SystemState& state,
                 const SystemState& eq);

/// V0 plus the generator loop terms 1/2 (a - a*, p - p*) P (a - a*, p - p*)'.
/// Requires a P choice for every generator.
double energy_total(const NetworkModel& model, const SystemState& state,
                    const SystemState& eq, const StabilityCertificate& cert);

/// Evaluates the sufficient stability condition at the equilibrium
/// eq_state: per-generator Lipschitz constants within |w - w*| <= delta,
/// the diagonal P construction, and the per-line security check.
StabilityCertificate certify(const NetworkModel& model, std::span<const ControlLaw> laws,
                             const SystemState& eq_state, double delta);

} // namespace gridfc
