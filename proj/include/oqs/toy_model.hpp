// toy_model.hpp — two particles coupled through a velocity-dependent term,
// in the two Lagrangian descriptions L and L′ that differ by d(g x1 x2)/dt.

#pragma once

#include "oqs/generator.hpp"
#include "oqs/hilbert.hpp"

#include <optional>

namespace oqs::toy {

using hilbert::DensityMatrix;
using hilbert::OperatorSet;

struct ToyParams {
    double m1 = 1.0, m2 = 1.0, g = 0.1, hbar = 1.0;

    void validate() const;
    // g² t² / (m1 m2); second-order results are untrustworthy beyond 0.5
    double perturbative_parameter(double t) const { return g * g * t * t / (m1 * m2); }
    bool perturbative_advisory(double t) const { return perturbative_parameter(t) > 0.5; }
};

// Initial second moments of particle 2 (mean zero).
struct EnvStats {
    double var_p2 = 0.5; // ⟨p2²⟩
    double var_x2 = 0.5; // ⟨x2²⟩
    double sym_xp = 0.0; // ⟨{x2, p2}⟩

    static EnvStats ground_state(double hbar = 1.0) { return {hbar / 2.0, hbar / 2.0, 0.0}; }
    void validate(double hbar) const;
    // var_x var_p - (sym/2)² - hbar²/4 ≈ 0
    bool is_pure(double hbar) const;
};

struct InitialStateSpec {
    double mean_x = 0.0, mean_p = 0.0;
    double width = 1.0; // position standard deviation of each particle-1 Gaussian
    EnvStats env;
    // Build the L-description image of a product state prepared in the L′
    // description: psi(x1,x2) -> exp(+i g x1 x2/hbar) psi(x1,x2), i.e. rho -> T^† rho T.
    bool transformed = false;
    int phase_sign = +1; // -1 applies the opposite phase (not validated physically)
    std::optional<double> cat_separation;

    void validate(double hbar) const;
};

Matrix hamiltonian_L(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2);
Matrix hamiltonian_Lprime(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2);
// T = exp(-i g x1 ⊗ x2 / hbar)
Matrix unitary_T(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2);

// Second-order reduced generators for particle 1; t is the elapsed time since preparation.
quadratic::QuadraticGenerator generator_L(const ToyParams& params, const EnvStats& env, double t);
quadratic::QuadraticGenerator generator_Lprime(const ToyParams& params, const EnvStats& env, double t);

Matrix master_rhs_L(const Matrix& rho1, const OperatorSet& ops1, const ToyParams& params,
                    const EnvStats& env, double t);
Matrix master_rhs_Lprime(const Matrix& rho1, const OperatorSet& ops1, const ToyParams& params,
                         const EnvStats& env, double t);
inline Matrix master_rhs_L(const DensityMatrix& rho1, const OperatorSet& ops1, const ToyParams& params,
                           const EnvStats& env, double t) {
    return master_rhs_L(rho1.data(), ops1, params, env, t);
}
inline Matrix master_rhs_Lprime(const DensityMatrix& rho1, const OperatorSet& ops1,
                                const ToyParams& params, const EnvStats& env, double t) {
    return master_rhs_Lprime(rho1.data(), ops1, params, env, t);
}

// Rate multiplying (x - x')² in the position-diffusion term of L at time t.
double position_decoherence_coefficient(const ToyParams& params, const EnvStats& env, double t);
// Rate multiplying (p - p')² in the momentum-diffusion term of L′ at time t.
double momentum_decoherence_coefficient(const ToyParams& params, const EnvStats& env, double t);

struct Means {
    double x = 0.0, p = 0.0;
};

Means analytic_means_L(const ToyParams& params, double x0, double p0, double t);
Means analytic_means_Lprime(const ToyParams& params, double x0, double pprime0, double t);
Means analytic_means_L_transformed(const ToyParams& params, double x0, double p0, double t);

// Particle-1 wavefunction (Gaussian or cat) as a normalized vector on ops1's basis.
Vector particle1_state(const InitialStateSpec& spec, const OperatorSet& ops1);
// Mean-zero Gaussian state of particle 2 with the second moments of env.
Matrix environment_density(const EnvStats& env, const OperatorSet& ops2);
// The same state as a vector; requires env to be pure.
Vector environment_state(const EnvStats& env, const OperatorSet& ops2);

// Composite (or, without ops2, particle-1-only) initial state.
DensityMatrix build_initial_state(const InitialStateSpec& spec, const ToyParams& params,
                                  const OperatorSet& ops1, const OperatorSet* ops2);
// Pure composite state vector; throws InvalidParameter if env is mixed.
Vector build_initial_vector(const InitialStateSpec& spec, const ToyParams& params,
                            const OperatorSet& ops1, const OperatorSet& ops2);

} // namespace oqs::toy
