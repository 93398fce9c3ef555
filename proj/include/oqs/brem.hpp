// brem.hpp — reduced dynamics of a harmonically trapped charge losing
// energy to the vacuum radiation field (Caldeira–Leggett-like generator)

#pragma once

#include "oqs/generator.hpp"
#include "oqs/hilbert.hpp"
#include "oqs/kernels.hpp"

namespace oqs::brem {

using kernels::KernelParams;

struct BremFlags {
    bool include_xp_term = false;       // keep the -C [x,[p,rho]] line
    bool include_dressing_term = false; // keep the 1/(3 pi eps²) part of C (requires the xp line)
    bool regularize_log = false;        // use eps = hbar/(m c²) inside the logarithm

    void validate() const;
};

// Raw second moments with zero means: ⟨x²⟩, ⟨p²⟩, ⟨{x,p}⟩.
struct BremMoments {
    double xx = 0.0, pp = 0.0, xp = 0.0;

    // xx pp - (xp/2)² - (hbar/2)²; negative means the uncertainty relation is violated
    double uncertainty_margin(double hbar) const { return xx * pp - 0.25 * xp * xp - 0.25 * hbar * hbar; }
};

// Omega sqrt(1 - 4 alpha hbar omega_max / (3 pi m c²))
double renormalized_frequency(const KernelParams& kp, double omega_max);

// Coefficient C of the -C [x,[p,rho]] term (zero unless include_xp_term).
double xp_coefficient(const KernelParams& kp, const BremFlags& flags);

// Full generator as a term list (harmonic H, friction, position diffusion, optional xp line).
quadratic::QuadraticGenerator brem_generator(const KernelParams& kp, const BremFlags& flags);
// Only the position-diffusion dissipator (plus H); used for the purity monotonicity property.
quadratic::QuadraticGenerator decoherence_only_generator(const KernelParams& kp);

// rho must live on a fock space with omega_ref = Omega and matching m, hbar.
Matrix brem_master_rhs(const Matrix& rho, const hilbert::OperatorSet& ops, const KernelParams& kp,
                       const BremFlags& flags);

BremMoments moment_rhs(const BremMoments& mom, const KernelParams& kp, const BremFlags& flags);
BremMoments stationary_variances(const KernelParams& kp, const BremFlags& flags);

// (alpha Omega³ / (3 c²)) delta_x²
double decoherence_rate(double delta_x, const KernelParams& kp);

// Reads the Caldeira–Leggett coefficients off a generator's tagged terms:
// -(i eta/2m)[x,{p,rho}] - (Lambda/hbar)[x,[x,rho]]. Throws InvalidOperator
// if the generator has any other dissipator structure.
struct CaldeiraLeggettCoefficients {
    double eta_over_2m = 0.0;
    double lambda_over_hbar = 0.0;
};
CaldeiraLeggettCoefficients caldeira_leggett_form(const quadratic::QuadraticGenerator& gen);

// Even cat (|beta> + |-beta>) with lobes at ±delta_x/2, on a fock basis.
Vector cat_state(double delta_x, const hilbert::OperatorSet& fock_ops);
// Position-representation element rho(x, x') of a fock-basis density matrix.
cplx position_element(const Matrix& rho, const hilbert::OperatorSet& fock_ops, double x, double xprime);

} // namespace oqs::brem
