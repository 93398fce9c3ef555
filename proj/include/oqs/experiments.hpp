// experiments.hpp — numerical experiments shared by the acceptance checks and the scenario runner

#pragma once

#include "oqs/brem.hpp"
#include "oqs/generator.hpp"
#include "oqs/toy_model.hpp"

#include <string>
#include <vector>

namespace oqs::experiments {

using toy::InitialStateSpec;
using toy::ToyParams;

enum class Representation { L, Lprime };

std::string to_string(Representation r);

quadratic::QuadraticGenerator toy_generator(Representation rep, const ToyParams& params,
                                            const toy::EnvStats& env, double t);

// Uniform position grid: dim points on [-extent, extent).
struct GridSpec {
    int dim = 64;
    double extent = 16.0;

    hilbert::SpaceSpec space(double mass, double hbar) const;
};

// Raw particle-1 moments of a Gaussian initial state (no cat, not transformed).
quadratic::PhaseMoments initial_particle_moments(const InitialStateSpec& spec, double hbar);

struct MomentSample {
    double t = 0.0;
    quadratic::PhaseMoments m;
};

// Exact moment flow of a reduced toy master equation, integrated with RK4.
// Samples every `sample_every` steps plus the final step.
std::vector<MomentSample> integrate_moments(Representation rep, const ToyParams& params,
                                            const InitialStateSpec& spec, double t_end, double h,
                                            int sample_every = 1);

// Trace distance at time t between the exact reduced state (block-diagonal
// dense propagation of the composite) and the RK4-integrated master equation,
// for both representations started from the same factorized state.
struct OrderProbe {
    double g = 0.0;
    double td_L = 0.0, td_Lprime = 0.0;
};
OrderProbe master_vs_exact(const ToyParams& params, const InitialStateSpec& spec, const GridSpec& grid1,
                           const GridSpec& grid2, double t, double h);

// ⟨x1⟩ under H from the transformed initial state: dense exact, Gaussian
// exact, and the second-order L′ mean; envelope bounds their difference.
struct EquivalenceSample {
    double t = 0.0;
    double dense_x = 0.0, gaussian_x = 0.0, lprime_x = 0.0;
    double envelope = 0.0; // |p0| w⁴ t⁵ / (120 m1), w² = g²/(m1 m2)
};
std::vector<EquivalenceSample> transformed_equivalence(const ToyParams& params, double x0, double p0,
                                                       const toy::EnvStats& env, const std::vector<double>& times, const GridSpec& grid1,
                                                       const GridSpec& grid2);

// Coherence between the lattice points nearest to ±1 (position x or momentum ħk)
// of particle 1 under one representation's master equation on a grid.
enum class Basis { position, momentum };
std::string to_string(Basis b);
// Basis in which a representation's master equation decoheres (position for L, momentum for L′).
Basis decohering_basis(Representation rep);

struct RateSample {
    double t = 0.0;
    double measured = 0.0;          // -Re[((G - G_H) rho)(a,b) / rho(a,b)]
    double predicted = 0.0;         // decoherence coefficient(t) × separation²
    double finite_difference = 0.0; // -d/dt ln|rho(a,b)/rho_H(a,b)| (information only)
};
struct CoherenceRun {
    Representation rep = Representation::L;
    Basis basis = Basis::position;
    double a = 0.0, b = 0.0; // lattice points used
    std::vector<double> times, coherence, coherence_free; // |rho(a,b)| with g and with g = 0
    double max_rel_change = 0.0; // max |coherence / coherence_free - 1| over all steps
    // filled only when basis == decohering_basis(rep)
    std::vector<RateSample> rates;
    double max_rate_rel = 0.0; // max |measured / predicted - 1|
    double half_life = 0.0;    // from the rate law scaled to the measured rates
};
// sample_times must be positive multiples of the step not beyond t_end.
CoherenceRun coherence_run(Representation rep, Basis basis, const ToyParams& params, const InitialStateSpec& spec,
                           const GridSpec& grid, double t_end, double h, const std::vector<double>& sample_times);

// Cat-state coherence ρ(Δx/2, -Δx/2) under the vacuum-field generator:
// slope of ln|ρ/ρ_ref| (ρ_ref from an alpha = 0 run) over [0, window];
// window <= 0 selects min(0.1/Λ, 0.1/Ω).
struct CatDecay {
    double delta_x = 0.0;
    double predicted = 0.0;     // (alpha Omega³ / 3c²) Δx²
    double measured = 0.0;      // fitted decay rate
    double instantaneous = 0.0; // -Re[((G - G_H) rho0)(a,-a) / rho0(a,-a)], friction included
    double window = 0.0;
    std::vector<double> times, log_ratio; // ln|rho(a,-a) / rho_ref(a,-a)|
    double rel_error() const { return measured / predicted - 1.0; }
};
CatDecay cat_coherence_decay(const kernels::KernelParams& kp, const brem::BremFlags& flags, double delta_x,
                             int fock_dim, double h, double window = 0.0);

} // namespace oqs::experiments
