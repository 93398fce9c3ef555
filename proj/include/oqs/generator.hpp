// generator.hpp — quadratic master-equation generators
//
// Every generator in this library has the shape
//
//   d rho/dt = -(i/hbar)[H, rho] + sum_k c_k [A_k, [B_k, rho]]      (double commutator)
//                                + sum_k c_k [A_k, {B_k, rho}]      (commutator-anticommutator)
//
// with H quadratic and A_k, B_k linear in (x, p). One term list drives both
// the matrix action on a truncated space and the exact, closed moment
// hierarchy (first and second moments), derived here through Weyl symbols:
// for polynomials of degree <= 2 the Moyal bracket reduces to the Poisson
// bracket, so no truncation enters the moment equations.

#pragma once

#include "oqs/hilbert.hpp"

#include <string>
#include <vector>

namespace oqs::quadratic {

struct LinearForm {
    double x = 0.0, p = 0.0; // x*x̂ + p*p̂
};

// Weyl symbol c + x·x + p·p + xx·x² + pp·p² + xp·(x p).
struct Symbol {
    double c = 0.0, x = 0.0, p = 0.0, xx = 0.0, pp = 0.0, xp = 0.0;

    Symbol operator+(const Symbol& o) const;
    Symbol operator*(double s) const;
};

Symbol symbol(const LinearForm& l);
// Poisson bracket {a, b}; exact because both symbols are at most quadratic
// and the result is required to be at most quadratic (throws otherwise).
Symbol poisson_bracket(const Symbol& a, const Symbol& b);
// Product of two at-most-linear symbols.
Symbol product(const Symbol& a, const Symbol& b);

enum class TermKind { double_commutator, commutator_anticommutator };

// Physical role of a dissipator term, used to identify coefficients
// structurally (e.g. against the Caldeira–Leggett form).
enum class TermRole { position_diffusion, momentum_diffusion, cross_diffusion, friction };

std::string to_string(TermRole r);

struct DissipatorTerm {
    TermKind kind = TermKind::double_commutator;
    TermRole role = TermRole::position_diffusion;
    cplx coeff = 0.0;
    LinearForm outer; // A
    LinearForm inner; // B
};

// H = xx x̂² + pp p̂² + xp {x̂, p̂}
struct QuadraticHamiltonian {
    double xx = 0.0, pp = 0.0, xp = 0.0;
};

// (⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩, ⟨{x,p}⟩) — raw, not central.
struct PhaseMoments {
    double x = 0.0, p = 0.0, xx = 0.0, pp = 0.0, xp = 0.0;

    Eigen::Matrix<double, 5, 1> vec() const;
    static PhaseMoments from_vec(const Eigen::Matrix<double, 5, 1>& v);
    double var_x() const { return xx - x * x; }
    double var_p() const { return pp - p * p; }
    double cov_xp() const { return 0.5 * xp - x * p; } // symmetrized central
};

PhaseMoments moments_of(const hilbert::OperatorSet& ops, const Matrix& rho);

struct QuadraticGenerator {
    double hbar = 1.0;
    QuadraticHamiltonian hamiltonian;
    std::vector<DissipatorTerm> terms;

    // d rho/dt on a truncated space.
    Matrix apply(const hilbert::OperatorSet& ops, const Matrix& rho) const;

    // Exact affine moment flow d m/dt = M m + b for the 5 moments above.
    void moment_system(Eigen::Matrix<double, 5, 5>& M, Eigen::Matrix<double, 5, 1>& b) const;
    PhaseMoments moment_rate(const PhaseMoments& m) const;

    // Weyl symbol S_O with d⟨O⟩/dt = ⟨S_O⟩.
    Symbol heisenberg_symbol(const Symbol& observable) const;

    QuadraticGenerator hamiltonian_only() const;
    // Sum of coefficients of all terms with the given role and operator structure.
    cplx coefficient(TermRole role) const;
};

} // namespace oqs::quadratic
