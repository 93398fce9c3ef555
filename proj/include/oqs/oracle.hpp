// oracle.hpp — exact composite references for the toy model:
// closed Gaussian moment flow of the quadratic Hamiltonians and dense unitary evolution.

#pragma once

#include "oqs/hilbert.hpp"
#include "oqs/toy_model.hpp"

namespace oqs::oracle {

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

// Ordering (x1, p1, x2, p2); cov holds symmetrized central second moments.
struct GaussianMoments {
    Vec4 mean = Vec4::Zero();
    Mat4 cov = Mat4::Zero();

    // min eigenvalue of cov + (i hbar/2) Sigma (must be >= -tol)
    double uncertainty_margin(double hbar) const;
    void validate(double hbar, double tol = 1e-8) const;
};

Mat4 symplectic_form();

Mat4 heisenberg_drift_L(const toy::ToyParams& params);
Mat4 heisenberg_drift_Lprime(const toy::ToyParams& params);

GaussianMoments evolve_moments(const Mat4& A, const GaussianMoments& m0, double t);

// Moments of the state produced by toy::build_initial_state (analytic; cats excluded).
GaussianMoments initial_moments(const toy::InitialStateSpec& spec, const toy::ToyParams& params);

// Moments of a composite density matrix / pure vector, measured directly.
GaussianMoments measure_moments(const hilbert::DensityMatrix& rho12, const hilbert::OperatorSet& ops1,
                                const hilbert::OperatorSet& ops2);
GaussianMoments measure_moments(const Vector& psi12, const hilbert::OperatorSet& ops1,
                                const hilbert::OperatorSet& ops2);

hilbert::DensityMatrix reduced_exact(const hilbert::DensityMatrix& rho12_0, const Matrix& H, double t,
                                     double hbar = 1.0);

// Reusable exact propagator for one Hamiltonian; the eigendecomposition is
// the expensive part and is done once.
class ExactReducer {
public:
    ExactReducer(const Matrix& H, int n1, int n2, double hbar = 1.0);

    hilbert::DensityMatrix reduced(const hilbert::DensityMatrix& rho12_0, double t) const;
    hilbert::DensityMatrix reduced(const Vector& psi12_0, double t) const;
    Vector evolve(const Vector& psi12_0, double t) const { return prop_.evolve(psi12_0, t); }

private:
    hilbert::Propagator prop_;
    int n1_, n2_;
};

// Exact propagation on the same truncated composite space when H commutes
// with the grid momentum of one particle (p2 for H, p1' for H'): H is then
// block-diagonal in that particle's DFT basis and each momentum block is
// diagonalized separately (n blocks of size n_other instead of one of size
// n1*n2). The block structure is verified; InvalidOperator if H couples blocks.
class BlockReducer {
public:
    BlockReducer(const Matrix& H, const hilbert::OperatorSet& ops1, const hilbert::OperatorSet& ops2,
                 int conserved_particle, double hbar = 1.0);

    // Reduced state of particle 1 in the position basis; psi12_0 uses the
    // tensor() ordering (particle 1 slow).
    hilbert::DensityMatrix reduced(const Vector& psi12_0, double t) const;

    // Largest coupling between momentum blocks found in H (should be round-off).
    double off_block_norm() const { return off_block_; }

private:
    std::vector<hilbert::Propagator> blocks_;
    Matrix F_; // DFT of the conserved particle
    int n1_, n2_, conserved_;
    double off_block_ = 0.0;
};

} // namespace oqs::oracle
