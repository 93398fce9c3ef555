// hilbert.hpp — truncated single-particle spaces, composite algebra, dense unitary propagation

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace oqs {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

} // namespace oqs

namespace oqs::hilbert {

enum class BasisKind { fock, grid };

struct SpaceSpec {
    BasisKind kind = BasisKind::grid;
    int dim = 128;
    double mass = 1.0;
    double hbar = 1.0;
    double omega_ref = 1.0;    // fock only
    double grid_extent = 10.0; // grid only: points span [-extent, extent)

    void validate() const;
    double grid_spacing() const { return 2.0 * grid_extent / dim; }
    // x_k = -extent + k*dx
    std::vector<double> grid_points() const;
    // Angular wavenumbers in FFT order; the Nyquist mode is set to zero.
    std::vector<double> wavenumbers() const;
};

struct OperatorSet {
    SpaceSpec spec;
    Matrix x, p, id;
    // cached products used by every generator evaluation
    Matrix x2, p2, xp_anti; // x², p², {x,p}

    int dim() const { return spec.dim; }
    bool x_is_diagonal() const { return spec.kind == BasisKind::grid; }
};

OperatorSet make_operator_set(const SpaceSpec& spec);

// Projector onto the part of the truncated space where canonical algebra holds.
// fock: lowest dim-2 levels. grid: span of the lowest dim/4 Hermite functions
// with an oscillator length balanced between the grid extent and resolution.
Matrix interior_projector(const SpaceSpec& spec);

// Position-space values of the first n Hermite functions for a given
// oscillator (mass, omega, hbar); rows are points, columns are levels.
RealMatrix hermite_functions(const std::vector<double>& x, int n, double mass,
                             double omega, double hbar);

// Unitary DFT of a grid basis, F(j,k) = exp(-i k_j x_k)/sqrt(N), so that the
// grid momentum is p = F^† diag(hbar k) F (k from wavenumbers(), Nyquist row
// built with its true frequency). Throws DimensionError for fock specs.
Matrix dft_matrix(const SpaceSpec& spec);

struct StateReport {
    double hermiticity = 0.0; // max |rho - rho^†|
    double trace_error = 0.0; // |tr rho - 1|
    double min_eigenvalue = 0.0;
    bool hermitian_ok = true, trace_ok = true, positive_ok = true;
    bool ok() const { return hermitian_ok && trace_ok && positive_ok; }
};

class DensityMatrix {
public:
    DensityMatrix() = default;
    DensityMatrix(Matrix data, std::vector<int> dims);
    explicit DensityMatrix(Matrix data);

    static DensityMatrix from_pure(const Vector& psi, std::vector<int> dims);

    const Matrix& data() const { return data_; }
    const std::vector<int>& dims() const { return dims_; }
    int size() const { return static_cast<int>(data_.rows()); }

    cplx trace() const { return data_.trace(); }
    double purity() const;
    double min_eigenvalue() const;
    double hermiticity_error() const;

    // Checks the Hermiticity/trace/positivity invariants. Nothing is clipped.
    StateReport check(double tol_pos = 1e-8) const;

private:
    Matrix data_;
    std::vector<int> dims_;
};

// Kronecker product; subsystem 1 is the slow index.
Matrix tensor(const Matrix& a, const Matrix& b);

DensityMatrix partial_trace_second(const DensityMatrix& rho);
// Reduced state of a pure bipartite vector without forming the full projector.
DensityMatrix partial_trace_second(const Vector& psi, int n1, int n2);

Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& m);
double hermiticity_error(const Matrix& m);

double trace_distance(const Matrix& a, const Matrix& b);
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
    return trace_distance(a.data(), b.data());
}

// U rho U^† with U = exp(-i H t / hbar).
DensityMatrix evolve_unitary(const Matrix& H, const DensityMatrix& rho, double t,
                             double hbar = 1.0);

// Caches the eigendecomposition of a time-independent H so that many
// times/states can be propagated for the price of one diagonalization.
class Propagator {
public:
    Propagator(const Matrix& H, double hbar = 1.0);

    Matrix unitary(double t) const;
    Vector evolve(const Vector& psi, double t) const;
    DensityMatrix evolve(const DensityMatrix& rho, double t) const;

    int dim() const { return static_cast<int>(energies_.size()); }
    const RealVector& energies() const { return energies_; }

private:
    Vector phases(double t) const;

    Matrix vecs_;
    RealVector energies_;
    double hbar_;
};

} // namespace oqs::hilbert
