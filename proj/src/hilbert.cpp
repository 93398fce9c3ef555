#include "oqs/hilbert.hpp"
#include "oqs/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <numbers>
#include <string>

namespace oqs::hilbert {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

} // namespace

void SpaceSpec::validate() const {
    if (dim < 2) throw InvalidSpec("SpaceSpec: dim must be >= 2, got " + std::to_string(dim));
    if (!positive_finite(mass)) throw InvalidSpec("SpaceSpec: mass must be > 0");
    if (!positive_finite(hbar)) throw InvalidSpec("SpaceSpec: hbar must be > 0");
    if (kind == BasisKind::fock && !positive_finite(omega_ref))
        throw InvalidSpec("SpaceSpec: omega_ref must be > 0 for a fock basis");
    if (kind == BasisKind::grid && !positive_finite(grid_extent))
        throw InvalidSpec("SpaceSpec: grid_extent must be > 0 for a grid basis");
}

std::vector<double> SpaceSpec::grid_points() const {
    std::vector<double> xs(static_cast<std::size_t>(dim));
    const double dx = grid_spacing();
    for (int k = 0; k < dim; ++k) xs[k] = -grid_extent + k * dx;
    return xs;
}

std::vector<double> SpaceSpec::wavenumbers() const {
    std::vector<double> ks(static_cast<std::size_t>(dim), 0.0);
    const double dk = 2.0 * std::numbers::pi / (dim * grid_spacing());
    for (int j = 1; j < dim; ++j) {
        if (2 * j < dim) ks[j] = j * dk;
        else if (2 * j > dim) ks[j] = (j - dim) * dk;
        // 2j == dim: Nyquist, left at zero so p stays Hermitian and real-symmetric in x
    }
    return ks;
}

OperatorSet make_operator_set(const SpaceSpec& spec) {
    spec.validate();
    const int n = spec.dim;
    OperatorSet ops;
    ops.spec = spec;
    ops.id = Matrix::Identity(n, n);
    ops.x = Matrix::Zero(n, n);
    ops.p = Matrix::Zero(n, n);

    if (spec.kind == BasisKind::fock) {
        const double sx = std::sqrt(spec.hbar / (2.0 * spec.mass * spec.omega_ref));
        const double sp = std::sqrt(spec.hbar * spec.mass * spec.omega_ref / 2.0);
        for (int k = 1; k < n; ++k) {
            const double r = std::sqrt(static_cast<double>(k));
            // a_{k-1,k} = sqrt(k)
            ops.x(k - 1, k) = sx * r;
            ops.x(k, k - 1) = sx * r;
            ops.p(k - 1, k) = cplx(0.0, -sp * r);
            ops.p(k, k - 1) = cplx(0.0, sp * r);
        }
        ops.x2 = ops.x * ops.x;
    } else {
        const auto xs = spec.grid_points();
        const auto ks = spec.wavenumbers();
        for (int k = 0; k < n; ++k) ops.x(k, k) = xs[k];
        // p_ab depends on a-b only: (hbar/N) sum_j k_j exp(2 pi i j (a-b)/N).
        // Pair +k/-k so each entry is exactly imaginary and the matrix exactly Hermitian.
        std::vector<double> row(static_cast<std::size_t>(n), 0.0);
        for (int d = 1; d < n; ++d) {
            double s = 0.0;
            for (int j = 1; 2 * j < n; ++j)
                s += ks[j] * 2.0 * std::sin(2.0 * std::numbers::pi * j * d / n);
            row[d] = spec.hbar * s / n;
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                const int d = a - b;
                ops.p(a, b) = d > 0 ? cplx(0.0, row[d]) : cplx(0.0, -row[-d]);
            }
        ops.x2 = Matrix::Zero(n, n);
        for (int k = 0; k < n; ++k) ops.x2(k, k) = xs[k] * xs[k];
    }
    ops.p2 = ops.p * ops.p;
    ops.xp_anti = ops.x * ops.p + ops.p * ops.x;
    return ops;
}

RealMatrix hermite_functions(const std::vector<double>& x, int n, double mass,
                             double omega, double hbar) {
    const double s = std::sqrt(mass * omega / hbar);
    const double norm0 = std::pow(mass * omega / (std::numbers::pi * hbar), 0.25);
    RealMatrix out(static_cast<Eigen::Index>(x.size()), n);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i] * s;
        double prev = 0.0;
        double cur = norm0 * std::exp(-0.5 * xi * xi);
        for (int k = 0; k < n; ++k) {
            out(static_cast<Eigen::Index>(i), k) = cur;
            const double next = std::sqrt(2.0 / (k + 1)) * xi * cur - std::sqrt(double(k) / (k + 1)) * prev;
            prev = cur;
            cur = next;
        }
    }
    return out;
}

Matrix interior_projector(const SpaceSpec& spec) {
    spec.validate();
    const int n = spec.dim;
    if (spec.kind == BasisKind::fock) {
        Matrix P = Matrix::Zero(n, n);
        for (int k = 0; k + 2 < n; ++k) P(k, k) = 1.0;
        return P;
    }
    const int levels = std::max(1, n / 4);
    // ell^2 = extent / k_max puts the highest retained level's classical
    // turning point equally far (relatively) from the grid edge and the Nyquist limit.
    const double dx = spec.grid_spacing();
    const double ell2 = spec.grid_extent * dx / std::numbers::pi;
    const double omega = spec.hbar / (spec.mass * ell2);
    RealMatrix V = hermite_functions(spec.grid_points(), levels, spec.mass, omega, spec.hbar);
    Eigen::HouseholderQR<RealMatrix> qr(V);
    RealMatrix Q = qr.householderQ() * RealMatrix::Identity(n, levels);
    return (Q * Q.transpose()).cast<cplx>();
}

DensityMatrix::DensityMatrix(Matrix data, std::vector<int> dims)
    : data_(std::move(data)), dims_(std::move(dims)) {
    if (data_.rows() != data_.cols())
        throw DimensionError("DensityMatrix: matrix must be square");
    if (dims_.empty()) dims_ = {static_cast<int>(data_.rows())};
    long prod = 1;
    for (int d : dims_) {
        if (d < 1) throw DimensionError("DensityMatrix: subsystem dims must be positive");
        prod *= d;
    }
    if (prod != data_.rows())
        throw DimensionError("DensityMatrix: product of dims (" + std::to_string(prod) +
                             ") != matrix size (" + std::to_string(data_.rows()) + ")");
}

DensityMatrix::DensityMatrix(Matrix data) : DensityMatrix(std::move(data), {}) {}

DensityMatrix DensityMatrix::from_pure(const Vector& psi, std::vector<int> dims) {
    return DensityMatrix(psi * psi.adjoint(), std::move(dims));
}

double DensityMatrix::purity() const {
    // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
    return data_.cwiseAbs2().sum();
}

double DensityMatrix::min_eigenvalue() const {
    Matrix h = 0.5 * (data_ + data_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double DensityMatrix::hermiticity_error() const { return hilbert::hermiticity_error(data_); }

StateReport DensityMatrix::check(double tol_pos) const {
    StateReport r;
    r.hermiticity = hermiticity_error();
    r.trace_error = std::abs(trace() - 1.0);
    r.min_eigenvalue = min_eigenvalue();
    r.hermitian_ok = r.hermiticity <= 1e-10;
    r.trace_ok = r.trace_error <= 1e-10;
    r.positive_ok = r.min_eigenvalue >= -tol_pos;
    return r;
}

Matrix tensor(const Matrix& a, const Matrix& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

DensityMatrix partial_trace_second(const DensityMatrix& rho) {
    if (rho.dims().size() != 2)
        throw DimensionError("partial_trace_second: expected exactly two subsystems, got " +
                             std::to_string(rho.dims().size()));
    const int n1 = rho.dims()[0], n2 = rho.dims()[1];
    const Matrix& r = rho.data();
    Matrix out = Matrix::Zero(n1, n1);
    for (int j = 0; j < n1; ++j)
        for (int i = 0; i < n1; ++i) {
            cplx s = 0.0;
            for (int k = 0; k < n2; ++k) s += r(i * n2 + k, j * n2 + k);
            out(i, j) = s;
        }
    return DensityMatrix(std::move(out), {n1});
}

DensityMatrix partial_trace_second(const Vector& psi, int n1, int n2) {
    if (psi.size() != static_cast<Eigen::Index>(n1) * n2)
        throw DimensionError("partial_trace_second: vector length != n1*n2");
    // column i of A holds the particle-2 amplitudes for x1 index i
    Eigen::Map<const Matrix> A(psi.data(), n2, n1);
    Matrix out = (A.adjoint() * A).conjugate();
    return DensityMatrix(std::move(out), {n1});
}

Matrix commutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw DimensionError("commutator: shape mismatch");
    return a * b - b * a;
}

Matrix anticommutator(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw DimensionError("anticommutator: shape mismatch");
    return a * b + b * a;
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double hermiticity_error(const Matrix& m) { return max_abs(m - m.adjoint()); }

double trace_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("trace_distance: shape mismatch");
    Matrix d = a - b;
    d = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix dft_matrix(const SpaceSpec& spec) {
    if (spec.kind != BasisKind::grid) throw DimensionError("dft_matrix: needs a grid basis");
    const auto xs = spec.grid_points();
    const auto ks = spec.wavenumbers();
    const int n = spec.dim;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    // the Nyquist row needs its true frequency to keep F unitary (p is zero on it)
    auto wave = [&](int j) { return 2 * j == n ? -std::numbers::pi / spec.grid_spacing() : ks[j]; };
    Matrix F(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) F(j, k) = std::polar(norm, -wave(j) * xs[k]);
    return F;
}

Propagator::Propagator(const Matrix& H, double hbar) : hbar_(hbar) {
    if (H.rows() != H.cols()) throw DimensionError("Propagator: H must be square");
    if (!(hbar > 0.0)) throw InvalidParameter("Propagator: hbar must be > 0");
    const double herr = hermiticity_error(H);
    if (herr > 1e-10)
        throw InvalidOperator("Propagator: H is not Hermitian (max |H - H^dag| = " +
                              std::to_string(herr) + ")");
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw NumericalFailure("Propagator: eigendecomposition failed");
    vecs_ = es.eigenvectors();
    energies_ = es.eigenvalues();
}

Vector Propagator::phases(double t) const {
    Vector ph(energies_.size());
    for (Eigen::Index k = 0; k < energies_.size(); ++k)
        ph[k] = std::polar(1.0, -energies_[k] * t / hbar_);
    return ph;
}

Matrix Propagator::unitary(double t) const {
    return vecs_ * phases(t).asDiagonal() * vecs_.adjoint();
}

Vector Propagator::evolve(const Vector& psi, double t) const {
    if (psi.size() != energies_.size()) throw DimensionError("Propagator::evolve: size mismatch");
    Vector c = vecs_.adjoint() * psi;
    c = c.cwiseProduct(phases(t));
    return vecs_ * c;
}

DensityMatrix Propagator::evolve(const DensityMatrix& rho, double t) const {
    if (rho.size() != energies_.size()) throw DimensionError("Propagator::evolve: size mismatch");
    Matrix r = vecs_.adjoint() * rho.data() * vecs_;
    const Vector ph = phases(t);
    for (Eigen::Index j = 0; j < r.cols(); ++j)
        for (Eigen::Index i = 0; i < r.rows(); ++i) r(i, j) *= ph[i] * std::conj(ph[j]);
    return DensityMatrix(vecs_ * r * vecs_.adjoint(), rho.dims());
}

DensityMatrix evolve_unitary(const Matrix& H, const DensityMatrix& rho, double t, double hbar) {
    if (H.rows() != rho.size()) throw DimensionError("evolve_unitary: H and rho sizes differ");
    if (t == 0.0) {
        // still validate H so the error contract holds at t = 0
        if (hermiticity_error(H) > 1e-10) throw InvalidOperator("evolve_unitary: H is not Hermitian");
        return rho;
    }
    return Propagator(H, hbar).evolve(rho, t);
}

} // namespace oqs::hilbert
