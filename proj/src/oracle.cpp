#include "oqs/oracle.hpp"
#include "oqs/errors.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <functional>
#include <string>

namespace oqs::oracle {

namespace {

double max_abs_entry(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace

Mat4 symplectic_form() {
    Mat4 S = Mat4::Zero();
    S(0, 1) = 1.0;
    S(1, 0) = -1.0;
    S(2, 3) = 1.0;
    S(3, 2) = -1.0;
    return S;
}

double GaussianMoments::uncertainty_margin(double hbar) const {
    Eigen::Matrix4cd M = cov.cast<cplx>() + cplx(0.0, 0.5 * hbar) * symplectic_form().cast<cplx>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

void GaussianMoments::validate(double hbar, double tol) const {
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidParameter("GaussianMoments: covariance is not symmetric");
    const double margin = uncertainty_margin(hbar);
    if (margin < -tol)
        throw InvalidParameter("GaussianMoments: covariance violates the uncertainty relation (min eig " +
                               std::to_string(margin) + ")");
}

Mat4 heisenberg_drift_L(const toy::ToyParams& p) {
    Mat4 A = Mat4::Zero();
    A(0, 1) = 1.0 / p.m1;                 // dx1 = p1/m1
    A(1, 0) = -p.g * p.g / p.m2;          // dp1 = -g² x1/m2 + g p2/m2
    A(1, 3) = p.g / p.m2;
    A(2, 3) = 1.0 / p.m2;                 // dx2 = p2/m2 - g x1/m2
    A(2, 0) = -p.g / p.m2;
    return A;                             // dp2 = 0
}

Mat4 heisenberg_drift_Lprime(const toy::ToyParams& p) {
    Mat4 A = Mat4::Zero();
    A(0, 1) = 1.0 / p.m1;                 // dx1 = p1'/m1 + g x2/m1
    A(0, 2) = p.g / p.m1;
    A(2, 3) = 1.0 / p.m2;                 // dx2 = p2'/m2
    A(3, 2) = -p.g * p.g / p.m1;          // dp2' = -g² x2/m1 - g p1'/m1
    A(3, 1) = -p.g / p.m1;
    return A;                             // dp1' = 0
}

GaussianMoments evolve_moments(const Mat4& A, const GaussianMoments& m0, double t) {
    if (!(t >= 0.0)) throw InvalidParameter("evolve_moments: t must be >= 0");
    if (t == 0.0) return m0;
    const Mat4 E = (A * t).exp();
    GaussianMoments out;
    out.mean = E * m0.mean;
    out.cov = E * m0.cov * E.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
}

GaussianMoments initial_moments(const toy::InitialStateSpec& spec, const toy::ToyParams& params) {
    if (spec.cat_separation) throw InvalidParameter("initial_moments: cat states are not Gaussian");
    spec.validate(params.hbar);
    const double hb = params.hbar;
    GaussianMoments m;
    m.mean << spec.mean_x, spec.mean_p, 0.0, 0.0;
    m.cov(0, 0) = spec.width * spec.width;
    m.cov(1, 1) = hb * hb / (4.0 * spec.width * spec.width);
    m.cov(2, 2) = spec.env.var_x2;
    m.cov(3, 3) = spec.env.var_p2;
    m.cov(2, 3) = m.cov(3, 2) = 0.5 * spec.env.sym_xp;
    if (spec.transformed) {
        // rho -> T^† rho T maps expectation values through
        // T p1 T^† = p1 + g x2, T p2 T^† = p2 + g x1 (sign flips with phase_sign).
        const double g = spec.phase_sign * params.g;
        Mat4 M = Mat4::Identity();
        M(1, 2) = g;
        M(3, 0) = g;
        m.mean = M * m.mean;
        m.cov = M * m.cov * M.transpose();
    }
    return m;
}

namespace {

// ev(A, B) = <A ⊗ B>; operators stay in their local factors so nothing of the
// composite size is ever multiplied.
using LocalExpectation = std::function<cplx(const Matrix&, const Matrix&)>;

GaussianMoments moments_from_expectation(const LocalExpectation& ev, const hilbert::OperatorSet& ops1,
                                         const hilbert::OperatorSet& ops2) {
    const Matrix* A[4] = {&ops1.x, &ops1.p, &ops1.id, &ops1.id};
    const Matrix* B[4] = {&ops2.id, &ops2.id, &ops2.x, &ops2.p};
    GaussianMoments m;
    for (int a = 0; a < 4; ++a) m.mean[a] = ev(*A[a], *B[a]).real();
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
            const cplx ab = ev(*A[a] * *A[b], *B[a] * *B[b]);
            const cplx ba = ev(*A[b] * *A[a], *B[b] * *B[a]);
            const double s = 0.5 * (ab + ba).real();
            m.cov(a, b) = m.cov(b, a) = s - m.mean[a] * m.mean[b];
        }
    return m;
}

} // namespace

GaussianMoments measure_moments(const hilbert::DensityMatrix& rho, const hilbert::OperatorSet& ops1,
                                const hilbert::OperatorSet& ops2) {
    const Eigen::Index n1 = ops1.dim(), n2 = ops2.dim();
    if (rho.size() != n1 * n2) throw DimensionError("measure_moments: size mismatch");
    const Matrix& r = rho.data();
    // tr(rho (A⊗B)) = sum_{i,j} A(j,i) tr(R_ij B), R_ij the (i,j) block of rho
    return moments_from_expectation(
        [&](const Matrix& a, const Matrix& b) {
            const Matrix bt = b.transpose();
            cplx s = 0.0;
            for (Eigen::Index i = 0; i < n1; ++i)
                for (Eigen::Index j = 0; j < n1; ++j)
                    if (a(j, i) != 0.0) s += a(j, i) * r.block(i * n2, j * n2, n2, n2).cwiseProduct(bt).sum();
            return s;
        },
        ops1, ops2);
}

GaussianMoments measure_moments(const Vector& psi, const hilbert::OperatorSet& ops1,
                                const hilbert::OperatorSet& ops2) {
    const Eigen::Index n1 = ops1.dim(), n2 = ops2.dim();
    if (psi.size() != n1 * n2) throw DimensionError("measure_moments: size mismatch");
    // psi[i*n2 + j] = Psi(i, j); <A⊗B> = sum conj(Psi) ∘ (A Psi B^T)
    const Matrix P = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        psi.data(), n1, n2);
    return moments_from_expectation(
        [&](const Matrix& a, const Matrix& b) { return P.conjugate().cwiseProduct(a * P * b.transpose()).sum(); },
        ops1, ops2);
}

hilbert::DensityMatrix reduced_exact(const hilbert::DensityMatrix& rho12_0, const Matrix& H, double t,
                                     double hbar) {
    if (rho12_0.dims().size() != 2) throw DimensionError("reduced_exact: expected a bipartite state");
    if (H.rows() != rho12_0.size()) throw DimensionError("reduced_exact: H and state sizes differ");
    return hilbert::partial_trace_second(hilbert::evolve_unitary(H, rho12_0, t, hbar));
}

ExactReducer::ExactReducer(const Matrix& H, int n1, int n2, double hbar)
    : prop_(H, hbar), n1_(n1), n2_(n2) {
    if (H.rows() != static_cast<Eigen::Index>(n1) * n2)
        throw DimensionError("ExactReducer: H size != n1*n2");
}

hilbert::DensityMatrix ExactReducer::reduced(const hilbert::DensityMatrix& rho12_0, double t) const {
    return hilbert::partial_trace_second(prop_.evolve(rho12_0, t));
}

hilbert::DensityMatrix ExactReducer::reduced(const Vector& psi12_0, double t) const {
    return hilbert::partial_trace_second(prop_.evolve(psi12_0, t), n1_, n2_);
}

BlockReducer::BlockReducer(const Matrix& H, const hilbert::OperatorSet& ops1, const hilbert::OperatorSet& ops2,
                           int conserved_particle, double hbar)
    : n1_(ops1.dim()), n2_(ops2.dim()), conserved_(conserved_particle) {
    if (conserved_particle != 1 && conserved_particle != 2)
        throw InvalidParameter("BlockReducer: conserved_particle must be 1 or 2");
    const Eigen::Index N = static_cast<Eigen::Index>(n1_) * n2_;
    if (H.rows() != N || H.cols() != N) throw DimensionError("BlockReducer: H size != n1*n2");
    const bool second = conserved_particle == 2;
    F_ = hilbert::dft_matrix(second ? ops2.spec : ops1.spec);
    // "other" index is slow, conserved index fast: a = other*nc + c
    const int no = second ? n1_ : n2_, nc = second ? n2_ : n1_;
    auto entry = [&](int o, int c, int o2, int c2) {
        return second ? H(o * nc + c, o2 * nc + c2) : H(c * n2_ + o, c2 * n2_ + o2);
    };
    std::vector<Matrix> blk(static_cast<std::size_t>(nc), Matrix(no, no));
    Matrix B(nc, nc);
    const double scale = std::max(1.0, max_abs_entry(H));
    for (int o = 0; o < no; ++o)
        for (int o2 = 0; o2 < no; ++o2) {
            for (int c = 0; c < nc; ++c)
                for (int c2 = 0; c2 < nc; ++c2) B(c, c2) = entry(o, c, o2, c2);
            const Matrix Bt = F_ * B * F_.adjoint();
            for (int k = 0; k < nc; ++k) {
                blk[static_cast<std::size_t>(k)](o, o2) = Bt(k, k);
                for (int k2 = 0; k2 < nc; ++k2)
                    if (k2 != k) off_block_ = std::max(off_block_, std::abs(Bt(k, k2)));
            }
        }
    if (off_block_ > 1e-9 * scale)
        throw InvalidOperator("BlockReducer: H couples momentum blocks of particle " +
                              std::to_string(conserved_particle) + " (max " + std::to_string(off_block_) + ")");
    blocks_.reserve(static_cast<std::size_t>(nc));
    for (auto& b : blk) {
        b = 0.5 * (b + b.adjoint()).eval();
        blocks_.emplace_back(b, hbar);
    }
}

hilbert::DensityMatrix BlockReducer::reduced(const Vector& psi12_0, double t) const {
    const Eigen::Index N = static_cast<Eigen::Index>(n1_) * n2_;
    if (psi12_0.size() != N) throw DimensionError("BlockReducer::reduced: size mismatch");
    using RowMajor = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const Matrix Psi = Eigen::Map<const RowMajor>(psi12_0.data(), n1_, n2_); // Psi(i1, i2)
    if (conserved_ == 2) {
        // Phi(i1, k) = sum_i2 Psi(i1, i2) F(k, i2); column k evolves in block k
        Matrix Phi = Psi * F_.transpose();
        for (Eigen::Index k = 0; k < Phi.cols(); ++k)
            Phi.col(k) = blocks_[static_cast<std::size_t>(k)].evolve(Vector(Phi.col(k)), t);
        return hilbert::DensityMatrix(Phi * Phi.adjoint(), {n1_});
    }
    // Phi(i2, k) = sum_i1 Psi(i1, i2) F(k, i1)
    Matrix Phi = Psi.transpose() * F_.transpose();
    for (Eigen::Index k = 0; k < Phi.cols(); ++k)
        Phi.col(k) = blocks_[static_cast<std::size_t>(k)].evolve(Vector(Phi.col(k)), t);
    // momentum-basis rho1(k, k') = sum_i2 Phi(i2,k) conj(Phi(i2,k')); back to positions
    const Matrix rho_k = Phi.transpose() * Phi.conjugate();
    Matrix rho = F_.adjoint() * rho_k * F_;
    rho = 0.5 * (rho + rho.adjoint()).eval();
    return hilbert::DensityMatrix(rho, {n1_});
}

} // namespace oqs::oracle
