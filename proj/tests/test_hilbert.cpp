#include "oqs/errors.hpp"
#include "oqs/hilbert.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace oqs;
using namespace oqs::hilbert;
using testing_support::random_density;
using testing_support::random_hermitian;

namespace {

SpaceSpec fock(int dim, double w = 1.0) {
    SpaceSpec s;
    s.kind = BasisKind::fock;
    s.dim = dim;
    s.omega_ref = w;
    return s;
}

SpaceSpec grid(int dim, double extent) {
    SpaceSpec s;
    s.kind = BasisKind::grid;
    s.dim = dim;
    s.grid_extent = extent;
    return s;
}

double interior_ccr_error(const SpaceSpec& s) {
    const OperatorSet ops = make_operator_set(s);
    const Matrix P = interior_projector(s);
    const Matrix d = commutator(ops.x, ops.p) - cplx(0.0, s.hbar) * ops.id;
    return max_abs(P * d * P);
}

} // namespace

TEST_CASE("fock ladder matrix elements") {
    const OperatorSet ops = make_operator_set(fock(4));
    CHECK(ops.x(0, 1).real() == doctest::Approx(0.70710678).epsilon(1e-8));
    CHECK(std::abs(ops.x(0, 0)) == 0.0);
    CHECK(hermiticity_error(ops.x) <= 1e-12);
    CHECK(hermiticity_error(ops.p) <= 1e-12);
}

TEST_CASE("grid definition") {
    const OperatorSet ops = make_operator_set(grid(64, 10.0));
    CHECK(ops.x(0, 0).real() == -10.0);
    CHECK(max_abs(ops.x - Matrix(ops.x.diagonal().asDiagonal())) == 0.0);
    CHECK(hermiticity_error(ops.p) <= 1e-12);
    CHECK(ops.x(1, 1).real() == doctest::Approx(-10.0 + 20.0 / 64));
}

TEST_CASE("grid spectral momentum differentiates band-limited functions exactly") {
    const SpaceSpec s = grid(64, 10.0);
    const OperatorSet ops = make_operator_set(s);
    const auto xs = s.grid_points();
    Vector f(64), df(64);
    for (int k = 0; k < 64; ++k) {
        f[k] = std::exp(-xs[k] * xs[k] / 2.0);
        df[k] = -xs[k] * std::exp(-xs[k] * xs[k] / 2.0);
    }
    // p = -i hbar d/dx
    const Vector pf = ops.p * f;
    CHECK((pf - cplx(0.0, -1.0) * df).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("invalid specs") {
    CHECK_THROWS_AS(make_operator_set(fock(1)), InvalidSpec);
    SpaceSpec s = grid(8, -1.0);
    CHECK_THROWS_AS(make_operator_set(s), InvalidSpec);
}

TEST_CASE("canonical commutator on the interior") {
    CHECK(interior_ccr_error(fock(40)) <= 1e-12);
    CHECK(interior_ccr_error(fock(60, 0.1)) <= 1e-12);
    for (int n : {32, 48, 64, 128}) {
        INFO("grid dim " << n);
        CHECK(interior_ccr_error(grid(n, 10.0)) <= 1e-8);
    }
    // outside the interior the truncation corner breaks the algebra
    const OperatorSet ops = make_operator_set(fock(10));
    const Matrix d = commutator(ops.x, ops.p) - cplx(0.0, 1.0) * ops.id;
    CHECK(max_abs(d) > 1.0);
}

TEST_CASE("tensor products") {
    CHECK(max_abs(tensor(Matrix::Identity(2, 2), Matrix::Identity(2, 2)) - Matrix::Identity(4, 4)) == 0.0);
    const OperatorSet a = make_operator_set(fock(5)), b = make_operator_set(grid(6, 3.0));
    const Matrix X = tensor(a.x, b.id), P = tensor(a.id, b.p);
    CHECK(max_abs(commutator(X, P)) == 0.0);
    std::mt19937_64 rng(7);
    const Matrix m1 = random_hermitian(3, rng), m2 = random_hermitian(4, rng);
    CHECK(std::abs(tensor(m1, m2).trace() - m1.trace() * m2.trace()) <= 1e-13);
    // subsystem 1 is the slow index
    const Matrix k = tensor(m1, m2);
    CHECK(std::abs(k(1 * 4 + 2, 2 * 4 + 3) - m1(1, 2) * m2(2, 3)) <= 1e-15);
}

TEST_CASE("partial trace") {
    std::mt19937_64 rng(11);
    SUBCASE("product state") {
        const Matrix ra = random_density(3, rng), rb = random_density(4, rng);
        const DensityMatrix r(tensor(ra, rb), {3, 4});
        CHECK(max_abs(partial_trace_second(r).data() - ra) <= 1e-14);
    }
    SUBCASE("maximally entangled") {
        Vector phi = Vector::Zero(4);
        phi[0] = phi[3] = 1.0 / std::sqrt(2.0);
        const DensityMatrix r = DensityMatrix::from_pure(phi, {2, 2});
        Matrix expect = Matrix::Identity(2, 2) * 0.5;
        CHECK(max_abs(partial_trace_second(r).data() - expect) <= 1e-15);
        CHECK(max_abs(partial_trace_second(phi, 2, 2).data() - expect) <= 1e-15);
    }
    SUBCASE("random state against explicit index contraction") {
        const int n1 = 3, n2 = 3;
        const Matrix r = random_density(n1 * n2, rng);
        Matrix expect = Matrix::Zero(n1, n1);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n1; ++j)
                for (int k = 0; k < n2; ++k)
                    for (int l = 0; l < n2; ++l)
                        if (k == l) expect(i, j) += r(i * n2 + k, j * n2 + l);
        CHECK(max_abs(partial_trace_second(DensityMatrix(r, {n1, n2})).data() - expect) <= 1e-15);
    }
    SUBCASE("pure-vector path agrees with the density path") {
        Vector psi = testing_support::random_matrix(12, rng).col(0);
        psi.normalize();
        const DensityMatrix r = DensityMatrix::from_pure(psi, {3, 4});
        CHECK(max_abs(partial_trace_second(psi, 3, 4).data() - partial_trace_second(r).data()) <= 1e-15);
    }
    SUBCASE("wrong layout") {
        CHECK_THROWS_AS(partial_trace_second(DensityMatrix(Matrix::Identity(4, 4) / 4.0)), DimensionError);
        CHECK_THROWS_AS(DensityMatrix(Matrix::Identity(4, 4), {3, 2}), DimensionError);
    }
}

TEST_CASE("commutator algebra") {
    const OperatorSet ops = make_operator_set(fock(8));
    std::mt19937_64 rng(3);
    const Matrix a = random_hermitian(8, rng);
    CHECK(max_abs(commutator(ops.id, a)) == 0.0);
    CHECK(max_abs(anticommutator(ops.x, ops.x) - 2.0 * ops.x * ops.x) <= 1e-15);
    CHECK_THROWS_AS(commutator(a, Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("double commutator with grid position is an entrywise multiplier") {
    const SpaceSpec s = grid(32, 6.0);
    const OperatorSet ops = make_operator_set(s);
    const auto xs = s.grid_points();
    std::mt19937_64 rng(5);
    const Matrix r = random_density(32, rng);
    const Matrix dd = commutator(ops.x, commutator(ops.x, r));
    double err = 0.0;
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 32; ++j)
            err = std::max(err, std::abs(dd(i, j) - (xs[i] - xs[j]) * (xs[i] - xs[j]) * r(i, j)));
    CHECK(err <= 1e-12);
}

TEST_CASE("unitary evolution") {
    std::mt19937_64 rng(13);
    const DensityMatrix rho(random_density(6, rng));
    const Matrix H = random_hermitian(6, rng);
    SUBCASE("t = 0") { CHECK(max_abs(evolve_unitary(H, rho, 0.0).data() - rho.data()) == 0.0); }
    SUBCASE("diagonal H") {
        Matrix D = Matrix::Zero(6, 6);
        for (int k = 0; k < 6; ++k) D(k, k) = 0.3 * k * k - 1.0;
        const double t = 2.7;
        const Matrix out = evolve_unitary(D, rho, t).data();
        double err = 0.0;
        for (int j = 0; j < 6; ++j)
            for (int k = 0; k < 6; ++k) {
                const cplx expect = rho.data()(j, k) * std::polar(1.0, -(D(j, j) - D(k, k)).real() * t);
                err = std::max(err, std::abs(out(j, k) - expect));
            }
        CHECK(err <= 1e-13);
    }
    SUBCASE("trace, Hermiticity and purity over 100 periods") {
        const OperatorSet ops = make_operator_set(fock(20));
        const Matrix Hosc = 0.5 * (ops.p * ops.p + ops.x * ops.x);
        Vector c = Vector::Zero(20);
        c[0] = 0.6;
        c[1] = cplx(0.0, 0.8);
        const DensityMatrix r0 = DensityMatrix::from_pure(c, {20});
        for (double t : {1.0, 10.0, 100.0 * 2.0 * M_PI}) {
            const DensityMatrix r = evolve_unitary(Hosc, r0, t);
            CHECK(std::abs(r.trace() - 1.0) <= 1e-10);
            CHECK(r.hermiticity_error() <= 1e-10);
            CHECK(std::abs(r.purity() - r0.purity()) <= 1e-10);
        }
        const DensityMatrix rmix(random_density(20, rng));
        const DensityMatrix r = evolve_unitary(Hosc + 0.01 * random_hermitian(20, rng), rmix, 628.0);
        CHECK(std::abs(r.purity() - rmix.purity()) <= 1e-10);
    }
    SUBCASE("non-Hermitian H is rejected") {
        Matrix bad = H;
        bad(0, 1) += 1e-6;
        CHECK_THROWS_AS(evolve_unitary(bad, rho, 1.0), InvalidOperator);
    }
    SUBCASE("cached propagator matches the one-shot call") {
        const Propagator prop(H);
        CHECK(max_abs(prop.evolve(rho, 1.3).data() - evolve_unitary(H, rho, 1.3).data()) <= 1e-13);
        const Matrix U = prop.unitary(0.7);
        CHECK(max_abs(U.adjoint() * U - Matrix::Identity(6, 6)) <= 1e-13);
    }
}

TEST_CASE("state diagnostics report but never clip") {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = 1.1;
    m(1, 1) = -0.1;
    const DensityMatrix r(m);
    const StateReport rep = r.check();
    CHECK_FALSE(rep.positive_ok);
    CHECK(rep.min_eigenvalue == doctest::Approx(-0.1));
    CHECK(r.data()(1, 1).real() == -0.1);
    CHECK(trace_distance(r, DensityMatrix(Matrix::Identity(2, 2) * 0.5)) == doctest::Approx(0.6));
}

TEST_CASE("operations are bit-deterministic") {
    const SpaceSpec s = grid(48, 8.0);
    const OperatorSet a = make_operator_set(s), b = make_operator_set(s);
    CHECK((a.p.array() == b.p.array()).all());
    std::mt19937_64 rng(17);
    const Matrix H = random_hermitian(16, rng);
    const DensityMatrix r(random_density(16, rng));
    const Matrix e1 = evolve_unitary(H, r, 3.0).data(), e2 = evolve_unitary(H, r, 3.0).data();
    CHECK((e1.array() == e2.array()).all());
}

TEST_CASE("grid DFT diagonalizes the momentum") {
    for (int n : {15, 16}) {
        hilbert::SpaceSpec s;
        s.dim = n;
        s.grid_extent = 3.0;
        const auto ops = hilbert::make_operator_set(s);
        const Matrix F = hilbert::dft_matrix(s);
        CHECK(max_abs(F * F.adjoint() - Matrix::Identity(n, n)) <= 1e-13);
        Matrix pk = F * ops.p * F.adjoint();
        const auto ks = s.wavenumbers();
        for (int j = 0; j < n; ++j) pk(j, j) -= ks[j];
        CHECK(max_abs(pk) <= 1e-12);
        CHECK(max_abs(F * ops.p2 * F.adjoint() - Matrix((F * ops.p2 * F.adjoint()).diagonal().asDiagonal())) <= 1e-12);
    }
}
