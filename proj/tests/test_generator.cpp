#include "oqs/errors.hpp"
#include "oqs/generator.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace oqs;
using namespace oqs::quadratic;
using hilbert::OperatorSet;

namespace {

QuadraticGenerator sample_generator() {
    QuadraticGenerator g;
    g.hbar = 0.8;
    g.hamiltonian = {0.3, 0.7, -0.15};
    g.terms.push_back({TermKind::double_commutator, TermRole::position_diffusion, -0.05, {1.0, 0.0}, {1.0, 0.0}});
    g.terms.push_back({TermKind::double_commutator, TermRole::cross_diffusion, 0.02, {1.0, 0.0}, {0.0, 1.0}});
    g.terms.push_back({TermKind::double_commutator, TermRole::momentum_diffusion, -0.03, {0.0, 1.0}, {0.0, 1.0}});
    g.terms.push_back({TermKind::commutator_anticommutator, TermRole::friction, cplx(0.0, -0.04), {1.0, 0.0}, {0.0, 1.0}});
    return g;
}

OperatorSet fock_ops(int dim, double hbar) {
    hilbert::SpaceSpec s;
    s.kind = hilbert::BasisKind::fock;
    s.dim = dim;
    s.hbar = hbar;
    return hilbert::make_operator_set(s);
}

} // namespace

TEST_CASE("Poisson brackets of symbols") {
    const Symbol x{0, 1, 0, 0, 0, 0}, p{0, 0, 1, 0, 0, 0};
    CHECK(poisson_bracket(x, p).c == 1.0);
    const Symbol x2{0, 0, 0, 1, 0, 0};
    const Symbol r = poisson_bracket(x2, p); // {x², p} = 2x
    CHECK(r.x == 2.0);
    CHECK(r.c == 0.0);
    CHECK_THROWS_AS(product(x2, p), InvalidOperator);
}

TEST_CASE("moment flow derived from the term list matches the matrix action") {
    const QuadraticGenerator gen = sample_generator();
    const OperatorSet ops = fock_ops(40, gen.hbar);
    std::mt19937_64 rng(23);
    // state supported on the lowest 10 levels keeps every trace away from the truncation corner
    Matrix a = Matrix::Zero(40, 40);
    a.topLeftCorner(10, 10) = testing_support::random_matrix(10, rng);
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();

    const Matrix drho = gen.apply(ops, rho);
    auto ev = [&](const Matrix& o, const Matrix& r) { return (o * r).trace().real(); };
    const PhaseMoments m = moments_of(ops, rho);
    const PhaseMoments rate = gen.moment_rate(m);
    CHECK(rate.x == doctest::Approx(ev(ops.x, drho)).epsilon(1e-11));
    CHECK(rate.p == doctest::Approx(ev(ops.p, drho)).epsilon(1e-11));
    CHECK(rate.xx == doctest::Approx(ev(ops.x2, drho)).epsilon(1e-11));
    CHECK(rate.pp == doctest::Approx(ev(ops.p2, drho)).epsilon(1e-11));
    CHECK(rate.xp == doctest::Approx(ev(ops.xp_anti, drho)).epsilon(1e-11));
}

TEST_CASE("generator is trace-free and Hermiticity-preserving") {
    const QuadraticGenerator gen = sample_generator();
    const OperatorSet ops = fock_ops(24, gen.hbar);
    std::mt19937_64 rng(29);
    const Matrix rho = testing_support::random_hermitian(24, rng);
    const Matrix d = gen.apply(ops, rho);
    CHECK(std::abs(d.trace()) <= 1e-12);
    CHECK(hilbert::hermiticity_error(d) <= 1e-12);
}

TEST_CASE("grid fast path agrees with the dense path") {
    hilbert::SpaceSpec s;
    s.dim = 24;
    s.grid_extent = 5.0;
    const QuadraticGenerator gen = sample_generator();
    std::mt19937_64 rng(31);
    const Matrix rho = testing_support::random_hermitian(24, rng);
    s.hbar = gen.hbar;
    const OperatorSet g2 = hilbert::make_operator_set(s);
    OperatorSet d2 = g2;
    d2.spec.kind = hilbert::BasisKind::fock; // disables only the diagonal-x shortcut
    CHECK(hilbert::max_abs(gen.apply(g2, rho) - gen.apply(d2, rho)) <= 1e-12);
}

TEST_CASE("non-Hermitian coefficients are refused by the moment map") {
    QuadraticGenerator g;
    g.terms.push_back({TermKind::double_commutator, TermRole::position_diffusion, cplx(0.0, 1.0), {1.0, 0.0}, {1.0, 0.0}});
    CHECK_THROWS_AS(g.moment_rate({}), InvalidOperator);
}

TEST_CASE("role lookup") {
    const QuadraticGenerator g = sample_generator();
    CHECK(g.coefficient(TermRole::friction) == cplx(0.0, -0.04));
    CHECK(g.hamiltonian_only().terms.empty());
}
