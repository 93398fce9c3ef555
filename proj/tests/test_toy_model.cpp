#include "oqs/errors.hpp"
#include "oqs/integrator.hpp"
#include "oqs/oracle.hpp"
#include "oqs/toy_model.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace oqs;
using namespace oqs::toy;
using hilbert::max_abs;

namespace {

OperatorSet grid_ops(int dim, double extent, double hbar = 1.0) {
    hilbert::SpaceSpec s;
    s.dim = dim;
    s.grid_extent = extent;
    s.hbar = hbar;
    return hilbert::make_operator_set(s);
}

// DFT matrix with p = F^† diag(hbar k) F on the grid
Matrix dft(const OperatorSet& ops) {
    const auto xs = ops.spec.grid_points();
    const auto ks = ops.spec.wavenumbers();
    const int n = ops.dim();
    Matrix F(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) F(j, k) = std::polar(1.0 / std::sqrt(double(n)), -ks[j] * xs[k]);
    return F;
}

} // namespace

TEST_CASE("toy Hamiltonians") {
    const OperatorSet o1 = grid_ops(12, 4.0), o2 = grid_ops(10, 3.0);
    ToyParams p;
    SUBCASE("g = 0 decouples and H' = H") {
        p.g = 0.0;
        const Matrix H = hamiltonian_L(p, o1, o2);
        const Matrix free = hilbert::tensor(o1.p2 / 2.0, o2.id) + hilbert::tensor(o1.id, o2.p2 / 2.0);
        CHECK(max_abs(H - free) <= 1e-14);
        CHECK(max_abs(hamiltonian_Lprime(p, o1, o2) - H) <= 1e-14);
    }
    SUBCASE("Hermitian") {
        p.g = 0.3;
        CHECK(hilbert::hermiticity_error(hamiltonian_L(p, o1, o2)) <= 1e-12);
        CHECK(hilbert::hermiticity_error(hamiltonian_Lprime(p, o1, o2)) <= 1e-12);
    }
    SUBCASE("dimension/hbar mismatch") {
        const OperatorSet o3 = grid_ops(10, 3.0, 2.0);
        CHECK_THROWS_AS(hamiltonian_L(p, o1, o3), DimensionError);
    }
}

TEST_CASE("energy of a product Gaussian matches the moment evaluation") {
    const OperatorSet o1 = grid_ops(48, 9.0), o2 = grid_ops(48, 9.0);
    ToyParams p;
    p.g = 0.2;
    p.m1 = 1.3;
    p.m2 = 0.7;
    InitialStateSpec spec;
    spec.mean_x = 0.4;
    spec.mean_p = -0.3;
    spec.width = 0.9;
    const Vector psi = build_initial_vector(spec, p, o1, o2);
    const double e_dense = psi.dot(hamiltonian_L(p, o1, o2) * psi).real();
    const auto m = oracle::initial_moments(spec, p);
    auto second = [&](int a) { return m.cov(a, a) + m.mean[a] * m.mean[a]; };
    const double e_mom = second(1) / (2 * p.m1) + p.g * p.g * second(0) / (2 * p.m2) + second(3) / (2 * p.m2) -
                         p.g / p.m2 * (m.cov(0, 3) + m.mean[0] * m.mean[3]);
    CHECK(e_dense == doctest::Approx(e_mom).epsilon(1e-10));
}

TEST_CASE("gauge unitary T") {
    ToyParams p;
    SUBCASE("grid entry") {
        const OperatorSet o1 = grid_ops(16, 4.0), o2 = grid_ops(16, 4.0); // points include 1 and 2
        const Matrix T = unitary_T(p, o1, o2);
        const int i = 10, j = 12; // x1 = -4 + 10*0.5 = 1, x2 = 2
        REQUIRE(o1.x(i, i).real() == 1.0);
        REQUIRE(o2.x(j, j).real() == 2.0);
        const cplx v = T(i * 16 + j, i * 16 + j);
        CHECK(v.real() == doctest::Approx(0.98007).epsilon(1e-5));
        CHECK(v.imag() == doctest::Approx(-0.19867).epsilon(1e-5));
        CHECK(max_abs(T.adjoint() * T - Matrix::Identity(256, 256)) <= 1e-12);
    }
    SUBCASE("g = 0 gives the identity, also on fock bases") {
        p.g = 0.0;
        hilbert::SpaceSpec f;
        f.kind = hilbert::BasisKind::fock;
        f.dim = 6;
        const OperatorSet o = hilbert::make_operator_set(f);
        CHECK(max_abs(unitary_T(p, o, o) - Matrix::Identity(36, 36)) <= 1e-12);
        p.g = 0.4;
        const Matrix T = unitary_T(p, o, o);
        CHECK(max_abs(T.adjoint() * T - Matrix::Identity(36, 36)) <= 1e-12);
    }
    SUBCASE("H' = T H T^dagger on the interior") {
        p.g = 0.1;
        const OperatorSet o1 = grid_ops(32, 8.0), o2 = grid_ops(32, 8.0);
        const Matrix T = unitary_T(p, o1, o2);
        const Matrix P = hilbert::tensor(hilbert::interior_projector(o1.spec), hilbert::interior_projector(o2.spec));
        const Matrix d = hamiltonian_Lprime(p, o1, o2) - T * hamiltonian_L(p, o1, o2) * T.adjoint();
        CHECK(max_abs(P * d * P) <= 1e-6);
    }
}

TEST_CASE("master equation for L") {
    const OperatorSet o = grid_ops(32, 8.0);
    const EnvStats env;
    ToyParams p;
    std::mt19937_64 rng(41);
    const Matrix rho = testing_support::random_hermitian(32, rng);
    SUBCASE("g = 0 is von Neumann") {
        p.g = 0.0;
        const Matrix H = o.p2 / 2.0;
        CHECK(max_abs(master_rhs_L(rho, o, p, env, 1.5) - cplx(0, -1) * (H * rho - rho * H)) <= 1e-12);
    }
    SUBCASE("trace-free, Hermiticity-preserving") {
        const Matrix d = master_rhs_L(rho, o, p, env, 2.0);
        CHECK(std::abs(d.trace()) <= 1e-12);
        CHECK(hilbert::hermiticity_error(d) <= 1e-12);
    }
    SUBCASE("position-diffusion term is the entrywise (x-x')² multiplier") {
        const double t = 1.7;
        auto gen = generator_L(p, env, t);
        auto without = gen;
        std::erase_if(without.terms, [](const auto& term) { return term.role == quadratic::TermRole::position_diffusion; });
        const Matrix diff = gen.apply(o, rho) - without.apply(o, rho);
        const double c = p.g * p.g * env.var_p2 * t;
        double err = 0.0;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                const double dx = o.x(i, i).real() - o.x(j, j).real();
                err = std::max(err, std::abs(diff(i, j) + c * dx * dx * rho(i, j)));
            }
        CHECK(err <= 1e-12);
    }
    SUBCASE("negative time is rejected") { CHECK_THROWS_AS(master_rhs_L(rho, o, p, env, -0.1), InvalidParameter); }
}

TEST_CASE("master equation for L'") {
    const OperatorSet o = grid_ops(32, 8.0);
    EnvStats env{0.6, 0.5, 0.2};
    ToyParams p;
    p.g = 0.15;
    std::mt19937_64 rng(43);
    const Matrix rho = testing_support::random_hermitian(32, rng);
    SUBCASE("g = 0 is free von Neumann") {
        p.g = 0.0;
        const Matrix H = o.p2 / 2.0;
        CHECK(max_abs(master_rhs_Lprime(rho, o, p, env, 1.5) - cplx(0, -1) * (H * rho - rho * H)) <= 1e-12);
    }
    SUBCASE("trace-free, Hermiticity-preserving") {
        const Matrix d = master_rhs_Lprime(rho, o, p, env, 2.0);
        CHECK(std::abs(d.trace()) <= 1e-12);
        CHECK(hilbert::hermiticity_error(d) <= 1e-12);
    }
    SUBCASE("momentum-basis off-diagonals decay at the (p-p')² rate") {
        const double t = 1.3;
        const Matrix F = dft(o);
        const auto ks = o.spec.wavenumbers();
        const Matrix rt = F * rho * F.adjoint();
        const Matrix dt = F * master_rhs_Lprime(rho, o, p, env, t) * F.adjoint();
        const double kin = (1.0 - p.g * p.g * t * t / 2.0) / 2.0;
        const double C = p.g * p.g * (t * env.var_x2 + t * t * t * env.var_p2 / 2.0 + 3.0 * t * t * env.sym_xp / 4.0);
        double err = 0.0;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                const double dp = ks[i] - ks[j];
                const cplx expect = (cplx(0, -1) * kin * (ks[i] * ks[i] - ks[j] * ks[j]) - C * dp * dp) * rt(i, j);
                err = std::max(err, std::abs(dt(i, j) - expect));
            }
        CHECK(err <= 1e-10);
    }
}

TEST_CASE("analytic means") {
    ToyParams p;
    SUBCASE("free particle at rest") {
        p.g = 0.0;
        const Means m = analytic_means_L(p, 1.0, 0.0, 7.0);
        CHECK(m.x == 1.0);
        CHECK(m.p == 0.0);
    }
    SUBCASE("quarter period of L") {
        const double t = 5.0 * std::numbers::pi;
        const Means m = analytic_means_L(p, 1.0, 0.0, t);
        CHECK(std::abs(m.x) <= 1e-14);
        CHECK(m.p == doctest::Approx(-0.1).epsilon(1e-13));
        // independent oracle: RK4 on x' = p/m1, p' = -g² x/m2 (the p2 drive averages to zero)
        Eigen::Vector2d y(1.0, 0.0);
        rk4(y, 0.0, t, 1e-3, [&](double, const Eigen::Vector2d& v) {
            return Eigen::Vector2d(v[1] / p.m1, -p.g * p.g * v[0] / p.m2);
        });
        CHECK(std::abs(y[0] - m.x) <= 1e-12);
        CHECK(std::abs(y[1] - m.p) <= 1e-12);
    }
    SUBCASE("energy-like invariant") {
        const double w = 0.1;
        for (double t : {0.0, 3.0, 17.0, 40.0}) {
            const Means m = analytic_means_L(p, 0.7, 0.3, t);
            CHECK(w * w * m.x * m.x + m.p * m.p == doctest::Approx(w * w * 0.49 + 0.09).epsilon(1e-13));
        }
    }
    SUBCASE("L' means") {
        CHECK(analytic_means_Lprime(p, 0.4, 0.0, 9.0).x == 0.4);
        const Means m = analytic_means_Lprime(p, 0.0, 1.0, 2.0);
        CHECK(m.x == doctest::Approx(1.98667).epsilon(1e-5));
        CHECK(m.x == doctest::Approx(2.0 - 0.01 * 8.0 / 6.0).epsilon(1e-15));
        CHECK(m.p == 1.0);
    }
    SUBCASE("transformed-state means in L") {
        const Means m = analytic_means_L_transformed(p, 0.0, 1.0, 2.0);
        CHECK(m.p == doctest::Approx(0.98).epsilon(1e-14));
        for (double t : {1.0, 2.0, 5.0}) {
            const double a = analytic_means_L_transformed(p, 0.3, 1.0, t).x;
            const double b = analytic_means_Lprime(p, 0.3, 1.0, t).x;
            CHECK(std::abs(a - b) <= 1e-12 * std::abs(b));
        }
    }
}

TEST_CASE("initial states") {
    const OperatorSet o1 = grid_ops(40, 9.0), o2 = grid_ops(24, 7.0);
    ToyParams p;
    p.g = 0.2;
    InitialStateSpec spec;
    spec.mean_x = 0.5;
    spec.mean_p = 0.4;
    spec.width = 1.1;
    const Vector psi1 = particle1_state(spec, o1);
    const Matrix rho1 = psi1 * psi1.adjoint();
    SUBCASE("product state reduces to the particle-1 Gaussian") {
        const auto rho = build_initial_state(spec, p, o1, &o2);
        CHECK(rho.dims() == std::vector<int>{40, 24});
        CHECK(max_abs(hilbert::partial_trace_second(rho).data() - rho1) <= 1e-14);
        CHECK(rho.check().ok());
    }
    SUBCASE("transformed state") {
        spec.transformed = true;
        const auto rho_t = build_initial_state(spec, p, o1, &o2);
        const Matrix r1 = hilbert::partial_trace_second(rho_t).data();
        // populations are untouched; coherences pick up the characteristic
        // function of x2, sum_k |psi2(x2_k)|² exp(i g (x1 - x1') x2_k / hbar)
        CHECK((r1.diagonal() - rho1.diagonal()).cwiseAbs().maxCoeff() <= 1e-14);
        const Vector psi2 = environment_state(spec.env, o2);
        double err = 0.0;
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 40; ++j) {
                cplx chi = 0.0;
                for (int k = 0; k < 24; ++k)
                    chi += std::norm(psi2[k]) *
                           std::polar(1.0, p.g * (o1.x(i, i) - o1.x(j, j)).real() * o2.x(k, k).real());
                err = std::max(err, std::abs(r1(i, j) - rho1(i, j) * chi));
            }
        CHECK(err <= 1e-14);
        CHECK(max_abs(r1 - rho1) > 1e-3); // the coherences really do change
        ToyParams p0 = p;
        p0.g = 0.0;
        spec.transformed = false;
        const auto plain = build_initial_state(spec, p0, o1, &o2);
        spec.transformed = true;
        CHECK(max_abs(build_initial_state(spec, p0, o1, &o2).data() - plain.data()) == 0.0);
        // rho -> T^† rho T
        const Matrix T = unitary_T(p, o1, o2);
        spec.transformed = false;
        const auto prod = build_initial_state(spec, p, o1, &o2);
        CHECK(max_abs(T.adjoint() * prod.data() * T - rho_t.data()) <= 1e-14);
    }
    SUBCASE("mixed environment") {
        spec.env = {0.9, 0.6, 0.1};
        CHECK_THROWS_AS(build_initial_vector(spec, p, o1, o2), InvalidParameter);
        const auto rho = build_initial_state(spec, p, o1, &o2);
        CHECK(rho.check().ok());
        const auto m = oracle::measure_moments(rho, o1, o2);
        CHECK(m.cov(2, 2) == doctest::Approx(0.6).epsilon(1e-5));
        CHECK(m.cov(3, 3) == doctest::Approx(0.9).epsilon(1e-5));
        CHECK(m.cov(2, 3) == doctest::Approx(0.05).epsilon(1e-5));
        CHECK(rho.purity() < 1.0 - 1e-3);
    }
    SUBCASE("invalid environment") {
        spec.env = {0.1, 0.1, 0.0};
        CHECK_THROWS_AS(build_initial_state(spec, p, o1, &o2), InvalidParameter);
    }
    SUBCASE("cat state is normalized and symmetric") {
        spec.cat_separation = 4.0;
        spec.mean_x = 0.0;
        spec.mean_p = 0.0;
        const Vector c = particle1_state(spec, o1);
        CHECK(c.norm() == doctest::Approx(1.0));
        const auto m = quadratic::moments_of(o1, c * c.adjoint());
        CHECK(std::abs(m.x) <= 1e-8); // grid is not exactly mirror-symmetric
        CHECK(m.xx > 4.0);
    }
    SUBCASE("fock basis projection reproduces the Gaussian moments") {
        hilbert::SpaceSpec f;
        f.kind = hilbert::BasisKind::fock;
        f.dim = 40;
        const OperatorSet of = hilbert::make_operator_set(f);
        const Vector v = particle1_state(spec, of);
        const auto m = quadratic::moments_of(of, v * v.adjoint());
        CHECK(m.x == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(m.p == doctest::Approx(0.4).epsilon(1e-9));
        CHECK(m.var_x() == doctest::Approx(1.21).epsilon(1e-9));
    }
}
