#include "oqs/toy_model.hpp"
#include "oqs/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace oqs::toy {

using hilbert::BasisKind;
using hilbert::tensor;
using quadratic::DissipatorTerm;
using quadratic::QuadraticGenerator;
using quadratic::TermKind;
using quadratic::TermRole;

void ToyParams::validate() const {
    if (!(m1 > 0.0) || !(m2 > 0.0)) throw InvalidParameter("ToyParams: masses must be > 0");
    if (!(hbar > 0.0)) throw InvalidParameter("ToyParams: hbar must be > 0");
    if (!std::isfinite(g)) throw InvalidParameter("ToyParams: g must be finite");
}

void EnvStats::validate(double hbar) const {
    if (!(var_p2 >= 0.0) || !(var_x2 >= 0.0))
        throw InvalidParameter("EnvStats: variances must be >= 0");
    const double lhs = var_p2 * var_x2;
    const double rhs = 0.25 * hbar * hbar + 0.25 * sym_xp * sym_xp;
    if (lhs < rhs - 1e-10)
        throw InvalidParameter("EnvStats: second moments violate the uncertainty relation (var_x var_p = " +
                               std::to_string(lhs) + " < " + std::to_string(rhs) + ")");
}

bool EnvStats::is_pure(double hbar) const {
    return std::abs(var_p2 * var_x2 - 0.25 * sym_xp * sym_xp - 0.25 * hbar * hbar) <= 1e-10;
}

void InitialStateSpec::validate(double hbar) const {
    if (!(width > 0.0)) throw InvalidParameter("InitialStateSpec: width must be > 0");
    if (cat_separation && !(*cat_separation > 0.0))
        throw InvalidParameter("InitialStateSpec: cat separation must be > 0");
    if (phase_sign != 1 && phase_sign != -1)
        throw InvalidParameter("InitialStateSpec: phase_sign must be +1 or -1");
    env.validate(hbar);
}

namespace {

void check_pair(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2) {
    params.validate();
    if (ops1.spec.hbar != params.hbar || ops2.spec.hbar != params.hbar)
        throw DimensionError("toy model: operator sets were built with a different hbar");
}

} // namespace

Matrix hamiltonian_L(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2) {
    check_pair(params, ops1, ops2);
    const double g = params.g, m1 = params.m1, m2 = params.m2;
    Matrix h1 = ops1.p2 / (2.0 * m1) + (g * g / (2.0 * m2)) * ops1.x2;
    Matrix H = tensor(h1, ops2.id) + tensor(ops1.id, ops2.p2 / (2.0 * m2));
    if (g != 0.0) H -= (g / m2) * tensor(ops1.x, ops2.p);
    return H;
}

Matrix hamiltonian_Lprime(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2) {
    check_pair(params, ops1, ops2);
    const double g = params.g, m1 = params.m1, m2 = params.m2;
    Matrix h2 = ops2.p2 / (2.0 * m2) + (g * g / (2.0 * m1)) * ops2.x2;
    Matrix H = tensor(ops1.p2 / (2.0 * m1), ops2.id) + tensor(ops1.id, h2);
    if (g != 0.0) H += (g / m1) * tensor(ops1.p, ops2.x);
    return H;
}

Matrix unitary_T(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2) {
    check_pair(params, ops1, ops2);
    const int n1 = ops1.dim(), n2 = ops2.dim();
    const double k = -params.g / params.hbar;
    if (ops1.x_is_diagonal() && ops2.x_is_diagonal()) {
        Matrix T = Matrix::Zero(n1 * n2, n1 * n2);
        for (int i = 0; i < n1; ++i)
            for (int j = 0; j < n2; ++j)
                T(i * n2 + j, i * n2 + j) = std::polar(1.0, k * ops1.x(i, i).real() * ops2.x(j, j).real());
        return T;
    }
    // exp(-i g x1⊗x2/hbar) diagonalizes in the product of the x eigenbases
    Eigen::SelfAdjointEigenSolver<Matrix> e1(ops1.x), e2(ops2.x);
    Matrix V = tensor(e1.eigenvectors(), e2.eigenvectors());
    Vector ph(n1 * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            ph[i * n2 + j] = std::polar(1.0, k * e1.eigenvalues()[i] * e2.eigenvalues()[j]);
    return V * ph.asDiagonal() * V.adjoint();
}

double position_decoherence_coefficient(const ToyParams& params, const EnvStats& env, double t) {
    const double c = params.g * params.g * env.var_p2 /
                     (params.hbar * params.hbar * params.m2 * params.m2);
    return c * t;
}

double momentum_decoherence_coefficient(const ToyParams& params, const EnvStats& env, double t) {
    const double m2 = params.m2;
    const double a = t * env.var_x2 + t * t * t * env.var_p2 / (2.0 * m2 * m2) +
                     3.0 * t * t * env.sym_xp / (4.0 * m2);
    return params.g * params.g * a / (params.hbar * params.hbar * params.m1 * params.m1);
}

QuadraticGenerator generator_L(const ToyParams& params, const EnvStats& env, double t) {
    params.validate();
    if (!(t >= 0.0)) throw InvalidParameter("generator_L: t must be >= 0");
    const double c = params.g * params.g * env.var_p2 /
                     (params.hbar * params.hbar * params.m2 * params.m2);
    QuadraticGenerator gen;
    gen.hbar = params.hbar;
    gen.hamiltonian = {params.g * params.g / (2.0 * params.m2), 1.0 / (2.0 * params.m1), 0.0};
    // -c ( t [x,[x,rho]] - t²/(2 m1) [x,[p,rho]] )
    gen.terms.push_back({TermKind::double_commutator, TermRole::position_diffusion, -c * t, {1.0, 0.0}, {1.0, 0.0}});
    gen.terms.push_back({TermKind::double_commutator, TermRole::cross_diffusion,
                         c * t * t / (2.0 * params.m1), {1.0, 0.0}, {0.0, 1.0}});
    return gen;
}

QuadraticGenerator generator_Lprime(const ToyParams& params, const EnvStats& env, double t) {
    params.validate();
    if (!(t >= 0.0)) throw InvalidParameter("generator_Lprime: t must be >= 0");
    QuadraticGenerator gen;
    gen.hbar = params.hbar;
    const double kin = (1.0 - params.g * params.g * t * t / (2.0 * params.m1 * params.m2)) / (2.0 * params.m1);
    gen.hamiltonian = {0.0, kin, 0.0};
    gen.terms.push_back({TermKind::double_commutator, TermRole::momentum_diffusion,
                         -momentum_decoherence_coefficient(params, env, t), {0.0, 1.0}, {0.0, 1.0}});
    return gen;
}

Matrix master_rhs_L(const Matrix& rho1, const OperatorSet& ops1, const ToyParams& params,
                    const EnvStats& env, double t) {
    return generator_L(params, env, t).apply(ops1, rho1);
}

Matrix master_rhs_Lprime(const Matrix& rho1, const OperatorSet& ops1, const ToyParams& params,
                         const EnvStats& env, double t) {
    return generator_Lprime(params, env, t).apply(ops1, rho1);
}

Means analytic_means_L(const ToyParams& params, double x0, double p0, double t) {
    if (params.g == 0.0) return {x0 + p0 * t / params.m1, p0};
    const double w = std::abs(params.g) / std::sqrt(params.m1 * params.m2);
    const double c = std::cos(w * t), s = std::sin(w * t);
    return {x0 * c + p0 / (params.m1 * w) * s, p0 * c - params.m1 * w * x0 * s};
}

Means analytic_means_Lprime(const ToyParams& params, double x0, double pprime0, double t) {
    const double k = params.g * params.g / (params.m1 * params.m2);
    return {x0 + pprime0 / params.m1 * (t - k * t * t * t / 6.0), pprime0};
}

Means analytic_means_L_transformed(const ToyParams& params, double x0, double p0, double t) {
    const double k = params.g * params.g / (params.m1 * params.m2);
    return {x0 + p0 / params.m1 * (t - k * t * t * t / 6.0), (1.0 - 0.5 * k * t * t) * p0};
}

namespace {

// Samples f on the basis of ops: pointwise on grids, by quadrature
// against Hermite functions on fock bases. Result is normalized.
Vector sample_state(const std::function<cplx(double)>& f, double lo, double hi, double min_scale,
                    const OperatorSet& ops) {
    const auto& s = ops.spec;
    Vector v(s.dim);
    if (s.kind == BasisKind::grid) {
        const auto xs = s.grid_points();
        for (int k = 0; k < s.dim; ++k) v[k] = f(xs[k]);
    } else {
        const double ell = std::sqrt(s.hbar / (s.mass * s.omega_ref));
        const double h = std::min(min_scale / 8.0, ell / (2.0 * std::sqrt(2.0 * s.dim + 1.0)));
        const int npts = static_cast<int>(std::ceil((hi - lo) / h)) + 1;
        std::vector<double> xs(static_cast<std::size_t>(npts));
        for (int k = 0; k < npts; ++k) xs[k] = lo + (hi - lo) * k / (npts - 1);
        const double dx = (hi - lo) / (npts - 1);
        const RealMatrix phi = hilbert::hermite_functions(xs, s.dim, s.mass, s.omega_ref, s.hbar);
        Vector fx(npts);
        for (int k = 0; k < npts; ++k) fx[k] = f(xs[k]);
        v = phi.transpose().cast<cplx>() * fx * dx;
    }
    const double nrm = v.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm))
        throw NumericalFailure("initial state: wavefunction has zero norm on this basis");
    return v / nrm;
}

// Gaussian kernel parameters: rho(x,x') = exp(-R²/(2 s2) - beta r²/2 + i gamma R r)
struct EnvKernel {
    double s2, beta, gamma;
};

EnvKernel env_kernel(const EnvStats& env, double hbar) {
    const double s2 = env.var_x2;
    const double gamma = env.sym_xp / (2.0 * hbar * s2);
    const double beta = (env.var_p2 - hbar * hbar * gamma * gamma * s2) / (hbar * hbar);
    return {s2, beta, gamma};
}

} // namespace

Vector particle1_state(const InitialStateSpec& spec, const OperatorSet& ops1) {
    const double hbar = ops1.spec.hbar;
    const double x0 = spec.mean_x, p0 = spec.mean_p, sig = spec.width;
    const double half = spec.cat_separation ? 0.5 * *spec.cat_separation : 0.0;
    auto f = [=](double x) {
        auto g = [&](double c) { return std::exp(-(x - c) * (x - c) / (4.0 * sig * sig)); };
        const double amp = spec.cat_separation ? g(x0 - half) + g(x0 + half) : g(x0);
        return amp * std::polar(1.0, p0 * x / hbar);
    };
    double scale = sig;
    if (p0 != 0.0) scale = std::min(scale, hbar / std::abs(p0));
    const double reach = half + 14.0 * sig;
    return sample_state(f, x0 - reach, x0 + reach, scale, ops1);
}

Matrix environment_density(const EnvStats& env, const OperatorSet& ops2) {
    const double hbar = ops2.spec.hbar;
    env.validate(hbar);
    const EnvKernel k = env_kernel(env, hbar);
    auto kernel = [&](double x, double y) {
        const double R = 0.5 * (x + y), r = x - y;
        return std::exp(-R * R / (2.0 * k.s2) - 0.5 * k.beta * r * r) * std::polar(1.0, k.gamma * R * r);
    };
    const auto& s = ops2.spec;
    Matrix rho(s.dim, s.dim);
    if (s.kind == BasisKind::grid) {
        const auto xs = s.grid_points();
        for (int j = 0; j < s.dim; ++j)
            for (int i = 0; i < s.dim; ++i) rho(i, j) = kernel(xs[i], xs[j]);
    } else {
        const double sd = std::sqrt(k.s2);
        const double ell = std::sqrt(s.hbar / (s.mass * s.omega_ref));
        const double lo = -14.0 * sd, hi = 14.0 * sd;
        const double h = std::min(std::min(sd, 1.0 / std::sqrt(k.beta)) / 8.0,
                                  ell / (2.0 * std::sqrt(2.0 * s.dim + 1.0)));
        const int npts = static_cast<int>(std::ceil((hi - lo) / h)) + 1;
        std::vector<double> xs(static_cast<std::size_t>(npts));
        for (int q = 0; q < npts; ++q) xs[q] = lo + (hi - lo) * q / (npts - 1);
        const double dx = (hi - lo) / (npts - 1);
        const Matrix phi = hilbert::hermite_functions(xs, s.dim, s.mass, s.omega_ref, s.hbar).cast<cplx>();
        Matrix K(npts, npts);
        for (int j = 0; j < npts; ++j)
            for (int i = 0; i < npts; ++i) K(i, j) = kernel(xs[i], xs[j]);
        rho = phi.transpose() * K * phi * (dx * dx);
    }
    rho = 0.5 * (rho + rho.adjoint());
    return rho / rho.trace().real();
}

Vector environment_state(const EnvStats& env, const OperatorSet& ops2) {
    const double hbar = ops2.spec.hbar;
    env.validate(hbar);
    if (!env.is_pure(hbar)) throw InvalidParameter("environment_state: EnvStats describe a mixed state");
    const EnvKernel k = env_kernel(env, hbar);
    auto f = [&](double x) {
        return std::exp(-x * x / (4.0 * k.s2)) * std::polar(1.0, 0.5 * k.gamma * x * x);
    };
    const double sd = std::sqrt(k.s2);
    double scale = sd;
    if (k.gamma != 0.0) scale = std::min(scale, 1.0 / std::sqrt(std::abs(k.gamma)) / 4.0);
    return sample_state(f, -14.0 * sd, 14.0 * sd, scale, ops2);
}

namespace {

// Phase exp(sign * i g x1 x2 / hbar) on the composite (grids only).
Vector grid_phase(const ToyParams& params, const OperatorSet& ops1, const OperatorSet& ops2, int sign) {
    const int n1 = ops1.dim(), n2 = ops2.dim();
    Vector ph(n1 * n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            ph[i * n2 + j] = std::polar(1.0, sign * params.g * ops1.x(i, i).real() * ops2.x(j, j).real() / params.hbar);
    return ph;
}

} // namespace

Vector build_initial_vector(const InitialStateSpec& spec, const ToyParams& params,
                            const OperatorSet& ops1, const OperatorSet& ops2) {
    params.validate();
    spec.validate(params.hbar);
    check_pair(params, ops1, ops2);
    Vector psi = hilbert::tensor(particle1_state(spec, ops1), environment_state(spec.env, ops2));
    if (spec.transformed && params.g != 0.0) {
        if (ops1.x_is_diagonal() && ops2.x_is_diagonal()) {
            psi = psi.cwiseProduct(grid_phase(params, ops1, ops2, spec.phase_sign));
        } else {
            const Matrix T = unitary_T(params, ops1, ops2);
            psi = spec.phase_sign > 0 ? Vector(T.adjoint() * psi) : Vector(T * psi);
        }
    }
    return psi;
}

DensityMatrix build_initial_state(const InitialStateSpec& spec, const ToyParams& params,
                                  const OperatorSet& ops1, const OperatorSet* ops2) {
    params.validate();
    spec.validate(params.hbar);
    if (ops2 == nullptr) {
        // The transformation phase cancels in the reduced state, so the
        // particle-1 state alone is the same with or without it.
        return DensityMatrix::from_pure(particle1_state(spec, ops1), {ops1.dim()});
    }
    if (spec.env.is_pure(params.hbar))
        return DensityMatrix::from_pure(build_initial_vector(spec, params, ops1, *ops2),
                                        {ops1.dim(), ops2->dim()});
    check_pair(params, ops1, *ops2);
    const Vector psi1 = particle1_state(spec, ops1);
    Matrix rho = tensor(psi1 * psi1.adjoint(), environment_density(spec.env, *ops2));
    if (spec.transformed && params.g != 0.0) {
        if (ops1.x_is_diagonal() && ops2->x_is_diagonal()) {
            const Vector ph = grid_phase(params, ops1, *ops2, spec.phase_sign);
            rho = ph.asDiagonal() * rho * ph.conjugate().asDiagonal();
        } else {
            const Matrix T = unitary_T(params, ops1, *ops2);
            rho = spec.phase_sign > 0 ? Matrix(T.adjoint() * rho * T) : Matrix(T * rho * T.adjoint());
        }
    }
    return DensityMatrix(std::move(rho), {ops1.dim(), ops2->dim()});
}

} // namespace oqs::toy
