#include "oqs/brem.hpp"
#include "oqs/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace oqs::brem {

using kernels::MathConstants;
using quadratic::QuadraticGenerator;
using quadratic::TermKind;
using quadratic::TermRole;
using std::numbers::pi;

void BremFlags::validate() const {
    if (include_dressing_term && !include_xp_term)
        throw InvalidParameter("BremFlags: include_dressing_term requires include_xp_term");
}

double renormalized_frequency(const KernelParams& kp, double omega_max) {
    const double rad = 1.0 - 4.0 * kp.alpha * kp.hbar * omega_max / (3.0 * pi * kp.m * kp.c * kp.c);
    if (!(rad > 0.0)) {
        std::ostringstream os;
        os << "renormalized_frequency: 1 - 4 alpha hbar omega_max/(3 pi m c^2) = " << rad << " <= 0";
        throw RegimeError(os.str());
    }
    return kp.Omega * std::sqrt(rad);
}

namespace {

// eps entering the logarithm
double log_eps(const KernelParams& kp, const BremFlags& flags) {
    return flags.regularize_log ? kp.hbar / (kp.m * kp.c * kp.c) : kp.eps;
}

} // namespace

double xp_coefficient(const KernelParams& kp, const BremFlags& flags) {
    flags.validate();
    if (!flags.include_xp_term) return 0.0;
    const double w2 = kp.Omega * kp.Omega;
    double inner = -(w2 / (3.0 * pi)) * std::log(log_eps(kp, flags) * kp.Omega) -
                   MathConstants::gamma_e * w2 / (3.0 * pi);
    if (flags.include_dressing_term) inner += 1.0 / (3.0 * pi * kp.eps * kp.eps);
    return 2.0 * kp.alpha / (kp.m * kp.c * kp.c) * inner;
}

QuadraticGenerator brem_generator(const KernelParams& kp, const BremFlags& flags) {
    kp.validate();
    flags.validate();
    const double c2 = kp.c * kp.c, W = kp.Omega;
    QuadraticGenerator gen;
    gen.hbar = kp.hbar;
    gen.hamiltonian = {0.5 * kp.m * W * W, 1.0 / (2.0 * kp.m), 0.0};
    gen.terms.push_back({TermKind::commutator_anticommutator, TermRole::friction,
                         cplx(0.0, -kp.alpha * W * W / (3.0 * kp.m * c2)), {1.0, 0.0}, {0.0, 1.0}});
    gen.terms.push_back({TermKind::double_commutator, TermRole::position_diffusion,
                         -kp.alpha * W * W * W / (3.0 * c2), {1.0, 0.0}, {1.0, 0.0}});
    if (flags.include_xp_term)
        gen.terms.push_back({TermKind::double_commutator, TermRole::cross_diffusion, -xp_coefficient(kp, flags),
                             {1.0, 0.0}, {0.0, 1.0}});
    return gen;
}

QuadraticGenerator decoherence_only_generator(const KernelParams& kp) {
    QuadraticGenerator gen = brem_generator(kp, {});
    std::erase_if(gen.terms, [](const auto& t) { return t.role != TermRole::position_diffusion; });
    return gen;
}

Matrix brem_master_rhs(const Matrix& rho, const hilbert::OperatorSet& ops, const KernelParams& kp,
                       const BremFlags& flags) {
    const auto& s = ops.spec;
    if (s.kind != hilbert::BasisKind::fock || std::abs(s.omega_ref - kp.Omega) > 1e-12 * std::max(1.0, kp.Omega) ||
        std::abs(s.mass - kp.m) > 1e-12 * kp.m || std::abs(s.hbar - kp.hbar) > 1e-12 * kp.hbar)
        throw DimensionError("brem_master_rhs: basis mismatch (expected a fock basis with omega_ref = Omega, "
                             "mass = m, hbar = hbar)");
    return brem_generator(kp, flags).apply(ops, rho);
}

BremMoments moment_rhs(const BremMoments& m, const KernelParams& kp, const BremFlags& flags) {
    flags.validate();
    const double a = kp.alpha, hb = kp.hbar, M = kp.m, c2 = kp.c * kp.c, W = kp.Omega, W2 = W * W;
    BremMoments d;
    d.xx = m.xp / M;
    d.pp = -M * W2 * m.xp - (4.0 * a * hb * W2 / (3.0 * M * c2)) * m.pp + 2.0 * a * hb * hb * W2 * W / (3.0 * c2);
    d.xp = 2.0 * m.pp / M - 2.0 * M * W2 * m.xx - (2.0 * a * hb * W2 / (3.0 * M * c2)) * m.xp;
    if (flags.include_xp_term) {
        const double k = 4.0 * a * hb * hb * W2 / (3.0 * pi * M * c2);
        d.xp += k * MathConstants::gamma_e + k * std::log(log_eps(kp, flags) * W);
        if (flags.include_dressing_term)
            d.xp -= 4.0 * a * hb * hb / (3.0 * pi * M * c2 * kp.eps * kp.eps);
    }
    return d;
}

BremMoments stationary_variances(const KernelParams& kp, const BremFlags& flags) {
    flags.validate();
    if (!(kp.Omega > 0.0)) throw InvalidParameter("stationary_variances: Omega must be > 0");
    const double hb = kp.hbar, M = kp.m, W = kp.Omega, c2 = kp.c * kp.c;
    BremMoments s;
    s.pp = M * hb * W / 2.0;
    s.xp = 0.0;
    // (1/2) m W² xx = hbar W / 4 + (constant part of d⟨{x,p}⟩/dt) / 4
    double quarter = hb * W / 4.0;
    if (flags.include_xp_term) {
        quarter += (kp.alpha * hb * W / (3.0 * pi)) * (hb * W / (M * c2)) *
                   (MathConstants::gamma_e + std::log(log_eps(kp, flags) * W));
        if (flags.include_dressing_term)
            quarter -= kp.alpha * hb * hb / (3.0 * pi * M * c2 * kp.eps * kp.eps);
    }
    s.xx = 2.0 * quarter / (M * W * W);
    return s;
}

double decoherence_rate(double delta_x, const KernelParams& kp) {
    if (!(delta_x > 0.0)) throw InvalidParameter("decoherence_rate: delta_x must be > 0");
    return kp.alpha * kp.Omega * kp.Omega * kp.Omega / (3.0 * kp.c * kp.c) * delta_x * delta_x;
}

CaldeiraLeggettCoefficients caldeira_leggett_form(const QuadraticGenerator& gen) {
    CaldeiraLeggettCoefficients out;
    bool have_friction = false, have_diffusion = false;
    for (const auto& t : gen.terms) {
        const bool x_outer = t.outer.x != 0.0 && t.outer.p == 0.0;
        if (t.role == TermRole::friction && t.kind == TermKind::commutator_anticommutator && x_outer &&
            t.inner.x == 0.0 && t.inner.p != 0.0) {
            // coeff [a x, {b p, rho}] = -(i eta/2m) [x,{p,rho}]
            out.eta_over_2m += -(t.coeff * t.outer.x * t.inner.p).imag();
            have_friction = true;
        } else if (t.role == TermRole::position_diffusion && t.kind == TermKind::double_commutator && x_outer &&
                   t.inner.x != 0.0 && t.inner.p == 0.0) {
            out.lambda_over_hbar += -(t.coeff * t.outer.x * t.inner.x).real();
            have_diffusion = true;
        } else if (t.coeff != 0.0) {
            throw InvalidOperator("caldeira_leggett_form: generator has a " + quadratic::to_string(t.role) +
                                  " term outside the Caldeira–Leggett structure");
        }
    }
    if (!have_friction || !have_diffusion)
        throw InvalidOperator("caldeira_leggett_form: generator lacks a friction or position-diffusion term");
    return out;
}

Vector cat_state(double delta_x, const hilbert::OperatorSet& ops) {
    const auto& s = ops.spec;
    if (s.kind != hilbert::BasisKind::fock) throw DimensionError("cat_state: needs a fock basis");
    if (!(delta_x > 0.0)) throw InvalidParameter("cat_state: delta_x must be > 0");
    // <x> of |beta> is sqrt(2 hbar/(m w)) beta
    const double beta = 0.5 * delta_x / std::sqrt(2.0 * s.hbar / (s.mass * s.omega_ref));
    Vector v = Vector::Zero(s.dim);
    double c = std::exp(-0.5 * beta * beta);
    for (int n = 0; n < s.dim; ++n) {
        if (n > 0) c *= beta / std::sqrt(static_cast<double>(n));
        if (n % 2 == 0) v[n] = 2.0 * c; // odd components cancel between ±beta
    }
    return v / v.norm();
}

cplx position_element(const Matrix& rho, const hilbert::OperatorSet& ops, double x, double xprime) {
    const auto& s = ops.spec;
    if (s.kind != hilbert::BasisKind::fock) throw DimensionError("position_element: needs a fock basis");
    const RealMatrix phi = hilbert::hermite_functions({x, xprime}, s.dim, s.mass, s.omega_ref, s.hbar);
    const Vector a = phi.row(0).transpose().cast<cplx>();
    const Vector b = phi.row(1).transpose().cast<cplx>();
    return a.transpose() * rho * b;
}

} // namespace oqs::brem
