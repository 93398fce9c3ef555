#include "oqs/kernels.hpp"
#include "oqs/errors.hpp"
#include "oqs/quadrature.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace oqs::kernels {

using std::numbers::pi;

void KernelParams::validate() const {
    auto pos = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!pos(alpha) && alpha != 0.0) throw InvalidParameter("KernelParams: alpha must be >= 0");
    if (!pos(c)) throw InvalidParameter("KernelParams: c must be > 0");
    if (!pos(hbar)) throw InvalidParameter("KernelParams: hbar must be > 0");
    if (!pos(eps)) throw InvalidParameter("KernelParams: eps must be > 0");
    if (!pos(m)) throw InvalidParameter("KernelParams: m must be > 0");
    if (!(Omega >= 0.0) || !std::isfinite(Omega)) throw InvalidParameter("KernelParams: Omega must be >= 0");
}

double delta_eps(double tau, double eps, int order) {
    if (!(eps > 0.0)) throw InvalidParameter("delta_eps: eps must be > 0");
    const double e2 = eps * eps, t2 = tau * tau, s = t2 + e2;
    switch (order) {
    case 0: return eps / (pi * s);
    case 1: return -2.0 * eps * tau / (pi * s * s);
    case 2: return 2.0 * eps * (3.0 * t2 - e2) / (pi * s * s * s);
    case 3: return 24.0 * eps * tau * (e2 - t2) / (pi * s * s * s * s);
    default: throw InvalidParameter("delta_eps: derivative order must be 0..3");
    }
}

double noise_kernel_vac(double tau, const KernelParams& kp) {
    const double e2 = kp.eps * kp.eps, t2 = tau * tau, s = e2 + t2;
    const double num = e2 * e2 - 6.0 * e2 * t2 + t2 * t2;
    return 4.0 * kp.alpha * kp.hbar / (pi * kp.c * kp.c) * num / (s * s * s * s);
}

double dissipation_kernel(double tau, const KernelParams& kp) {
    if (tau < 0.0) return 0.0;
    return 4.0 * kp.hbar * kp.alpha / (3.0 * kp.c * kp.c) * delta_eps(tau, kp.eps, 3);
}

std::array<double, 2> noise_kernel_roots(double eps) {
    return {(std::numbers::sqrt2 - 1.0) * eps, (std::numbers::sqrt2 + 1.0) * eps};
}

std::array<double, 2> noise_kernel_roots_bracketed(const KernelParams& kp) {
    // N0 > 0 at 0, < 0 at eps, > 0 at 4 eps
    auto f = [&](double t) { return noise_kernel_vac(t, kp); };
    auto bisect = [&](double a, double b) {
        double fa = f(a);
        for (int i = 0; i < 200 && b - a > 1e-15 * kp.eps; ++i) {
            const double m = 0.5 * (a + b), fm = f(m);
            if ((fm > 0) == (fa > 0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        return 0.5 * (a + b);
    };
    return {bisect(0.0, kp.eps), bisect(kp.eps, 4.0 * kp.eps)};
}

double kernel_scale(const KernelParams& kp) {
    return 4.0 * kp.alpha / (pi * kp.c * kp.c * kp.eps * kp.eps * kp.eps);
}

std::vector<double> panel_breaks(double eps, double omega, double t) {
    std::vector<double> b{0.0};
    auto push = [&](double v) {
        if (v > b.back()) b.push_back(std::min(v, t));
    };
    for (int k = 1; k <= 10 && k * eps < t; ++k) push(k * eps);
    const double half = omega > 0.0 ? pi / omega : std::numeric_limits<double>::infinity();
    double x = b.back();
    // geometric growth while the panel would still be shorter than pi/omega
    while (x < t && x < half) {
        x = std::min(2.0 * x, half);
        push(x);
    }
    if (std::isfinite(half)) {
        for (double k = std::ceil(x / half + 1e-12); k * half < t; k += 1.0) push(k * half);
    }
    push(t);
    return b;
}

namespace {

IntegralResult panel_integral(const std::function<double(double)>& f, double eps, double omega, double t,
                              double scale) {
    const auto breaks = panel_breaks(eps, omega, t);
    quad::Options opt;
    opt.rel_tol = 1e-13;
    opt.abs_tol = 1e-12 * scale / static_cast<double>(breaks.size());
    opt.max_intervals = 2000;
    const quad::Result r = quad::integrate_panels(f, breaks, opt);
    return {r.value, r.abs_error, static_cast<int>(breaks.size()) - 1, r.evaluations};
}

void check_time(double t, const char* who) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidParameter(std::string(who) + ": t must be > 0");
}

} // namespace

IntegralResult noise_cos_integral(const KernelParams& kp, double t) {
    kp.validate();
    check_time(t, "noise_cos_integral");
    auto f = [&](double tau) { return noise_kernel_vac(tau, kp) * std::cos(kp.Omega * tau) / kp.hbar; };
    return panel_integral(f, kp.eps, kp.Omega, t, kernel_scale(kp));
}

IntegralResult noise_sin_integral(const KernelParams& kp, double t) {
    kp.validate();
    check_time(t, "noise_sin_integral");
    if (!(kp.Omega > 0.0)) throw InvalidParameter("noise_sin_integral: Omega must be > 0 (result divides by Omega)");
    const double pref = 1.0 / (kp.m * kp.hbar * kp.Omega);
    auto f = [&](double tau) { return pref * noise_kernel_vac(tau, kp) * std::sin(kp.Omega * tau); };
    // core magnitude: N0(0) * Omega eps² / (m hbar Omega)
    const double scale = kernel_scale(kp) * kp.eps / kp.m;
    return panel_integral(f, kp.eps, kp.Omega, t, scale);
}

double noise_cos_limit(const KernelParams& kp) {
    return kp.alpha * std::pow(kp.Omega, 3) * std::exp(-kp.eps * kp.Omega) / (3.0 * kp.c * kp.c);
}

SinLimitTerms noise_sin_limit(const KernelParams& kp) {
    if (!(kp.Omega > 0.0)) throw InvalidParameter("noise_sin_limit: Omega must be > 0");
    const double k = 2.0 * kp.alpha / (3.0 * pi * kp.m * kp.c * kp.c);
    const double w2 = kp.Omega * kp.Omega;
    return {-k / (kp.eps * kp.eps), k * w2 * std::log(kp.eps * kp.Omega), k * MathConstants::gamma_e * w2};
}

TestFunction constant_function(double value) {
    return {"constant", [value](double) { return value; }, [](double) { return 0.0; },
            [](double) { return 0.0; }, [](double) { return 0.0; }};
}

TestFunction cosine_function(double w) {
    return {"cos", [w](double t) { return std::cos(w * t); }, [w](double t) { return -w * std::sin(w * t); },
            [w](double t) { return -w * w * std::cos(w * t); },
            [w](double t) { return w * w * w * std::sin(w * t); }};
}

TestFunction gaussian_function() {
    return {"exp(-tau^2)", [](double t) { return std::exp(-t * t); },
            [](double t) { return -2.0 * t * std::exp(-t * t); },
            [](double t) { return (4.0 * t * t - 2.0) * std::exp(-t * t); },
            [](double t) { return (12.0 * t - 8.0 * t * t * t) * std::exp(-t * t); }};
}

TestFunction linear_function() {
    return {"tau", [](double t) { return t; }, [](double) { return 1.0; }, [](double) { return 0.0; },
            [](double) { return 0.0; }};
}

IbpResult ibp_identity_check(const TestFunction& fn, const KernelParams& kp, double t) {
    kp.validate();
    if (!(t >= 50.0 * kp.eps)) {
        std::ostringstream os;
        os << "ibp_identity_check: t = " << t << " is below the enforced regime t >= 50 eps = " << 50.0 * kp.eps;
        throw RegimeError(os.str());
    }
    const double eps = kp.eps;
    auto integrand = [&](double tau) { return delta_eps(tau, eps, 3) * fn.f(-tau); };
    const double scale = 2.0 / (pi * eps * eps * eps);
    const IntegralResult q = panel_integral(integrand, eps, kp.Omega, t, scale);
    IbpResult r;
    r.lhs = q.value;
    r.lhs_error = q.abs_error;
    r.rhs = 0.5 * fn.d3(0.0) - delta_eps(0.0, eps, 0) * fn.d2(0.0) - delta_eps(0.0, eps, 2) * fn.f(0.0);
    return r;
}

} // namespace oqs::kernels
