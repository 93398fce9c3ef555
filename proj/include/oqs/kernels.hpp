// kernels.hpp — vacuum noise/dissipation kernels of a non-relativistic charge
// and their regularized time integrals

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace oqs::kernels {

struct MathConstants {
    static constexpr double gamma_e = 0.5772156649015329; // Euler–Mascheroni
};

struct KernelParams {
    double alpha = 1.0 / 137.0;
    double c = 1.0;
    double hbar = 1.0;
    double eps = 0.01; // UV cutoff time, 1/omega_max
    double m = 1.0;
    double Omega = 1.0;

    void validate() const;
    bool cutoff_advisory() const { return eps * Omega >= 1.0; }              // needs eps*Omega << 1
    bool relativistic_advisory() const { return hbar * Omega / (m * c * c) >= 1.0; }
};

// delta_eps(tau) = eps / (pi (tau² + eps²)) and its first three derivatives (closed form).
double delta_eps(double tau, double eps, int order = 0);

// N0(tau) = (4 alpha hbar / (pi c²)) (eps⁴ - 6 eps² tau² + tau⁴) / (eps² + tau²)⁴
double noise_kernel_vac(double tau, const KernelParams& kp);
// D(tau) = (4 hbar alpha / (3 c²)) theta(tau) delta_eps'''(tau), theta(0) = 1
double dissipation_kernel(double tau, const KernelParams& kp);

// Positive roots of N0: (sqrt2 - 1) eps and (sqrt2 + 1) eps.
std::array<double, 2> noise_kernel_roots(double eps);
// Same roots located numerically by bracketing bisection on N0 itself.
std::array<double, 2> noise_kernel_roots_bracketed(const KernelParams& kp);

struct IntegralResult {
    double value = 0.0;
    double abs_error = 0.0;
    int panels = 0;
    int evaluations = 0;
};

// (1/hbar) ∫_0^t N0(tau) cos(Omega tau) dtau
IntegralResult noise_cos_integral(const KernelParams& kp, double t);
// (1/(m hbar Omega)) ∫_0^t N0(tau) sin(Omega tau) dtau
IntegralResult noise_sin_integral(const KernelParams& kp, double t);

// t -> infinity, eps -> 0 limits
double noise_cos_limit(const KernelParams& kp); // alpha Omega³ e^{-eps Omega} / (3 c²)

struct SinLimitTerms {
    double dressing = 0.0; // -2 alpha / (3 pi m c² eps²)
    double log = 0.0;      // (2 alpha Omega² / (3 pi m c²)) ln(eps Omega)
    double euler = 0.0;    // 2 alpha gamma_E Omega² / (3 pi m c²)
    double sum() const { return dressing + log + euler; }
};
SinLimitTerms noise_sin_limit(const KernelParams& kp);

// Magnitude of N0 integrated over its core: 4 alpha / (pi c² eps³).
double kernel_scale(const KernelParams& kp);

struct TestFunction {
    std::string name;
    std::function<double(double)> f, d1, d2, d3;
};

TestFunction constant_function(double value = 1.0);
TestFunction cosine_function(double omega);
TestFunction gaussian_function(); // exp(-tau²)
TestFunction linear_function();   // tau

struct IbpResult {
    double lhs = 0.0;       // ∫_0^t delta_eps'''(tau) f(-tau) dtau
    double rhs = 0.0;       // f'''(0)/2 - delta_eps(0) f''(0) - delta_eps''(0) f(0)
    double lhs_error = 0.0; // quadrature error estimate
};

// Requires t >= 50 eps (RegimeError otherwise).
IbpResult ibp_identity_check(const TestFunction& f, const KernelParams& kp, double t);

// Panel breakpoints on [0, t]: multiples of eps up to 10 eps, then geometric
// growth until the oscillation half-period pi/omega, then multiples of pi/omega.
std::vector<double> panel_breaks(double eps, double omega, double t);

} // namespace oqs::kernels
