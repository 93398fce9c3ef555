// quadrature.hpp — globally adaptive Gauss–Kronrod (7/15) integration

#pragma once

#include <functional>
#include <vector>

namespace oqs::quad {

struct Options {
    double abs_tol = 0.0;
    double rel_tol = 1e-12;
    int max_intervals = 4000;
};

struct Result {
    double value = 0.0;
    double abs_error = 0.0;
    int evaluations = 0;
    int intervals = 0;
    bool converged = true;
};

// Single 15-point Kronrod rule with the embedded 7-point Gauss estimate.
Result gk15(const std::function<double(double)>& f, double a, double b);

// Bisects the interval with the largest error estimate until the total error
// is below max(abs_tol, rel_tol*|value|). Throws ToleranceError on failure.
Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opt = {});

// Integrates over consecutive panels [breaks[i], breaks[i+1]] and combines
// them by pairwise summation (order-independent of thread scheduling).
Result integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks,
                        const Options& panel_opt);

double pairwise_sum(const std::vector<double>& v);

} // namespace oqs::quad
