// integrator.hpp — fixed-step RK4 for explicitly time-dependent linear generators

#pragma once

#include "oqs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace oqs {

struct StepPlan {
    long steps = 0;
    double h = 0.0;
};

// Uniform step as close to h as possible that lands exactly on t1.
inline StepPlan plan_steps(double t0, double t1, double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidParameter("rk4: step must be > 0");
    if (!(t1 >= t0)) throw InvalidParameter("rk4: t1 must be >= t0");
    if (t1 == t0) return {0, h};
    const long n = std::max(1L, std::lround(std::ceil((t1 - t0) / h - 1e-9)));
    return {n, (t1 - t0) / n};
}

// Integrates dy/dt = f(t, y) from t0 to t1. After each step `observe(step, t, y)`
// is called (step counts from 1); the initial state is reported with step 0.
// Time is recomputed as t0 + k h, so there is no accumulated drift.
template <class State, class Rhs, class Observer>
void rk4(State& y, double t0, double t1, double h, Rhs&& f, Observer&& observe) {
    const StepPlan plan = plan_steps(t0, t1, h);
    observe(0L, t0, static_cast<const State&>(y));
    for (long k = 0; k < plan.steps; ++k) {
        const double t = t0 + k * plan.h;
        const double hh = plan.h;
        State k1 = f(t, y);
        State tmp = y + (0.5 * hh) * k1;
        State k2 = f(t + 0.5 * hh, tmp);
        tmp = y + (0.5 * hh) * k2;
        State k3 = f(t + 0.5 * hh, tmp);
        tmp = y + hh * k3;
        State k4 = f(t + hh, tmp);
        y = y + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        observe(k + 1, t0 + (k + 1) * plan.h, static_cast<const State&>(y));
    }
}

template <class State, class Rhs>
void rk4(State& y, double t0, double t1, double h, Rhs&& f) {
    rk4(y, t0, t1, h, std::forward<Rhs>(f), [](long, double, const State&) {});
}

} // namespace oqs
