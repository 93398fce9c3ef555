#include "oqs/experiments.hpp"
#include "oqs/errors.hpp"
#include "oqs/integrator.hpp"
#include "oqs/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace oqs::experiments {

using quadratic::PhaseMoments;
using quadratic::QuadraticGenerator;

std::string to_string(Representation r) { return r == Representation::L ? "L" : "Lprime"; }

QuadraticGenerator toy_generator(Representation rep, const ToyParams& params, const toy::EnvStats& env,
                                 double t) {
    return rep == Representation::L ? toy::generator_L(params, env, t) : toy::generator_Lprime(params, env, t);
}

hilbert::SpaceSpec GridSpec::space(double mass, double hbar) const {
    hilbert::SpaceSpec s;
    s.kind = hilbert::BasisKind::grid;
    s.dim = dim;
    s.grid_extent = extent;
    s.mass = mass;
    s.hbar = hbar;
    s.validate();
    return s;
}

PhaseMoments initial_particle_moments(const InitialStateSpec& spec, double hbar) {
    spec.validate(hbar);
    if (spec.cat_separation || spec.transformed)
        throw InvalidParameter("initial_particle_moments: needs a plain (untransformed) Gaussian state");
    PhaseMoments m;
    m.x = spec.mean_x;
    m.p = spec.mean_p;
    m.xx = spec.width * spec.width + m.x * m.x;
    m.pp = hbar * hbar / (4.0 * spec.width * spec.width) + m.p * m.p;
    m.xp = 2.0 * m.x * m.p;
    return m;
}

std::vector<MomentSample> integrate_moments(Representation rep, const ToyParams& params,
                                            const InitialStateSpec& spec, double t_end, double h,
                                            int sample_every) {
    params.validate();
    if (sample_every < 1) throw InvalidParameter("integrate_moments: sample_every must be >= 1");
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    Vec5 y = initial_particle_moments(spec, params.hbar).vec();
    const long last = plan_steps(0.0, t_end, h).steps;
    std::vector<MomentSample> out;
    auto rhs = [&](double t, const Vec5& v) -> Vec5 {
        Eigen::Matrix<double, 5, 5> M;
        Vec5 b;
        toy_generator(rep, params, spec.env, t).moment_system(M, b);
        return M * v + b;
    };
    rk4(y, 0.0, t_end, h, rhs, [&](long k, double t, const Vec5& v) {
        if (k % sample_every == 0 || k == last) out.push_back({t, PhaseMoments::from_vec(v)});
    });
    return out;
}

OrderProbe master_vs_exact(const ToyParams& params, const InitialStateSpec& spec, const GridSpec& grid1,
                           const GridSpec& grid2, double t, double h) {
    params.validate();
    const auto o1 = hilbert::make_operator_set(grid1.space(params.m1, params.hbar));
    const auto o2 = hilbert::make_operator_set(grid2.space(params.m2, params.hbar));
    const Vector psi = toy::build_initial_vector(spec, params, o1, o2);
    const Vector phi = toy::particle1_state(spec, o1);
    OrderProbe out;
    out.g = params.g;
    for (const Representation rep : {Representation::L, Representation::Lprime}) {
        const bool is_L = rep == Representation::L;
        const Matrix H = is_L ? toy::hamiltonian_L(params, o1, o2) : toy::hamiltonian_Lprime(params, o1, o2);
        const oracle::BlockReducer exact(H, o1, o2, is_L ? 2 : 1, params.hbar);
        const auto rho_exact = exact.reduced(psi, t);
        Matrix rho = phi * phi.adjoint();
        rk4(rho, 0.0, t, h,
            [&](double s, const Matrix& r) { return toy_generator(rep, params, spec.env, s).apply(o1, r); });
        (is_L ? out.td_L : out.td_Lprime) = hilbert::trace_distance(rho_exact.data(), rho);
    }
    return out;
}

std::vector<EquivalenceSample> transformed_equivalence(const ToyParams& params, double x0, double p0,
                                                       const toy::EnvStats& env, const std::vector<double>& times, const GridSpec& grid1,
                                                       const GridSpec& grid2) {
    params.validate();
    const auto o1 = hilbert::make_operator_set(grid1.space(params.m1, params.hbar));
    const auto o2 = hilbert::make_operator_set(grid2.space(params.m2, params.hbar));
    InitialStateSpec spec;
    spec.mean_x = x0;
    spec.mean_p = p0;
    spec.env = env;
    spec.transformed = true;
    const Vector psi = toy::build_initial_vector(spec, params, o1, o2);
    const oracle::BlockReducer exact(toy::hamiltonian_L(params, o1, o2), o1, o2, 2, params.hbar);
    const auto m0 = oracle::initial_moments(spec, params);
    const auto A = oracle::heisenberg_drift_L(params);
    const double w = std::abs(params.g) / std::sqrt(params.m1 * params.m2);
    std::vector<EquivalenceSample> out;
    for (const double t : times) {
        EquivalenceSample s;
        s.t = t;
        const Matrix r = exact.reduced(psi, t).data();
        s.dense_x = (o1.x * r).trace().real();
        s.gaussian_x = oracle::evolve_moments(A, m0, t).mean(0);
        s.lprime_x = toy::analytic_means_Lprime(params, x0, p0, t).x;
        s.envelope = std::abs(p0) * std::pow(w, 4) * std::pow(t, 5) / (120.0 * params.m1);
        out.push_back(s);
    }
    return out;
}

namespace {

int nearest_index(const std::vector<double>& v, double target) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(v.size()); ++i)
        if (std::abs(v[i] - target) < std::abs(v[best] - target)) best = i;
    return best;
}

// Particle-1 state of the coherence experiment on the grid.
Matrix initial_density(const InitialStateSpec& spec, const hilbert::OperatorSet& ops) {
    const Vector phi = toy::particle1_state(spec, ops);
    return phi * phi.adjoint();
}

} // namespace

std::string to_string(Basis b) { return b == Basis::position ? "position" : "momentum"; }

Basis decohering_basis(Representation rep) { return rep == Representation::L ? Basis::position : Basis::momentum; }

CoherenceRun coherence_run(Representation rep, Basis basis, const ToyParams& params, const InitialStateSpec& spec,
                           const GridSpec& grid, double t_end, double h, const std::vector<double>& sample_times) {
    params.validate();
    if (spec.transformed) throw InvalidParameter("coherence_run: needs an untransformed initial state");
    const auto s = grid.space(params.m1, params.hbar);
    const auto ops = hilbert::make_operator_set(s);
    const bool momentum = basis == Basis::momentum;
    const Matrix F = momentum ? hilbert::dft_matrix(s) : Matrix();
    std::vector<double> axis = momentum ? s.wavenumbers() : s.grid_points();
    if (momentum)
        for (double& k : axis) k *= params.hbar;
    const int ia = nearest_index(axis, 1.0), ib = nearest_index(axis, -1.0);

    CoherenceRun run;
    run.rep = rep;
    run.basis = basis;
    run.a = axis[ia];
    run.b = axis[ib];
    const double sep2 = std::pow(run.a - run.b, 2);
    const bool with_rates = basis == decohering_basis(rep);

    auto element = [&](const Matrix& m) -> cplx {
        if (!momentum) return m(ia, ib);
        return F.row(ia) * m * F.row(ib).adjoint();
    };
    auto coefficient = [&](double t) {
        return rep == Representation::L ? toy::position_decoherence_coefficient(params, spec.env, t)
                                         : toy::momentum_decoherence_coefficient(params, spec.env, t);
    };
    auto generator_for = [&](const ToyParams& p, double t, bool ham_only) {
        const auto gen = toy_generator(rep, p, spec.env, t);
        return ham_only ? gen.hamiltonian_only() : gen;
    };

    const StepPlan plan = plan_steps(0.0, t_end, h);
    std::vector<long> sample_steps;
    if (with_rates) {
        for (const double t : sample_times) {
            const long k = std::lround(t / plan.h);
            if (k < 1 || k > plan.steps || std::abs(k * plan.h - t) > 1e-9 * std::max(1.0, t))
                throw InvalidParameter("coherence_run: sample times must be positive multiples of the step <= t_end");
            sample_steps.push_back(k);
        }
    }

    const Matrix rho0 = initial_density(spec, ops);
    Matrix rho = rho0;
    rk4(rho, 0.0, t_end, h, [&](double t, const Matrix& r) { return generator_for(params, t, false).apply(ops, r); },
        [&](long k, double t, const Matrix& r) {
            run.times.push_back(t);
            run.coherence.push_back(std::abs(element(r)));
            for (const long ks : sample_steps) {
                if (ks != k) continue;
                const Matrix d = generator_for(params, t, false).apply(ops, r) -
                                 generator_for(params, t, true).apply(ops, r);
                RateSample rs;
                rs.t = t;
                rs.measured = -(element(d) / element(r)).real();
                rs.predicted = sep2 * coefficient(t);
                run.rates.push_back(rs);
            }
        });

    ToyParams free = params;
    free.g = 0.0;
    rho = rho0;
    rk4(rho, 0.0, t_end, h, [&](double t, const Matrix& r) { return generator_for(free, t, false).apply(ops, r); },
        [&](long, double, const Matrix& r) { run.coherence_free.push_back(std::abs(element(r))); });
    for (std::size_t i = 0; i < run.times.size(); ++i)
        run.max_rel_change = std::max(run.max_rel_change, std::abs(run.coherence[i] / run.coherence_free[i] - 1.0));
    if (!with_rates) return run;

    // Hamiltonian-only reference for the finite-difference rate
    std::vector<double> ref;
    rho = rho0;
    rk4(rho, 0.0, t_end, h, [&](double t, const Matrix& r) { return generator_for(params, t, true).apply(ops, r); },
        [&](long, double, const Matrix& r) { ref.push_back(std::abs(element(r))); });
    auto log_ratio = [&](long k) {
        const auto i = static_cast<std::size_t>(k);
        return std::log(run.coherence[i] / ref[i]);
    };
    for (std::size_t i = 0; i < run.rates.size(); ++i) {
        const long k = sample_steps[i];
        const long up = std::min(k + 1, plan.steps), dn = k - 1;
        run.rates[i].finite_difference = -(log_ratio(up) - log_ratio(dn)) / ((up - dn) * plan.h);
    }

    // rate law scaled by least squares to the measured rates; half-life from its integral
    double num = 0.0, den = 0.0;
    for (const auto& r : run.rates) {
        run.max_rate_rel = std::max(run.max_rate_rel, std::abs(r.measured / r.predicted - 1.0));
        num += r.measured * r.predicted;
        den += r.predicted * r.predicted;
    }
    const double scale = den > 0.0 ? num / den : 0.0;
    // the law is a polynomial of degree <= 3, so Simpson's rule is exact
    auto law = [&](double t) { return scale * sep2 * coefficient(t); };
    auto integral = [&](double T) { return T / 6.0 * (law(0.0) + 4.0 * law(0.5 * T) + law(T)); };
    const double target = std::numbers::ln2;
    if (!(scale > 0.0)) {
        run.half_life = std::numeric_limits<double>::infinity();
        return run;
    }
    double lo = 0.0, hi = 1.0;
    while (integral(hi) < target && hi < 1e12) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (integral(mid) < target ? lo : hi) = mid;
    }
    run.half_life = 0.5 * (lo + hi);
    return run;
}

CatDecay cat_coherence_decay(const kernels::KernelParams& kp, const brem::BremFlags& flags, double delta_x,
                             int fock_dim, double h, double window) {
    kp.validate();
    if (!(kp.Omega > 0.0)) throw InvalidParameter("cat_coherence_decay: Omega must be > 0");
    hilbert::SpaceSpec s;
    s.kind = hilbert::BasisKind::fock;
    s.dim = fock_dim;
    s.omega_ref = kp.Omega;
    s.mass = kp.m;
    s.hbar = kp.hbar;
    const auto ops = hilbert::make_operator_set(s);

    CatDecay out;
    out.delta_x = delta_x;
    out.predicted = brem::decoherence_rate(delta_x, kp);
    out.window = window > 0.0 ? window : std::min(0.1 / out.predicted, 0.1 / kp.Omega);
    const double a = 0.5 * delta_x;

    const Vector cat = brem::cat_state(delta_x, ops);
    const Matrix rho0 = cat * cat.adjoint();
    const auto gen = brem::brem_generator(kp, flags);
    kernels::KernelParams free = kp;
    free.alpha = 0.0;
    const auto gen_free = brem::brem_generator(free, flags);

    const Matrix d0 = gen.apply(ops, rho0) - gen.hamiltonian_only().apply(ops, rho0);
    out.instantaneous =
        -(brem::position_element(d0, ops, a, -a) / brem::position_element(rho0, ops, a, -a)).real();

    std::vector<double> ts, lf, lr;
    Matrix rho = rho0;
    rk4(rho, 0.0, out.window, h, [&](double, const Matrix& r) { return gen.apply(ops, r); },
        [&](long, double t, const Matrix& r) {
            ts.push_back(t);
            lf.push_back(std::log(std::abs(brem::position_element(r, ops, a, -a))));
        });
    rho = rho0;
    rk4(rho, 0.0, out.window, h, [&](double, const Matrix& r) { return gen_free.apply(ops, r); },
        [&](long, double, const Matrix& r) { lr.push_back(std::log(std::abs(brem::position_element(r, ops, a, -a)))); });

    const double n = static_cast<double>(ts.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double y = lf[i] - lr[i];
        sx += ts[i];
        sy += y;
        sxx += ts[i] * ts[i];
        sxy += ts[i] * y;
    }
    out.measured = -(n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.times = ts;
    out.log_ratio.resize(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) out.log_ratio[i] = lf[i] - lr[i];
    return out;
}

} // namespace oqs::experiments
