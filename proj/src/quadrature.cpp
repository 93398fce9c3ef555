#include "oqs/quadrature.hpp"
#include "oqs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace oqs::quad {

namespace {

// Kronrod abscissae (positive half) and weights; Gauss weights for the
// even-indexed abscissae (1, 3, 5, 7).
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Interval {
    double a, b, value, error;
    bool operator<(const Interval& o) const {
        // ties broken by position so the processing order is fully deterministic
        if (error != o.error) return error < o.error;
        return a > o.a;
    }
};

} // namespace

Result gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double kron = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * xgk[j];
        const double s = f(c - dx) + f(c + dx);
        kron += wgk[j] * s;
        if (j % 2 == 1) gauss += wg[j / 2] * s;
    }
    Result r;
    r.value = kron * h;
    r.abs_error = std::abs((kron - gauss) * h);
    r.evaluations = 15;
    r.intervals = 1;
    if (!std::isfinite(r.value)) throw NumericalFailure("gk15: integrand produced a non-finite value");
    return r;
}

Result integrate(const std::function<double(double)>& f, double a, double b, const Options& opt) {
    if (a == b) return {};
    std::priority_queue<Interval> heap;
    std::vector<Interval> frozen; // intervals too narrow to split further
    Result first = gk15(f, a, b);
    heap.push({a, b, first.value, first.abs_error});
    int evals = first.evaluations;
    double total = first.value, err = first.abs_error;

    auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    while (err > target() && !heap.empty()) {
        if (static_cast<int>(heap.size() + frozen.size()) >= opt.max_intervals) break;
        Interval iv = heap.top();
        heap.pop();
        const double mid = 0.5 * (iv.a + iv.b);
        if (!(mid > iv.a && mid < iv.b) ||
            (iv.b - iv.a) < 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(iv.a), std::abs(iv.b))) {
            frozen.push_back(iv);
            continue;
        }
        const Result l = gk15(f, iv.a, mid), r = gk15(f, mid, iv.b);
        evals += 30;
        total += l.value + r.value - iv.value;
        err += l.abs_error + r.abs_error - iv.error;
        heap.push({iv.a, mid, l.value, l.abs_error});
        heap.push({mid, iv.b, r.value, r.abs_error});
    }

    // recompute the totals from the final partition (sorted, pairwise) so the
    // running update's rounding does not leak into the answer
    std::vector<Interval> all = std::move(frozen);
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
    std::vector<double> vals, errs;
    for (const auto& iv : all) {
        vals.push_back(iv.value);
        errs.push_back(iv.error);
    }
    Result out;
    out.value = pairwise_sum(vals);
    out.abs_error = pairwise_sum(errs);
    out.evaluations = evals;
    out.intervals = static_cast<int>(all.size());
    const double tgt = std::max(opt.abs_tol, opt.rel_tol * std::abs(out.value));
    out.converged = out.abs_error <= tgt;
    if (!out.converged) {
        std::ostringstream os;
        os << "integrate: no convergence on [" << a << ", " << b << "]: value " << out.value
           << ", error estimate " << out.abs_error << " > target " << tgt << " after " << out.intervals
           << " intervals / " << out.evaluations << " evaluations";
        throw ToleranceError(os.str());
    }
    return out;
}

Result integrate_panels(const std::function<double(double)>& f, const std::vector<double>& breaks,
                        const Options& panel_opt) {
    Result out;
    std::vector<double> vals, errs;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const Result r = integrate(f, breaks[i], breaks[i + 1], panel_opt);
        vals.push_back(r.value);
        errs.push_back(r.abs_error);
        out.evaluations += r.evaluations;
        out.intervals += r.intervals;
    }
    out.value = pairwise_sum(vals);
    out.abs_error = pairwise_sum(errs);
    return out;
}

double pairwise_sum(const std::vector<double>& v) {
    std::function<double(std::size_t, std::size_t)> rec = [&](std::size_t lo, std::size_t hi) -> double {
        if (hi - lo <= 8) {
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) s += v[i];
            return s;
        }
        const std::size_t mid = lo + (hi - lo) / 2;
        return rec(lo, mid) + rec(mid, hi);
    };
    return v.empty() ? 0.0 : rec(0, v.size());
}

} // namespace oqs::quad
