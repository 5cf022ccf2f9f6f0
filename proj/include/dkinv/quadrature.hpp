#pragma once

#include "dkinv/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace dkinv {

struct QuadratureOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    int max_intervals = 4000;
    int initial_panels = 1;
};

struct QuadratureResult {
    ComplexMatrix value;
    double error_estimate = 0.0;
    int evaluations = 0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod abscissae on [-1, 1] (non-negative half).
inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    ComplexMatrix kronrod;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b, int& evals) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    ComplexMatrix fc = f(c);
    ComplexMatrix k = kWgk[7] * fc;
    ComplexMatrix g = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        ComplexMatrix s = f(c - dx) + f(c + dx);
        k += kWgk[j] * s;
        if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    evals += 15;
    k *= h;
    g *= h;
    return Panel{a, b, k, (k - g).norm()};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of a matrix-valued
/// integrand. `breakpoints` are interior points where the integrand may jump;
/// panels never straddle them.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, std::span<const double> breakpoints = {},
                           const QuadratureOptions& opt = {}) {
    std::vector<double> cuts{a};
    for (double x : breakpoints)
        if (x > a && x < b) cuts.push_back(x);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    int evals = 0;
    std::priority_queue<detail::Panel> heap;
    const int panels = std::max(1, opt.initial_panels);
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = cuts[k + 1];
        if (hi <= lo) continue;
        for (int m = 0; m < panels; ++m) {
            const double pa = lo + (hi - lo) * m / panels;
            const double pb = (m + 1 == panels) ? hi : lo + (hi - lo) * (m + 1) / panels;
            heap.push(detail::gk15(f, pa, pb, evals));
        }
    }
    if (heap.empty()) {
        ComplexMatrix probe = f(a);
        return {ComplexMatrix::Zero(probe.rows(), probe.cols()), 0.0, 1};
    }

    auto totals = [&heap] {
        auto copy = heap;
        ComplexMatrix sum = copy.top().kronrod * 0.0;
        double err = 0.0;
        while (!copy.empty()) {
            sum += copy.top().kronrod;
            err += copy.top().error;
            copy.pop();
        }
        return std::pair{sum, err};
    };

    auto [value, err] = totals();
    int intervals = static_cast<int>(heap.size());
    while (err > std::max(opt.abs_tol, opt.rel_tol * value.norm()) && intervals < opt.max_intervals) {
        detail::Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval cannot be split further in double precision
            heap.push(worst);
            break;
        }
        detail::Panel left = detail::gk15(f, worst.a, mid, evals);
        detail::Panel right = detail::gk15(f, mid, worst.b, evals);
        value += left.kronrod + right.kronrod - worst.kronrod;
        err += left.error + right.error - worst.error;
        heap.push(std::move(left));
        heap.push(std::move(right));
        ++intervals;
    }
    // recompute to shed accumulated update roundoff
    std::tie(value, err) = totals();
    return {value, err, evals};
}

}  // namespace dkinv
