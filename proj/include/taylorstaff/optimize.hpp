#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

namespace taylorstaff {

struct SimplexResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    bool converged = false;
};

// Nelder-Mead minimizer with standard coefficients.
template <class F>
SimplexResult nelder_mead(F&& f, const std::vector<double>& x0, const std::vector<double>& scale,
                          std::size_t max_evals, double ftol = 1e-10, double xtol = 1e-7) {
    const std::size_t n = x0.size();
    SimplexResult out;
    auto eval = [&](const std::vector<double>& x) {
        ++out.evaluations;
        double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::max();
    };
    if (n == 0) {
        out.x = x0;
        out.f = eval(x0);
        out.converged = true;
        return out;
    }
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += scale[i];
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (out.evaluations < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        double diam = 0.0;
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t d = 0; d < n; ++d) diam = std::max(diam, std::abs(pts[i][d] - pts[best][d]));
        if (std::abs(fv[worst] - fv[best]) <= ftol * (1.0 + std::abs(fv[best])) && diam <= xtol) {
            out.converged = true;
            break;
        }
        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i)
            if (i != worst)
                for (std::size_t d = 0; d < n; ++d) centroid[d] += pts[i][d] / static_cast<double>(n);
        for (std::size_t d = 0; d < n; ++d) xr[d] = centroid[d] + (centroid[d] - pts[worst][d]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            for (std::size_t d = 0; d < n; ++d) xe[d] = centroid[d] + 2.0 * (centroid[d] - pts[worst][d]);
            const double fe = eval(xe);
            if (fe < fr) pts[worst] = xe, fv[worst] = fe;
            else pts[worst] = xr, fv[worst] = fr;
            continue;
        }
        if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        const bool outside = fr < fv[worst];
        for (std::size_t d = 0; d < n; ++d)
            xc[d] = outside ? centroid[d] + 0.5 * (xr[d] - centroid[d]) : centroid[d] + 0.5 * (pts[worst][d] - centroid[d]);
        const double fc = eval(xc);
        if (fc < (outside ? fr : fv[worst])) {
            pts[worst] = xc;
            fv[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t d = 0; d < n; ++d) pts[i][d] = pts[best][d] + 0.5 * (pts[i][d] - pts[best][d]);
            fv[i] = eval(pts[i]);
        }
    }
    const auto it = std::min_element(fv.begin(), fv.end());
    out.x = pts[static_cast<std::size_t>(it - fv.begin())];
    out.f = *it;
    return out;
}

}  // namespace taylorstaff
