#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace toss2d {

struct GaussLegendreNode {
    double x;  // abscissa on [-1, 1]
    double w;  // weight
};

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre recurrence. Exact for polynomials of degree 2n-1.
inline std::vector<GaussLegendreNode> gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    std::vector<GaussLegendreNode> nodes(static_cast<std::size_t>(n));
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess for the i-th positive root.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes[static_cast<std::size_t>(i)] = {-x, w};
        nodes[static_cast<std::size_t>(n - 1 - i)] = {x, w};
    }
    return nodes;
}

/// Fixed-node Gauss-Legendre integral of f over [a, b].
template <typename F>
double integrate_gauss_legendre(F&& f, double a, double b, int n) {
    const auto nodes = gauss_legendre(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double sum = 0.0;
    for (const auto& node : nodes) sum += node.w * f(mid + half * node.x);
    return half * sum;
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, double root_tol, int depth,
                            std::size_t& budget) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    if (budget < 2)
        throw std::runtime_error("adaptive quadrature: evaluation budget exhausted before convergence");
    budget -= 2;
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth <= 0) {
        // At the depth floor the branch is vanishingly narrow; a bounded
        // discontinuity contributes |delta| ~ jump * width, which is
        // acceptable against the overall budget. Anything larger means the
        // integrand genuinely did not converge.
        if (std::fabs(delta) <= 15.0 * root_tol) return left + right + delta / 15.0;
        throw std::runtime_error("adaptive quadrature: refinement depth exhausted before convergence");
    }
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, root_tol, depth - 1,
                                budget) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, root_tol, depth - 1,
                                budget);
}

}  // namespace detail

struct AdaptiveOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-12;
    int max_depth = 48;
    std::size_t max_evaluations = 20'000'000;
};

/// Adaptive Simpson integration with step halving until two refinements
/// agree. Throws std::runtime_error when the tolerance cannot be met within
/// the depth/evaluation budget.
template <typename F>
double integrate_adaptive(F&& f, double a, double b, AdaptiveOptions opt = {}) {
    if (!(b > a)) return 0.0;
    std::size_t budget = opt.max_evaluations;
    const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
    budget -= 3;
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // The coarse pass sets the scale the relative tolerance applies to.
    const double scale = std::max(std::fabs(whole), opt.abs_tol);
    const double tol = std::max(opt.rel_tol * scale, opt.abs_tol);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, tol, opt.max_depth,
                                        budget);
}

}  // namespace toss2d
