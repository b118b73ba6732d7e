#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

namespace dpa {

struct RootResult {
    double x;
    double fx;
    std::size_t iterations;
    bool converged;
};

/**
 * Brent's zero finder on a bracket [a, b] with f(a), f(b) of opposite sign.
 *
 * Stops when `done(x, fx)` holds for the current best point or when the
 * bracket is narrower than `x_tol`. Inverse quadratic interpolation with a
 * bisection fallback, following the classic zeroin formulation.
 */
template <class F, class Done>
RootResult brent_root(F&& f, double a, double b, double fa, double fb, double x_tol, std::size_t max_iter,
                      Done&& done) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double c = a;
    double fc = fa;
    double d = b - a;
    double e = d;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }

        const double tol = 2.0 * eps * std::abs(b) + 0.5 * x_tol;
        const double half = 0.5 * (c - b);
        if (fb == 0.0 || done(b, fb) || std::abs(half) <= tol) {
            return {b, fb, iter, true};
        }

        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            double p;
            double q;
            const double s = fb / fa;
            if (a == c) {
                p = 2.0 * half * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * half * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) {
                q = -q;
            } else {
                p = -p;
            }
            if (2.0 * p < std::min(3.0 * half * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = half;
                e = d;
            }
        } else {
            d = half;
            e = d;
        }

        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (half > 0.0 ? tol : -tol);
        fb = f(b);
    }
    return {b, fb, max_iter, false};
}

} // namespace dpa
