#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "numeric.hpp"
#include "root_finding.hpp"

namespace dpa {

/// Aspect ratio gamma = p/n and population variance distribution H.
class EdgeProblem {
public:
    EdgeProblem(double gamma, VarianceDistribution h) : gamma_(gamma), h_(std::move(h)) {
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
            throw DomainError("aspect ratio must be a positive finite number");
        }
        if (!(h_.max_atom() > 0.0)) {
            throw DomainError("variance distribution is a point mass at zero");
        }
    }

    double gamma() const noexcept { return gamma_; }
    const VarianceDistribution& distribution() const noexcept { return h_; }

    /// Left asymptote B = -1 / max_j atom_j.
    double left_pole() const noexcept { return -1.0 / h_.max_atom(); }

private:
    double gamma_;
    VarianceDistribution h_;
};

struct EdgeSolution {
    double v_star;
    double edge;
    std::size_t iterations;
    double residual;
};

struct EdgeOptions {
    bool coalesce = false;
    std::size_t max_iterations = 200;
};

namespace detail {

inline void check_edge_domain(double v, const EdgeProblem& prob) {
    if (!(v > prob.left_pole() && v < 0.0)) {
        throw DomainError("v = " + std::to_string(v) + " lies outside (B, 0)");
    }
}

inline double z_unchecked(double v, const EdgeProblem& prob) {
    const auto w = prob.distribution().weights();
    const auto phi = prob.distribution().atoms();
    CompensatedSum sum;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        if (phi[j] != 0.0) {
            sum += w[j] * phi[j] / (1.0 + phi[j] * v);
        }
    }
    return -1.0 / v + prob.gamma() * sum.value();
}

inline double z_prime_unchecked(double v, const EdgeProblem& prob) {
    const auto w = prob.distribution().weights();
    const auto phi = prob.distribution().atoms();
    CompensatedSum sum;
    for (std::size_t j = 0; j < phi.size(); ++j) {
        if (phi[j] != 0.0) {
            const double t = phi[j] / (1.0 + phi[j] * v);
            sum += w[j] * t * t;
        }
    }
    return 1.0 / (v * v) - prob.gamma() * sum.value();
}

} // namespace detail

/// z(v) = -1/v + gamma * sum_j w_j phi_j / (1 + phi_j v), for v in (B, 0).
inline double silverstein_z(double v, const EdgeProblem& prob) {
    detail::check_edge_domain(v, prob);
    return detail::z_unchecked(v, prob);
}

/// z'(v) = 1/v^2 - gamma * sum_j w_j phi_j^2 / (1 + phi_j v)^2.
inline double silverstein_z_prime(double v, const EdgeProblem& prob) {
    detail::check_edge_domain(v, prob);
    return detail::z_prime_unchecked(v, prob);
}

/**
 * Merge atoms that agree within `rel_tol` (relative), summing their weights.
 * Output is sorted by atom. Zero atoms collapse into one.
 */
inline VarianceDistribution coalesce(const VarianceDistribution& h, double rel_tol = 1e-12) {
    const auto w = h.weights();
    const auto phi = h.atoms();
    std::vector<std::size_t> order(phi.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phi[a] < phi[b]; });

    std::vector<double> atoms;
    std::vector<CompensatedSum> weights;
    for (std::size_t idx : order) {
        if (!atoms.empty() && phi[idx] - atoms.back() <= rel_tol * phi[idx]) {
            weights.back() += w[idx];
        } else {
            atoms.push_back(phi[idx]);
            weights.emplace_back();
            weights.back() += w[idx];
        }
    }
    std::vector<double> merged(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        merged[i] = weights[i].value();
    }
    return VarianceDistribution(std::move(merged), std::move(atoms));
}

/**
 * Upper edge of the generalized Marchenko-Pastur law F_{gamma, H}.
 *
 * z is strictly convex on (B, 0) with poles at both ends, so z' runs from
 * -inf to +inf and has a single root v*; the edge is z(v*). The bracket
 * starts 1e-12 |B| inside each pole and is tightened geometrically while the
 * end signs hold, then Brent's method finishes on z'.
 */
inline EdgeSolution upper_edge(const EdgeProblem& input, const EdgeOptions& opts = {}) {
    const EdgeProblem prob = opts.coalesce ? EdgeProblem(input.gamma(), coalesce(input.distribution())) : input;
    const double b = prob.left_pole();
    const double scale = std::abs(b);
    auto zp = [&](double v) { return detail::z_prime_unchecked(v, prob); };

    std::size_t evaluations = 0;
    double left_gap = 1e-12 * scale;
    double right_gap = 1e-12 * scale;
    double f_left = zp(b + left_gap);
    double f_right = zp(-right_gap);
    evaluations += 2;
    if (!(f_left < 0.0) || !(f_right > 0.0)) {
        throw NoBracket("z' has no sign change on (B, 0): z'(B+) = " + std::to_string(f_left) +
                        ", z'(0-) = " + std::to_string(f_right));
    }

    bool grow_left = true;
    bool grow_right = true;
    while (grow_left || grow_right) {
        if (grow_left) {
            const double gap = 2.0 * left_gap;
            if (b + gap >= -right_gap) {
                grow_left = false;
            } else {
                const double f = zp(b + gap);
                ++evaluations;
                if (f < 0.0) {
                    left_gap = gap;
                    f_left = f;
                } else {
                    grow_left = false;
                }
            }
        }
        if (grow_right) {
            const double gap = 2.0 * right_gap;
            if (-gap <= b + left_gap) {
                grow_right = false;
            } else {
                const double f = zp(-gap);
                ++evaluations;
                if (f > 0.0) {
                    right_gap = gap;
                    f_right = f;
                } else {
                    grow_right = false;
                }
            }
        }
    }

    const auto root = brent_root(
        zp, b + left_gap, -right_gap, f_left, f_right, 1e-14 * scale, opts.max_iterations,
        [](double v, double fv) { return std::abs(fv) <= 1e-10 / (v * v); });
    if (!root.converged) {
        throw MaxIterations("upper edge solver did not converge in " + std::to_string(opts.max_iterations) +
                            " iterations");
    }
    return EdgeSolution{root.x, detail::z_unchecked(root.x, prob), evaluations + root.iterations,
                        std::abs(root.fx)};
}

inline EdgeSolution upper_edge(double gamma, const VarianceDistribution& h, const EdgeOptions& opts = {}) {
    return upper_edge(EdgeProblem(gamma, h), opts);
}

/// Tracy-Widom fluctuation scale n^{-1/2} (1 + sqrt(p/n)) (n^{-1/2} + p^{-1/2})^{1/3}.
inline double tracy_widom_scale(std::size_t n, std::size_t p) {
    if (n < 1 || p < 1) {
        throw DomainError("tracy_widom_scale needs n, p >= 1");
    }
    const double dn = static_cast<double>(n);
    const double dp = static_cast<double>(p);
    return (1.0 / std::sqrt(dn)) * (1.0 + std::sqrt(dp / dn)) * std::cbrt(1.0 / std::sqrt(dn) + 1.0 / std::sqrt(dp));
}

} // namespace dpa
