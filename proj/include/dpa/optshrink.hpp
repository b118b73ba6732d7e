#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "errors.hpp"
#include "numeric.hpp"

namespace dpa {

/// Spike estimates for the leading eigenvalue of a sample spectrum.
struct SpectralFunctionals {
    double m;        // Stieltjes transform of the bulk at lambda
    double v;        // companion transform gamma m - (1 - gamma) / lambda
    double D;        // D-transform lambda m v
    double ell;      // population spike estimate 1 / D
    double m_prime;  // dm / dlambda
    double v_prime;  // dv / dlambda
    double D_prime;  // dD / dlambda
    double c_r_sq;   // squared cosine estimate, right singular vector
    double c_l_sq;   // squared cosine estimate, left singular vector
    double lambda;   // leading eigenvalue
    double gamma;
};

/**
 * OptShrink estimates for the top eigenvalue of `spectrum` (non-increasing,
 * length r >= 2), treating entries 2..r as the noise bulk.
 *
 * Throws DegenerateTopPair when lambda_1 - lambda_2 <= 1e-12 lambda_1 and
 * ZeroD when the D-transform vanishes.
 */
inline SpectralFunctionals optshrink_functionals(std::span<const double> spectrum, double gamma) {
    if (spectrum.size() < 2) {
        throw DomainError("optshrink_functionals needs at least two eigenvalues");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw DomainError("aspect ratio must be a positive finite number");
    }
    const double lambda = spectrum[0];
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("leading eigenvalue must be positive and finite");
    }
    for (std::size_t i = 1; i < spectrum.size(); ++i) {
        if (spectrum[i] > spectrum[i - 1]) {
            throw DomainError("spectrum must be non-increasing");
        }
    }
    if (lambda - spectrum[1] <= 1e-12 * lambda) {
        throw DegenerateTopPair();
    }

    const double bulk = static_cast<double>(spectrum.size() - 1);
    CompensatedSum sum_inv;
    CompensatedSum sum_inv_sq;
    for (std::size_t i = 1; i < spectrum.size(); ++i) {
        const double inv = 1.0 / (spectrum[i] - lambda);
        sum_inv += inv;
        sum_inv_sq += inv * inv;
    }

    SpectralFunctionals f{};
    f.lambda = lambda;
    f.gamma = gamma;
    f.m = sum_inv.value() / bulk;
    f.v = gamma * f.m - (1.0 - gamma) / lambda;
    f.D = lambda * f.m * f.v;
    if (f.D == 0.0) {
        throw ZeroD();
    }
    f.ell = 1.0 / f.D;
    f.m_prime = sum_inv_sq.value() / bulk;
    f.v_prime = gamma * f.m_prime + (1.0 - gamma) / (lambda * lambda);
    f.D_prime = f.m * f.v + lambda * (f.m * f.v_prime + f.m_prime * f.v);
    f.c_r_sq = f.m / (f.D_prime * f.ell);
    f.c_l_sq = f.v / (f.D_prime * f.ell);
    return f;
}

} // namespace dpa
