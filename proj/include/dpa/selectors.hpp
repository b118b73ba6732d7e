#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "optshrink.hpp"
#include "random.hpp"
#include "spectral_edge.hpp"
#include "svd.hpp"

namespace dpa {

enum class Method { PA, DPA, DDPA, DDPA_PLUS };

inline std::string_view to_string(Method m) {
    switch (m) {
    case Method::PA: return "pa";
    case Method::DPA: return "dpa";
    case Method::DDPA: return "ddpa";
    case Method::DDPA_PLUS: return "ddpa+";
    }
    return "?";
}

inline Method parse_method(std::string_view name) {
    if (name == "pa") return Method::PA;
    if (name == "dpa") return Method::DPA;
    if (name == "ddpa") return Method::DDPA;
    if (name == "ddpa+" || name == "ddpa_plus") return Method::DDPA_PLUS;
    throw InputError("unknown method '" + std::string(name) + "'");
}

/**
 * One candidate factor examined by a selector.
 *
 * For PA, DPA and DDPA the statistic is sigma_k(n^{-1/2} X) and the factor is
 * accepted iff statistic > threshold. For DDPA+ the statistic is
 * sigma_1^2 of the deflated n^{-1/2} X and acceptance is statistic < threshold.
 */
struct StepRecord {
    std::size_t index;
    double statistic;
    double threshold;
    bool accepted;
    std::string note;  // empty unless the step ended on a degenerate condition
};

struct SelectionResult {
    Method method = Method::PA;
    std::size_t k = 0;
    std::vector<StepRecord> steps{};
    std::optional<std::uint64_t> seed{};
    /// Upper edge behind the last recorded threshold (DPA, DDPA).
    std::optional<double> edge_used{};
};

namespace detail {

inline void check_eps(double eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
        throw InputError("eps must be a non-negative finite number");
    }
}

inline bool all_zero(std::span<const double> atoms) {
    return std::none_of(atoms.begin(), atoms.end(), [](double a) { return a > 0.0; });
}

inline SelectionResult zero_matrix_result(Method m) {
    SelectionResult res{m};
    res.steps.push_back({1, 0.0, 0.0, false, "zero matrix"});
    return res;
}

/// Nearest-rank percentile; 100 is the maximum.
inline double nearest_rank(std::vector<double> values, double percentile) {
    std::sort(values.begin(), values.end());
    const auto count = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * count));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

inline std::uint64_t mix64(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= h >> 30;
    h *= 0xbf58476d1ce4e5b9ULL;
    h ^= h >> 27;
    h *= 0x94d049bb133111ebULL;
    return h ^ (h >> 31);
}

/**
 * Per-column stream keys that follow the column, not its position: a hash of
 * the column's rank pattern (unchanged by positive scaling), plus an
 * occurrence count among columns sharing that pattern.
 */
inline std::vector<std::uint64_t> column_stream_keys(const Matrix& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    std::vector<std::uint64_t> pattern(static_cast<std::size_t>(p));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
        const auto col = x.col(j);
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return col(a) < col(b); });
        std::uint64_t h = 0x243f6a8885a308d3ULL;
        for (std::size_t r = 0; r < order.size(); ++r) {
            // Tied values share a rank so the key does not depend on tie order.
            const bool tie = r > 0 && col(order[r]) == col(order[r - 1]);
            h = mix64(h, static_cast<std::uint64_t>(order[r]) * 2 + (tie ? 1 : 0));
        }
        pattern[static_cast<std::size_t>(j)] = h;
    }
    std::vector<std::size_t> by_key(static_cast<std::size_t>(p));
    for (std::size_t j = 0; j < by_key.size(); ++j) by_key[j] = j;
    std::stable_sort(by_key.begin(), by_key.end(), [&](std::size_t a, std::size_t b) { return pattern[a] < pattern[b]; });
    std::vector<std::uint64_t> keys(pattern.size());
    std::uint64_t occurrence = 0;
    for (std::size_t r = 0; r < by_key.size(); ++r) {
        occurrence = r > 0 && pattern[by_key[r]] == pattern[by_key[r - 1]] ? occurrence + 1 : 0;
        keys[by_key[r]] = mix64(pattern[by_key[r]], occurrence);
    }
    return keys;
}

/// Shuffle column j with substream(seed, {mode, a, b, keys[j]}).
inline Matrix permute_columns(const Matrix& x, std::uint64_t seed, std::uint64_t mode, std::uint64_t a,
                              std::uint64_t b, const std::vector<std::uint64_t>& keys) {
    Matrix out = x;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        auto rng = substream(seed, {mode, a, b, keys[static_cast<std::size_t>(j)]});
        auto col = out.col(j);
        std::shuffle(col.begin(), col.end(), rng);
    }
    return out;
}

} // namespace detail

/// How PA turns permuted spectra into the threshold for candidate k.
enum class PaThreshold {
    /// Compare sigma_k(X) with the k-th singular values of the permuted copies.
    Sequential,
    /// Compare every sigma_k(X) with the largest singular value of each copy,
    /// i.e. with all permuted singular values.
    Top,
};

inline std::string_view to_string(PaThreshold t) { return t == PaThreshold::Sequential ? "sequential" : "top"; }

inline PaThreshold parse_pa_threshold(std::string_view name) {
    if (name == "sequential") return PaThreshold::Sequential;
    if (name == "top") return PaThreshold::Top;
    throw InputError("unknown PA threshold mode '" + std::string(name) + "'");
}

struct PaOptions {
    std::size_t n_permutations = 19;
    double percentile = 100.0;
    std::uint64_t seed = 0;
    PaThreshold threshold = PaThreshold::Sequential;
    /// Draw fresh permutations for every candidate k instead of reusing one set.
    bool redraw_per_step = false;
};

/**
 * Permutation parallel analysis. Each of the n_permutations matrices permutes
 * every column of X independently; copy i shuffles column j with
 * substream(seed, {0, i, 0, key_j}) (redraw mode: {1, k, i, key_j}) where
 * key_j comes from detail::column_stream_keys, so relabelling or rescaling
 * columns leaves the null draws attached to the same data. Factor k is kept
 * while sigma_k(X) strictly exceeds the percentile of the permuted
 * reference values (sigma_k of each copy, or sigma_1 under PaThreshold::Top).
 */
inline SelectionResult pa_select(const DataMatrix& x, const PaOptions& opts = {}) {
    if (opts.n_permutations < 1) {
        throw InputError("n_permutations must be at least 1");
    }
    if (!(opts.percentile > 0.0 && opts.percentile <= 100.0)) {
        throw InvalidPercentile("percentile must lie in (0, 100], got " + std::to_string(opts.percentile));
    }

    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(x.n()));
    const Vector observed = singular_values(x) * inv_sqrt_n;
    const std::size_t r = x.min_dim();

    const auto keys = detail::column_stream_keys(x.values());
    auto permuted_spectrum = [&](std::uint64_t mode, std::uint64_t a, std::uint64_t b) {
        return Vector(singular_values(detail::permute_columns(x.values(), opts.seed, mode, a, b, keys)) * inv_sqrt_n);
    };

    std::vector<Vector> shared;
    if (!opts.redraw_per_step) {
        shared.reserve(opts.n_permutations);
        for (std::size_t i = 0; i < opts.n_permutations; ++i) {
            shared.push_back(permuted_spectrum(0, i, 0));
        }
    }

    SelectionResult res{Method::PA};
    res.seed = opts.seed;
    std::vector<double> null_values(opts.n_permutations);
    for (std::size_t idx = 1; idx <= r; ++idx) {
        const auto ref = static_cast<Eigen::Index>(opts.threshold == PaThreshold::Top ? 0 : idx - 1);
        for (std::size_t i = 0; i < opts.n_permutations; ++i) {
            null_values[i] = opts.redraw_per_step ? permuted_spectrum(1, idx, i)[ref] : shared[i][ref];
        }
        const double threshold = detail::nearest_rank(null_values, opts.percentile);
        const double stat = observed[static_cast<Eigen::Index>(idx - 1)];
        const bool accepted = stat > threshold;
        res.steps.push_back({idx, stat, threshold, accepted, {}});
        if (!accepted) {
            break;
        }
        ++res.k;
    }
    return res;
}

/**
 * Deterministic parallel analysis: count singular values of n^{-1/2} X above
 * (1 + eps) sqrt(upper edge of F_{p/n, Dhat}), Dhat = diag(X^T X / n).
 */
inline SelectionResult dpa_select(const DataMatrix& x, double eps = 0.0) {
    detail::check_eps(eps);
    const auto atoms = column_second_moments(x.values());
    if (detail::all_zero(atoms)) {
        return detail::zero_matrix_result(Method::DPA);
    }
    const auto edge = upper_edge(x.aspect_ratio(), VarianceDistribution::uniform(atoms));
    const double threshold = (1.0 + eps) * std::sqrt(edge.edge);
    const Vector sv = singular_values(x) / std::sqrt(static_cast<double>(x.n()));

    SelectionResult res{Method::DPA};
    res.edge_used = edge.edge;
    for (std::size_t idx = 1; idx <= x.min_dim(); ++idx) {
        const double stat = sv[static_cast<Eigen::Index>(idx - 1)];
        const bool accepted = stat > threshold;
        res.steps.push_back({idx, stat, threshold, accepted, {}});
        if (!accepted) {
            break;
        }
        ++res.k;
    }
    return res;
}

/// Deflations between exact recomputations of the deflated column variances.
inline constexpr std::size_t kDdpaRecomputeInterval = 32;

/**
 * Deflated DPA. After each acceptance the top singular triple is removed and
 * the edge is recomputed from the deflated column variances. One SVD of X
 * serves every step: deflating sigma_k u_k v_k^T lowers column j's second
 * moment by sigma_k^2 v_k(j)^2 / n, with an exact recompute from the tail
 * triples every kDdpaRecomputeInterval steps.
 */
inline SelectionResult ddpa_select(const DataMatrix& x, double eps = 0.0) {
    detail::check_eps(eps);
    std::vector<double> phi = column_second_moments(x.values());
    if (detail::all_zero(phi)) {
        return detail::zero_matrix_result(Method::DDPA);
    }

    const auto dec = svd(x);
    const auto& s = dec.singular_values;
    const auto& v = dec.right_vectors;
    const std::size_t r = x.min_dim();
    const std::size_t p = x.p();
    const double n = static_cast<double>(x.n());
    const double gamma = x.aspect_ratio();

    // tail_energy[k] = sum_{i >= k} s_i^2, i.e. ||X_k||_F^2 after k deflations
    std::vector<double> tail_energy(r + 1, 0.0);
    for (std::size_t i = r; i-- > 0;) {
        const double si = s[static_cast<Eigen::Index>(i)];
        tail_energy[i] = tail_energy[i + 1] + si * si;
    }
    const double zero_energy = 1e-24 * tail_energy[0];

    SelectionResult res{Method::DDPA};
    for (std::size_t k = 0;; ++k) {
        const std::size_t idx = k + 1;
        if (k + 1 >= r && k > 0) {
            break;  // rank guard: at most r - 1 deflations
        }
        if (tail_energy[k] <= zero_energy || detail::all_zero(phi)) {
            res.steps.push_back({idx, 0.0, 0.0, false, "zero residual"});
            break;
        }
        const auto edge = upper_edge(gamma, VarianceDistribution::uniform(phi));
        const double threshold = (1.0 + eps) * std::sqrt(edge.edge);
        const double stat = s[static_cast<Eigen::Index>(k)] / std::sqrt(n);
        const bool accepted = stat > threshold;
        res.edge_used = edge.edge;
        res.steps.push_back({idx, stat, threshold, accepted, {}});
        if (!accepted) {
            break;
        }
        ++res.k;
        if (res.k >= r) {
            break;
        }

        const auto kk = static_cast<Eigen::Index>(k);
        if (res.k % kDdpaRecomputeInterval == 0) {
            for (std::size_t j = 0; j < p; ++j) {
                CompensatedSum acc;
                for (auto i = static_cast<Eigen::Index>(res.k); i < static_cast<Eigen::Index>(r); ++i) {
                    const double t = s[i] * v(static_cast<Eigen::Index>(j), i);
                    acc += t * t;
                }
                phi[j] = acc.value() / n;
            }
        } else {
            const double s2 = s[kk] * s[kk];
            for (std::size_t j = 0; j < p; ++j) {
                const double vj = v(static_cast<Eigen::Index>(j), kk);
                phi[j] = std::max(0.0, phi[j] - s2 * vj * vj / n);
            }
        }
    }
    return res;
}

/**
 * Which power of the spike estimate enters the DDPA+ keep rule.
 *
 * ell = 1/D estimates the squared signal singular value theta^2, and the
 * rank-one estimate beats zero in MSE iff sigma_1^2 < 4 theta^2 c_r^2 c_l^2,
 * giving the Linear form. Squared uses ell^2 instead; it is not invariant
 * to rescaling X.
 */
enum class SpikePower {
    Linear,   // sigma_1^2 < 4 ell c_r^2 c_l^2
    Squared,  // sigma_1^2 < 4 ell^2 c_r^2 c_l^2
};

inline std::string_view to_string(SpikePower s) { return s == SpikePower::Linear ? "linear" : "squared"; }

inline SpikePower parse_spike_power(std::string_view name) {
    if (name == "linear") return SpikePower::Linear;
    if (name == "squared") return SpikePower::Squared;
    throw InputError("unknown spike power '" + std::string(name) + "'");
}

struct DdpaPlusOptions {
    SpikePower spike_power = SpikePower::Linear;
};

/// Threshold of the DDPA+ keep rule for one set of functionals.
inline double ddpa_plus_threshold(const SpectralFunctionals& f, SpikePower power) {
    const double spike = power == SpikePower::Squared ? f.ell * f.ell : f.ell;
    return 4.0 * spike * f.c_r_sq * f.c_l_sq;
}

/**
 * DDPA+: deflate while the leading singular triple beats the zero estimator
 * in mean squared error, judged by OptShrink estimates of the spike and of
 * the singular vector cosines. Eigenvalues are those of X^T X / n; the
 * deflated spectrum after k steps is lambda_{k+1}, ..., lambda_r.
 */
inline SelectionResult ddpa_plus_select(const DataMatrix& x, const DdpaPlusOptions& opts = {}) {
    const std::size_t r = x.min_dim();
    if (r < 2) {
        throw DimensionMismatch("ddpa+ needs min(n, p) >= 2");
    }
    const double n = static_cast<double>(x.n());
    const double gamma = x.aspect_ratio();
    const Vector s = singular_values(x);
    std::vector<double> lambda(r);
    for (std::size_t i = 0; i < r; ++i) {
        const double si = s[static_cast<Eigen::Index>(i)];
        lambda[i] = si * si / n;
    }

    SelectionResult res{Method::DDPA_PLUS};
    for (std::size_t k = 0; r - k >= 2; ++k) {
        const std::size_t idx = k + 1;
        const std::span<const double> tail(lambda.data() + k, r - k);
        if (!(tail[0] > 0.0)) {
            res.steps.push_back({idx, tail[0], 0.0, false, "zero residual"});
            break;
        }
        double threshold = 0.0;
        std::string note;
        try {
            threshold = ddpa_plus_threshold(optshrink_functionals(tail, gamma), opts.spike_power);
        } catch (const DegenerateTopPair&) {
            note = "degenerate top pair";
        } catch (const ZeroD&) {
            note = "zero D-transform";
        }
        const bool accepted = note.empty() && tail[0] < threshold;
        res.steps.push_back({idx, tail[0], threshold, accepted, note});
        if (!accepted) {
            break;
        }
        ++res.k;
    }
    return res;
}

} // namespace dpa
