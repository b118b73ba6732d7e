#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "random.hpp"
#include "selectors.hpp"

namespace dpa {

enum class NoiseKind { GaussianHetero, BernoulliStd, ClusteredTree };

/**
 * Noise model for simulated data.
 *
 * GaussianHetero: column j has variance grid[j], p equally spaced values on
 * [lo, hi]. BernoulliStd: IID (Bernoulli(prob) - prob) / sqrt(prob (1 - prob)).
 * ClusteredTree: Gamma^{1/2} Z Sigma^{1/2} where Gamma holds eigenvalue 2^i
 * with multiplicity 2^{depth - i}, i = 1..depth (so n = 2^depth - 1) and
 * Sigma is the [lo, hi] variance grid.
 */
struct NoiseSpec {
    NoiseKind kind = NoiseKind::GaussianHetero;
    double lo = 1.0;
    double hi = 2.0;
    double prob = 0.5;
    int depth = 7;

    static NoiseSpec gaussian_hetero(double lo = 1.0, double hi = 2.0) {
        return {NoiseKind::GaussianHetero, lo, hi};
    }
    static NoiseSpec bernoulli(double prob) {
        NoiseSpec s{NoiseKind::BernoulliStd};
        s.prob = prob;
        return s;
    }
    static NoiseSpec clustered_tree(int depth, double lo = 1.0, double hi = 2.0) {
        NoiseSpec s{NoiseKind::ClusteredTree, lo, hi};
        s.depth = depth;
        return s;
    }

    void validate() const {
        switch (kind) {
        case NoiseKind::GaussianHetero:
        case NoiseKind::ClusteredTree:
            if (!(lo > 0.0 && lo <= hi && std::isfinite(hi))) {
                throw DomainError("variance grid needs 0 < lo <= hi");
            }
            if (kind == NoiseKind::ClusteredTree && (depth < 1 || depth > 30)) {
                throw DomainError("tree depth must be in [1, 30]");
            }
            break;
        case NoiseKind::BernoulliStd:
            if (!(prob > 0.0 && prob < 1.0)) {
                throw DomainError("Bernoulli probability must lie in (0, 1)");
            }
            break;
        }
    }
};

struct FactorModelSpec {
    std::size_t n = 500;
    std::size_t p = 300;
    std::vector<double> thetas;
    NoiseSpec noise;
    std::uint64_t seed = 0;
};

/// p equally spaced values from lo to hi inclusive (all lo when p == 1).
inline std::vector<double> variance_grid(std::size_t p, double lo, double hi) {
    std::vector<double> grid(p, lo);
    if (p > 1) {
        for (std::size_t j = 0; j < p; ++j) {
            grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(p - 1);
        }
    }
    return grid;
}

/// Diagonal of the BinaryTree sample covariance: 2^i repeated 2^{depth-i} times.
inline std::vector<double> clustered_tree_eigenvalues(int depth) {
    std::vector<double> eig;
    eig.reserve((std::size_t{1} << depth) - 1);
    for (int i = 1; i <= depth; ++i) {
        const std::size_t copies = std::size_t{1} << (depth - i);
        eig.insert(eig.end(), copies, std::ldexp(1.0, i));
    }
    return eig;
}

/**
 * Draw X = eta Lambda^T + E. eta is n x r standard normal; Lambda = Z diag(theta)
 * with Z a p x r standard normal matrix whose columns are normalized to unit
 * length. Scores, loadings and noise come from separate substreams of `seed`.
 */
inline DataMatrix gen_factor_model(const FactorModelSpec& spec) {
    spec.noise.validate();
    const std::size_t r = spec.thetas.size();
    if (spec.n < 2 || spec.p < 1) {
        throw DimensionMismatch("factor model needs n >= 2 and p >= 1");
    }
    if (r > std::min(spec.n, spec.p)) {
        throw DimensionMismatch("number of factors exceeds min(n, p)");
    }
    for (double t : spec.thetas) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("factor strengths must be positive");
        }
    }
    if (spec.noise.kind == NoiseKind::ClusteredTree &&
        spec.n != (std::size_t{1} << spec.noise.depth) - 1) {
        throw DimensionMismatch("clustered tree of depth " + std::to_string(spec.noise.depth) + " needs n = " +
                                std::to_string((std::size_t{1} << spec.noise.depth) - 1));
    }

    const auto n = static_cast<Eigen::Index>(spec.n);
    const auto p = static_cast<Eigen::Index>(spec.p);
    std::normal_distribution<double> normal;

    Matrix x(n, p);
    auto noise_rng = substream(spec.seed, {2});
    switch (spec.noise.kind) {
    case NoiseKind::GaussianHetero: {
        const auto var = variance_grid(spec.p, spec.noise.lo, spec.noise.hi);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double sd = std::sqrt(var[static_cast<std::size_t>(j)]);
            for (Eigen::Index i = 0; i < n; ++i) {
                x(i, j) = sd * normal(noise_rng);
            }
        }
        break;
    }
    case NoiseKind::BernoulliStd: {
        const double s = spec.noise.prob;
        const double scale = 1.0 / std::sqrt(s * (1.0 - s));
        std::bernoulli_distribution coin(s);
        for (Eigen::Index j = 0; j < p; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                x(i, j) = ((coin(noise_rng) ? 1.0 : 0.0) - s) * scale;
            }
        }
        break;
    }
    case NoiseKind::ClusteredTree: {
        const auto row_var = clustered_tree_eigenvalues(spec.noise.depth);
        const auto col_var = variance_grid(spec.p, spec.noise.lo, spec.noise.hi);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double col_sd = std::sqrt(col_var[static_cast<std::size_t>(j)]);
            for (Eigen::Index i = 0; i < n; ++i) {
                x(i, j) = std::sqrt(row_var[static_cast<std::size_t>(i)]) * col_sd * normal(noise_rng);
            }
        }
        break;
    }
    }

    if (r > 0) {
        const auto rr = static_cast<Eigen::Index>(r);
        auto score_rng = substream(spec.seed, {0});
        auto loading_rng = substream(spec.seed, {1});
        Matrix eta(n, rr);
        for (Eigen::Index c = 0; c < rr; ++c) {
            for (Eigen::Index i = 0; i < n; ++i) {
                eta(i, c) = normal(score_rng);
            }
        }
        Matrix loadings(p, rr);
        for (Eigen::Index c = 0; c < rr; ++c) {
            for (Eigen::Index j = 0; j < p; ++j) {
                loadings(j, c) = normal(loading_rng);
            }
            loadings.col(c) *= spec.thetas[static_cast<std::size_t>(c)] / loadings.col(c).norm();
        }
        x.noalias() += eta * loadings.transpose();
    }
    return DataMatrix(std::move(x));
}

// ---------------------------------------------------------------------------
// Experiments

struct GridPoint {
    std::string label;                                // e.g. "s=0.2" or "gamma=4;s=0.2"
    std::vector<std::pair<std::string, double>> params;
    FactorModelSpec model;                            // seed is filled per replicate
};

struct ScenarioConfig {
    std::string name;
    std::vector<GridPoint> grid;
    std::vector<Method> methods;
    std::size_t replicates = 100;
    std::size_t n_permutations = 19;
    PaThreshold pa_threshold = PaThreshold::Sequential;
};

struct ExperimentOverrides {
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_permutations;
    std::optional<PaThreshold> pa_threshold;
    std::optional<std::vector<Method>> methods;
    /// Run only these grid indices (0-based), in the given order.
    std::optional<std::vector<std::size_t>> grid_indices;
};

struct CellResult {
    std::string grid;
    std::vector<std::pair<std::string, double>> params;
    Method method;
    double mean_k = 0.0;
    double sd_k = 0.0;
    std::size_t replicates = 0;
    double wall_ms = 0.0;
    std::vector<std::size_t> ks;  // by replicate index
};

struct ExperimentResult {
    std::string scenario;
    std::uint64_t seed = 0;
    std::size_t replicates = 0;
    std::size_t n_permutations = 0;
    PaThreshold pa_threshold = PaThreshold::Sequential;
    std::vector<CellResult> cells;  // grid-major, then method order
};

/// n equally spaced points from a to b inclusive.
inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n, a);
    for (std::size_t i = 1; i < n; ++i) {
        out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    if (n > 1) {
        out.back() = b;
    }
    return out;
}

inline const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{
        "fig1_strength",       "fig1_timing",      "fig2_shadow2",       "fig2_shadow3",
        "fig3_ddpa_plus_1f",   "fig3_ddpa_plus_3f", "appendix_gamma",    "appendix_bernoulli",
        "appendix_clustered",
    };
    return names;
}

namespace detail {

inline std::string format_number(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline GridPoint one_factor_point(std::size_t n, std::size_t p, double s, NoiseSpec noise, std::string prefix = {}) {
    const double gamma = static_cast<double>(p) / static_cast<double>(n);
    GridPoint g;
    g.label = prefix + "s=" + format_number(s);
    g.params.emplace_back("s", s);
    g.model.n = n;
    g.model.p = p;
    g.model.thetas = {std::sqrt(gamma) * s};
    g.model.noise = noise;
    return g;
}

/// Strengths c_i * sqrt(gamma), with the varied coordinate labelled `name`.
inline GridPoint multi_factor_point(std::size_t n, std::size_t p, std::vector<double> cs, const std::string& name,
                                    double varied) {
    const double gamma = static_cast<double>(p) / static_cast<double>(n);
    GridPoint g;
    g.label = name + "=" + format_number(varied);
    g.params.emplace_back(name, varied);
    g.model.n = n;
    g.model.p = p;
    for (double c : cs) {
        g.model.thetas.push_back(c * std::sqrt(gamma));
    }
    g.model.noise = NoiseSpec::gaussian_hetero();
    return g;
}

} // namespace detail

/**
 * Grid, methods and defaults for a named scenario: n = 500, p = 300 with a
 * [1, 2] variance grid unless the scenario says otherwise. The PA-versus-DPA strength and timing
 * studies compare against all permuted singular values (PaThreshold::Top);
 * the clustered study uses sequential PA.
 */
inline ScenarioConfig scenario_config(const std::string& name) {
    ScenarioConfig cfg;
    cfg.name = name;
    const auto s_grid = linspace(0.2, 6.0, 10);
    if (name == "fig1_strength") {
        cfg.methods = {Method::PA, Method::DPA};
        cfg.pa_threshold = PaThreshold::Top;
        for (double s : s_grid) {
            cfg.grid.push_back(detail::one_factor_point(500, 300, s, NoiseSpec::gaussian_hetero()));
        }
    } else if (name == "fig1_timing") {
        cfg.methods = {Method::PA, Method::DPA};
        cfg.pa_threshold = PaThreshold::Top;
        cfg.replicates = 1;
        cfg.n_permutations = 20;
        for (std::size_t n = 500; n <= 3500; n += 500) {
            const std::size_t p = n * 3 / 5;
            GridPoint g;
            g.label = "n=" + std::to_string(n);
            g.params = {{"n", static_cast<double>(n)}, {"p", static_cast<double>(p)}};
            g.model.n = n;
            g.model.p = p;
            g.model.thetas = {6.0 * std::sqrt(0.6)};
            g.model.noise = NoiseSpec::gaussian_hetero();
            cfg.grid.push_back(std::move(g));
        }
    } else if (name == "fig2_shadow2") {
        cfg.methods = {Method::DPA, Method::DDPA};
        for (double c2 : linspace(6.0, 70.0, 20)) {
            cfg.grid.push_back(detail::multi_factor_point(500, 300, {6.0, c2}, "c2", c2));
        }
    } else if (name == "fig2_shadow3") {
        cfg.methods = {Method::DPA, Method::DDPA};
        for (double c3 : linspace(10.0, 70.0, 20)) {
            cfg.grid.push_back(detail::multi_factor_point(500, 300, {6.0, 10.0, c3}, "c3", c3));
        }
    } else if (name == "fig3_ddpa_plus_1f") {
        cfg.methods = {Method::DDPA, Method::DDPA_PLUS};
        for (double s : s_grid) {
            cfg.grid.push_back(detail::one_factor_point(500, 300, s, NoiseSpec::gaussian_hetero()));
        }
    } else if (name == "fig3_ddpa_plus_3f") {
        cfg.methods = {Method::DDPA, Method::DDPA_PLUS};
        for (double c3 : linspace(10.0, 70.0, 20)) {
            cfg.grid.push_back(detail::multi_factor_point(500, 300, {6.0, 10.0, c3}, "c3", c3));
        }
    } else if (name == "appendix_gamma") {
        cfg.methods = {Method::PA, Method::DPA};
        cfg.pa_threshold = PaThreshold::Top;
        for (std::size_t n : {std::size_t{75}, std::size_t{150}}) {
            const double gamma = 300.0 / static_cast<double>(n);
            for (double s : s_grid) {
                auto g = detail::one_factor_point(n, 300, s, NoiseSpec::gaussian_hetero(),
                                                  "gamma=" + detail::format_number(gamma) + ";");
                g.params.insert(g.params.begin(), {"gamma", gamma});
                cfg.grid.push_back(std::move(g));
            }
        }
    } else if (name == "appendix_bernoulli") {
        cfg.methods = {Method::PA, Method::DPA};
        cfg.pa_threshold = PaThreshold::Top;
        for (double prob : {0.5, 0.05}) {
            for (double s : s_grid) {
                auto g = detail::one_factor_point(75, 300, s, NoiseSpec::bernoulli(prob),
                                                  "prob=" + detail::format_number(prob) + ";");
                g.params.insert(g.params.begin(), {"prob", prob});
                cfg.grid.push_back(std::move(g));
            }
        }
    } else if (name == "appendix_clustered") {
        cfg.methods = {Method::PA, Method::DPA, Method::DDPA, Method::DDPA_PLUS};
        for (double gamma : {2.0, 1.5}) {
            const std::size_t p = static_cast<std::size_t>(gamma * 127.0);
            // s = 0 is a pure-noise cell; factor strengths must be positive.
            for (double s : linspace(0.0, 10.0, 11)) {
                GridPoint g;
                g.label = "gamma=" + detail::format_number(gamma) + ";s=" + detail::format_number(s);
                g.params = {{"gamma", gamma}, {"s", s}};
                g.model.n = 127;
                g.model.p = p;
                if (s > 0.0) {
                    g.model.thetas = {std::sqrt(static_cast<double>(p) / 127.0) * s};
                }
                g.model.noise = NoiseSpec::clustered_tree(7);
                cfg.grid.push_back(std::move(g));
            }
        }
    } else {
        throw UnknownScenario(name);
    }
    return cfg;
}

/// Run one selector on an already centered matrix.
inline SelectionResult run_selector(Method m, const DataMatrix& x, std::size_t n_permutations, std::uint64_t pa_seed,
                                    PaThreshold pa_threshold = PaThreshold::Sequential) {
    switch (m) {
    case Method::PA: {
        PaOptions opts;
        opts.n_permutations = n_permutations;
        opts.seed = pa_seed;
        opts.threshold = pa_threshold;
        return pa_select(x, opts);
    }
    case Method::DPA: return dpa_select(x);
    case Method::DDPA: return ddpa_select(x);
    case Method::DDPA_PLUS: return ddpa_plus_select(x);
    }
    throw InputError("unknown method");
}

/**
 * Run a configured grid. Replicate r at grid index g draws its data from
 * substream(seed, {g, r, 0}) and its PA permutations from {g, r, 1}, so
 * results do not depend on which methods run or in which order.
 * Each replicate matrix is column-centered before selection.
 */
inline ExperimentResult run_experiment(const ScenarioConfig& base, const ExperimentOverrides& overrides = {},
                                       const std::function<void(const CellResult&)>& on_cell = {}) {
    ScenarioConfig cfg = base;
    if (overrides.replicates) cfg.replicates = *overrides.replicates;
    if (overrides.n_permutations) cfg.n_permutations = *overrides.n_permutations;
    if (overrides.methods) cfg.methods = *overrides.methods;
    if (overrides.pa_threshold) cfg.pa_threshold = *overrides.pa_threshold;
    if (cfg.replicates < 1) {
        throw InputError("replicates must be at least 1");
    }
    std::vector<std::size_t> indices;
    if (overrides.grid_indices) {
        indices = *overrides.grid_indices;
        for (auto i : indices) {
            if (i >= cfg.grid.size()) {
                throw InputError("grid index " + std::to_string(i) + " out of range for " + cfg.name);
            }
        }
    } else {
        for (std::size_t i = 0; i < cfg.grid.size(); ++i) indices.push_back(i);
    }

    ExperimentResult out;
    out.scenario = cfg.name;
    out.seed = overrides.seed.value_or(0);
    out.replicates = cfg.replicates;
    out.n_permutations = cfg.n_permutations;
    out.pa_threshold = cfg.pa_threshold;

    using clock = std::chrono::steady_clock;
    for (std::size_t gi : indices) {
        const GridPoint& point = cfg.grid[gi];
        std::vector<CellResult> cells(cfg.methods.size());
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            cells[m].grid = point.label;
            cells[m].params = point.params;
            cells[m].method = cfg.methods[m];
            cells[m].replicates = cfg.replicates;
            cells[m].ks.resize(cfg.replicates);
        }
        for (std::size_t rep = 0; rep < cfg.replicates; ++rep) {
            FactorModelSpec spec = point.model;
            spec.seed = substream(out.seed, {gi, rep, 0})();
            const std::uint64_t pa_seed = substream(out.seed, {gi, rep, 1})();
            const DataMatrix x = standardize(gen_factor_model(spec), false);
            for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
                const auto t0 = clock::now();
                const auto res = run_selector(cfg.methods[m], x, cfg.n_permutations, pa_seed, cfg.pa_threshold);
                cells[m].wall_ms += std::chrono::duration<double, std::milli>(clock::now() - t0).count();
                cells[m].ks[rep] = res.k;
            }
        }
        for (auto& cell : cells) {
            CompensatedSum sum;
            for (auto k : cell.ks) sum += static_cast<double>(k);
            cell.mean_k = sum.value() / static_cast<double>(cell.ks.size());
            CompensatedSum ss;
            for (auto k : cell.ks) {
                const double d = static_cast<double>(k) - cell.mean_k;
                ss += d * d;
            }
            cell.sd_k = cell.ks.size() > 1 ? std::sqrt(ss.value() / static_cast<double>(cell.ks.size() - 1)) : 0.0;
            if (on_cell) on_cell(cell);
            out.cells.push_back(std::move(cell));
        }
    }
    return out;
}

inline ExperimentResult run_experiment(const std::string& scenario, const ExperimentOverrides& overrides = {}) {
    return run_experiment(scenario_config(scenario), overrides);
}

} // namespace dpa
