// Acceptance run: one PASS / FAIL / SKIP line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "dpa/dpa.hpp"
#include "../oracles.hpp"

namespace {

using clock_type = std::chrono::steady_clock;
using dpa::Method;

double ms_since(clock_type::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock_type::now() - t0).count();
}

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
    Verdict verdict;
    std::string detail;
};

Outcome pass_if(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

std::string fmt(double x, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << x;
    return s.str();
}

double frac_equal(const std::vector<std::size_t>& ks, std::size_t k) {
    return static_cast<double>(std::count(ks.begin(), ks.end(), k)) / static_cast<double>(ks.size());
}

const dpa::CellResult& cell(const dpa::ExperimentResult& r, const std::string& grid, Method m) {
    for (const auto& c : r.cells) {
        if (c.grid == grid && c.method == m) return c;
    }
    throw std::runtime_error("missing cell " + grid);
}

// 1
Outcome closed_form_edge() {
    double worst = 0, slowest = 0;
    for (double g : {0.1, 0.5, 0.6, 1.0, 2.0, 10.0}) {
        const auto h = dpa::VarianceDistribution::uniform({1.0});
        const int calls = 200;
        double edge = 0;
        const auto t0 = clock_type::now();
        for (int i = 0; i < calls; ++i) edge = dpa::upper_edge(g, h).edge;
        slowest = std::max(slowest, ms_since(t0) / calls);
        const double exact = (1 + std::sqrt(g)) * (1 + std::sqrt(g));
        worst = std::max(worst, std::abs(edge - exact) / exact);
    }
    return pass_if(worst <= 1e-8 && slowest < 1.0,
                   "max rel err " + fmt(worst, 3) + ", slowest " + fmt(slowest * 1000, 3) + " us/call");
}

// 2
Outcome edge_vs_grid() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(1, 1000);
    std::uniform_real_distribution<double> atom(0.0, 5.0), weight(0.05, 1.0);
    double worst = 0;
    int cases = 0, brute_checked = 0;
    double brute_worst = 0;
    for (int set = 0; set < 50; ++set) {
        const int p = set < 5 ? 1 + set : size(rng);
        std::vector<double> phi(p), w(p);
        for (auto& a : phi) a = atom(rng);
        if (set % 7 == 3) phi[0] = 0.0;
        double total = 0;
        for (auto& x : w) total += (x = set % 2 ? weight(rng) : 1.0);
        for (auto& x : w) x /= total;
        if (*std::max_element(phi.begin(), phi.end()) == 0.0) phi.back() = 1.0;
        double sum = 0;
        for (std::size_t j = 0; j + 1 < w.size(); ++j) sum += w[j];
        w.back() = 1.0 - sum;
        for (double g : {0.3, 1.0, 3.0}) {
            const double got = dpa::upper_edge(g, dpa::VarianceDistribution(w, phi)).edge;
            const double ref = oracle::grid_edge(g, w, phi);
            worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
            ++cases;
            if (p <= 5) {
                const double brute = oracle::grid_edge_brute(g, w, phi);
                brute_worst = std::max(brute_worst, std::abs(got - brute) / std::abs(brute));
                ++brute_checked;
            }
        }
    }
    return pass_if(worst <= 1e-6 && brute_worst <= 1e-6,
                   std::to_string(cases) + " cases, max rel err " + fmt(worst, 3) + " (exhaustive scan on " +
                       std::to_string(brute_checked) + ": " + fmt(brute_worst, 3) + ")");
}

// 3
Outcome strength_sweep() {
    const auto cfg = dpa::scenario_config("fig1_strength");
    dpa::ExperimentOverrides ov;
    ov.replicates = 100;
    ov.seed = 3;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        const double s = cfg.grid[i].params[0].second;
        if (s >= 2.7 || i == 0) idx.push_back(i);
    }
    ov.grid_indices = idx;
    const auto res = dpa::run_experiment(cfg, ov);
    bool ok = true;
    double worst_strong = 1.0, null_pa = 0, null_dpa = 0;
    for (std::size_t i : idx) {
        for (Method m : {Method::PA, Method::DPA}) {
            const auto& c = cell(res, cfg.grid[i].label, m);
            if (i == 0) {
                const double f = frac_equal(c.ks, 0);
                (m == Method::PA ? null_pa : null_dpa) = f;
                ok = ok && f >= 0.90;
            } else {
                const double f = frac_equal(c.ks, 1);
                worst_strong = std::min(worst_strong, f);
                ok = ok && f >= 0.95;
            }
        }
    }
    // Reference only: sequential PA on the weakest and strongest cells, fewer replicates.
    dpa::ExperimentOverrides seq = ov;
    seq.replicates = 20;
    seq.methods = std::vector<Method>{Method::PA};
    seq.pa_threshold = dpa::PaThreshold::Sequential;
    seq.grid_indices = std::vector<std::size_t>{0, cfg.grid.size() - 1};
    const auto ref = dpa::run_experiment(cfg, seq);
    std::string ref_text;
    for (const auto& c : ref.cells) ref_text += " " + c.grid + ":" + fmt(c.mean_k, 3);
    return pass_if(ok, "min P(k=1) at s>=2.7 " + fmt(worst_strong, 3) + "; P(k=0) at s=0.2 pa " + fmt(null_pa, 3) +
                           " dpa " + fmt(null_dpa, 3) + "; sequential-pa mean k (20 reps)" + ref_text);
}

// 4
Outcome shadowing() {
    const auto cfg = dpa::scenario_config("fig2_shadow2");
    dpa::ExperimentOverrides ov;
    ov.replicates = 100;
    ov.seed = 4;
    ov.grid_indices = std::vector<std::size_t>{cfg.grid.size() - 1};
    const auto res = dpa::run_experiment(cfg, ov);
    const auto& label = cfg.grid.back().label;
    const auto& d = cell(res, label, Method::DPA);
    const auto& dd = cell(res, label, Method::DDPA);
    const bool ok = d.mean_k <= 1.2 && dd.mean_k >= 1.8 && dd.mean_k <= 2.7 && dd.sd_k <= 0.8;
    return pass_if(ok, label + ": dpa mean " + fmt(d.mean_k, 3) + "; ddpa mean " + fmt(dd.mean_k, 3) + " sd " +
                           fmt(dd.sd_k, 3));
}

// 5
Outcome stabilization() {
    auto cfg = dpa::scenario_config("fig3_ddpa_plus_3f");
    cfg.grid = {dpa::detail::multi_factor_point(500, 300, {6.0, 10.0, 50.0}, "c3", 50.0)};
    dpa::ExperimentOverrides ov;
    ov.replicates = 100;
    ov.seed = 5;
    const auto res = dpa::run_experiment(cfg, ov);
    const auto& dd = cell(res, "c3=50", Method::DDPA);
    const auto& plus = cell(res, "c3=50", Method::DDPA_PLUS);
    const bool ok = plus.sd_k <= dd.sd_k && plus.mean_k >= 2.5 && plus.mean_k <= 3.3;
    return pass_if(ok, "ddpa mean " + fmt(dd.mean_k, 3) + " sd " + fmt(dd.sd_k, 3) + "; ddpa+ mean " +
                           fmt(plus.mean_k, 3) + " sd " + fmt(plus.sd_k, 3));
}

// 6
Outcome timing() {
    const auto cfg = dpa::scenario_config("fig1_timing");
    dpa::ExperimentOverrides ov;
    ov.n_permutations = 20;
    ov.seed = 6;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        if (cfg.grid[i].model.n >= 1000) idx.push_back(i);
    }
    ov.grid_indices = idx;
    const auto res = dpa::run_experiment(cfg, ov);
    bool ok = true;
    double worst = INFINITY;
    std::string text;
    for (std::size_t i : idx) {
        const auto& label = cfg.grid[i].label;
        const double ratio = cell(res, label, Method::PA).wall_ms / cell(res, label, Method::DPA).wall_ms;
        worst = std::min(worst, ratio);
        ok = ok && ratio >= 5.0;
        text += " " + label + ":" + fmt(ratio, 3) + "x";
    }
    return pass_if(ok, "pa/dpa wall clock" + text);
}

// 7
Outcome pa_null() {
    const int reps = 1000;
    int hits = 0;
    for (int r = 0; r < reps; ++r) {
        dpa::FactorModelSpec spec;
        spec.n = 50;
        spec.p = 20;
        spec.noise = dpa::NoiseSpec::gaussian_hetero(1.0, 1.0);
        spec.seed = dpa::substream(7, {static_cast<std::uint64_t>(r), 0})();
        const auto x = dpa::standardize(dpa::gen_factor_model(spec), false);
        dpa::PaOptions o;
        o.n_permutations = 19;
        o.percentile = 100;
        o.seed = dpa::substream(7, {static_cast<std::uint64_t>(r), 1})();
        if (dpa::pa_select(x, o).k >= 1) ++hits;
    }
    const double rate = static_cast<double>(hits) / reps;
    return pass_if(rate >= 0.03 && rate <= 0.08, "P(k>=1) = " + fmt(rate, 3) + " over " + std::to_string(reps));
}

// 8
Outcome optshrink_identities() {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> bulk(0.05, 4.0), gap(0.01, 30.0), gam(0.05, 5.0);
    std::uniform_int_distribution<int> len(2, 200);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    double worst_id = 0, worst_fd = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<double> s(len(rng));
        for (auto& x : s) x = bulk(rng);
        std::sort(s.begin(), s.end(), std::greater<>());
        s[0] = s.size() > 1 ? s[1] + gap(rng) : s[0];
        const double g = gam(rng);
        const auto f = dpa::optshrink_functionals(s, g);
        worst_id = std::max({worst_id, rel(f.D, f.lambda * f.m * f.v), std::abs(f.ell * f.D - 1.0),
                             rel(f.D_prime, f.m * f.v + f.lambda * (f.m * f.v_prime + f.m_prime * f.v))});
        auto m_of = [&](double l) {
            long double m = 0;
            for (std::size_t i = 1; i < s.size(); ++i) m += 1.0L / (s[i] - l);
            return static_cast<double>(m / (s.size() - 1));
        };
        auto v_of = [&](double l) { return g * m_of(l) - (1 - g) / l; };
        const double h = 1e-6 * (s[0] - s[1]);
        worst_fd = std::max({worst_fd, rel(f.m_prime, (m_of(s[0] + h) - m_of(s[0] - h)) / (2 * h)),
                             rel(f.v_prime, (v_of(s[0] + h) - v_of(s[0] - h)) / (2 * h))});
    }
    return pass_if(worst_id <= 1e-12 && worst_fd <= 1e-5,
                   "identities " + fmt(worst_id, 3) + ", finite differences " + fmt(worst_fd, 3));
}

// 9
Outcome invariance() {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> nd(30, 120), nf(0, 3);
    std::uniform_real_distribution<double> strength(0.5, 8.0), scale(0.01, 100.0);
    std::map<Method, int> perm_bad, scale_bad;
    const std::vector<Method> all{Method::PA, Method::DPA, Method::DDPA, Method::DDPA_PLUS};
    auto run = [](Method m, const dpa::DataMatrix& x) { return dpa::run_selector(m, x, 19, 99).k; };
    for (int t = 0; t < 100; ++t) {
        const int n = nd(rng);
        const int p = std::uniform_int_distribution<int>(5, n)(rng);
        std::vector<double> strengths(nf(rng));
        for (auto& s : strengths) s = strength(rng) * std::sqrt(static_cast<double>(p) / n);
        const dpa::DataMatrix x(oracle::spiked(n, p, strengths, 900 + t));
        std::vector<Eigen::Index> perm(p);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        dpa::Matrix xp(n, p);
        for (int j = 0; j < p; ++j) xp.col(j) = x.values().col(perm[j]);
        const double c = scale(rng);
        const dpa::DataMatrix xs(dpa::Matrix(c * x.values()));
        const dpa::DataMatrix xpd(xp);
        for (Method m : all) {
            const auto base = run(m, x);
            if (run(m, xpd) != base) ++perm_bad[m];
            if (run(m, xs) != base) ++scale_bad[m];
        }
    }
    bool ok = true;
    std::string text;
    for (Method m : all) {
        ok = ok && perm_bad[m] == 0 && scale_bad[m] == 0;
        text += " " + std::string(dpa::to_string(m)) + ":" + std::to_string(perm_bad[m]) + "/" +
                std::to_string(scale_bad[m]);
    }
    return pass_if(ok, "mismatches (permutation/scaling) of 100 each:" + text);
}

// 10
Outcome hgdp() {
    const char* path = std::getenv("DPA_HGDP_PATH");
    if (path == nullptr || !std::filesystem::exists(path)) {
        return {Verdict::Skip, "set DPA_HGDP_PATH to a local preprocessed matrix to run"};
    }
    dpa::IngestOptions opts;
    opts.scale = true;
    if (const char* h = std::getenv("DPA_HGDP_HEADER"); h != nullptr && std::string(h) == "1") opts.has_header = true;
    const auto x = dpa::ingest(path, opts);
    const auto k_dpa = dpa::dpa_select(x).k;
    const auto k_ddpa = dpa::ddpa_select(x).k;
    const auto k_plus = dpa::ddpa_plus_select(x).k;
    bool pa_ok = true;
    std::string pa_text;
    for (std::uint64_t seed : {1, 2, 3}) {
        dpa::PaOptions o;
        o.seed = seed;
        const auto k = dpa::pa_select(x, o).k;
        pa_ok = pa_ok && k >= 190 && k <= 235;
        pa_text += " " + std::to_string(k);
    }
    return pass_if(k_dpa == 122 && k_ddpa == 1042 && k_plus == 4 && pa_ok,
                   "n=" + std::to_string(x.n()) + " p=" + std::to_string(x.p()) + "; dpa " + std::to_string(k_dpa) +
                       ", ddpa " + std::to_string(k_ddpa) + ", ddpa+ " + std::to_string(k_plus) + ", pa" + pa_text);
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"closed-form edge", closed_form_edge},
        {"edge vs grid oracle", edge_vs_grid},
        {"single-factor strength sweep", strength_sweep},
        {"shadowing", shadowing},
        {"ddpa+ stabilization", stabilization},
        {"timing", timing},
        {"pa null calibration", pa_null},
        {"optshrink identities", optshrink_identities},
        {"invariance", invariance},
        {"hgdp", hgdp},
    };
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        const auto t0 = clock_type::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Verdict::Fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
        if (o.verdict == Verdict::Fail) ++failures;
        std::printf("%s %2d %s: %s [%.1f s]\n", tag, id, criteria[i].first.c_str(), o.detail.c_str(),
                    ms_since(t0) / 1000.0);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
