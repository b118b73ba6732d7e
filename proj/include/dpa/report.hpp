#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "matrix.hpp"
#include "selectors.hpp"
#include "simulate.hpp"
#include "version.hpp"

namespace dpa {

using json = nlohmann::json;

/// Statistics of PA, DPA and DDPA are singular values of n^{-1/2}X; DDPA+ works with their squares.
inline std::string_view statistic_scale(Method m) {
    return m == Method::DDPA_PLUS ? "eigenvalue" : "singular_value";
}

struct Provenance {
    std::string input_sha256;
    std::optional<std::uint64_t> seed;
    bool centered = true;
    bool scaled = false;
    std::size_t missing_cells = 0;
    bool transposed = false;
};

struct Report {
    SelectionResult result;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> singular_values;  // of n^{-1/2} X, non-increasing
    std::optional<double> eps;
    std::optional<std::size_t> n_permutations;
    std::optional<double> percentile;
    std::optional<PaThreshold> pa_threshold;
    std::optional<SpikePower> spike_power;
    std::map<std::string, double> timings_ms;
    Provenance provenance;
};

namespace detail {

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

inline json optional_name(const auto& v) {
    return v ? json(std::string(to_string(*v))) : json(nullptr);
}

} // namespace detail

inline json step_json(const StepRecord& s) {
    return json{{"index", s.index},
                {"statistic", s.statistic},
                {"threshold", s.threshold},
                {"accepted", s.accepted},
                {"note", s.note.empty() ? json(nullptr) : json(s.note)}};
}

inline json to_json(const Report& r) {
    json steps = json::array();
    for (const auto& s : r.result.steps) steps.push_back(step_json(s));
    json timings = json::object();
    for (const auto& [phase, ms] : r.timings_ms) timings[phase] = ms;
    const auto& pv = r.provenance;
    return json{
        {"method", std::string(to_string(r.result.method))},
        {"k", r.result.k},
        {"n", r.n},
        {"p", r.p},
        {"statistic_scale", std::string(statistic_scale(r.result.method))},
        {"steps", steps},
        {"singular_values", r.singular_values},
        {"edge_used", detail::optional_json(r.result.edge_used)},
        {"parameters",
         {{"eps", detail::optional_json(r.eps)},
          {"permutations", detail::optional_json(r.n_permutations)},
          {"percentile", detail::optional_json(r.percentile)},
          {"pa_threshold", detail::optional_name(r.pa_threshold)},
          {"spike_power", detail::optional_name(r.spike_power)}}},
        {"timings", timings},
        {"provenance",
         {{"input_sha256", pv.input_sha256},
          {"seed", detail::optional_json(pv.seed)},
          {"library_version", kVersion},
          {"sd_divisor", kSdDivisor},
          {"centered", pv.centered},
          {"scaled", pv.scaled},
          {"transposed", pv.transposed},
          {"missing_cells", pv.missing_cells}}},
    };
}

/**
 * Plot table with header "series,method,index,value". Series "eigenvalue"
 * holds squared singular values of n^{-1/2}X (method empty); series
 * "threshold" holds each method's per-step threshold on the same scale.
 */
inline void write_plot_data(std::ostream& out, const std::vector<double>& singular_values,
                            const std::vector<SelectionResult>& results) {
    out << "series,method,index,value\n";
    for (std::size_t i = 0; i < singular_values.size(); ++i) {
        out << "eigenvalue,," << (i + 1) << ',' << format_double(singular_values[i] * singular_values[i]) << '\n';
    }
    for (const auto& res : results) {
        const bool squared = statistic_scale(res.method) == "singular_value";
        for (const auto& s : res.steps) {
            const double t = squared ? s.threshold * s.threshold : s.threshold;
            out << "threshold," << to_string(res.method) << ',' << s.index << ',' << format_double(t) << '\n';
        }
    }
}

inline json to_json(const ExperimentResult& e) {
    json cells = json::array();
    for (const auto& c : e.cells) {
        json params = json::object();
        for (const auto& [key, value] : c.params) params[key] = value;
        cells.push_back(json{{"grid", c.grid},
                             {"params", params},
                             {"method", std::string(to_string(c.method))},
                             {"mean_k", c.mean_k},
                             {"sd_k", c.sd_k},
                             {"replicates", c.replicates},
                             {"wall_ms", c.wall_ms},
                             {"ks", c.ks}});
    }
    return json{{"scenario", e.scenario},
                {"seed", e.seed},
                {"replicates", e.replicates},
                {"permutations", e.n_permutations},
                {"pa_threshold", std::string(to_string(e.pa_threshold))},
                {"sd_divisor", kSdDivisor},
                {"library_version", kVersion},
                {"cells", cells}};
}

/// Flat dump with header "grid,method,replicate,k"; replicates are 0-based.
inline void write_experiment_csv(std::ostream& out, const ExperimentResult& e) {
    out << "grid,method,replicate,k\n";
    for (const auto& c : e.cells) {
        for (std::size_t rep = 0; rep < c.ks.size(); ++rep) {
            out << c.grid << ',' << to_string(c.method) << ',' << rep << ',' << c.ks[rep] << '\n';
        }
    }
}

} // namespace dpa
