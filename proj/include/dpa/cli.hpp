#pragma once

#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "errors.hpp"
#include "io.hpp"
#include "report.hpp"
#include "selectors.hpp"
#include "simulate.hpp"
#include "spectral_edge.hpp"
#include "svd.hpp"
#include "version.hpp"

namespace dpa {

namespace cli_detail {

using clock = std::chrono::steady_clock;

inline double ms_since(clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
}

struct IngestFlags {
    bool scale = false;
    bool no_center = false;
    bool transpose = false;
    bool header = false;
    std::string delimiter = ",";
    std::string missing = "NA";

    void add(CLI::App& app) {
        app.add_flag("--scale", scale, "Scale columns to unit standard deviation");
        app.add_flag("--no-center", no_center, "Do not center columns");
        app.add_flag("--transpose", transpose, "Input rows are features, columns are samples");
        app.add_flag("--header", header, "Skip the first line as a header");
        app.add_option("--delimiter", delimiter, "Field delimiter (one character, \\t for tab)");
        app.add_option("--missing", missing, "Missing-value token");
    }

    IngestOptions options() const {
        IngestOptions o;
        if (delimiter == "\\t") {
            o.delimiter = '\t';
        } else if (delimiter.size() == 1) {
            o.delimiter = delimiter[0];
        } else {
            throw InputError("delimiter must be a single character");
        }
        o.has_header = header;
        o.missing_token = missing;
        o.center = !no_center;
        o.scale = scale;
        o.transpose = transpose;
        return o;
    }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f || !(f << text)) {
        throw InputError("cannot write '" + path + "'");
    }
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (auto field : detail::split(s, ',')) {
        if (!field.empty()) out.emplace_back(field);
    }
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw InputError("'" + key + "' expects a non-negative integer, got '" + std::string(text) + "'");
    }
    return v;
}

struct SimulateArgs {
    std::string scenario;
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> permutations;
    std::string pa_threshold;
    std::string methods;
    std::string grid;
};

/// key=value lines; '#' comments. Flags given on the command line win.
inline void apply_config(const std::string& path, SimulateArgs& args) {
    const std::string text = detail::read_file(path);
    const auto lines = detail::lines_of(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto line = detail::trim(lines[li]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(li + 1, 1, "expected key=value");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key == "scenario") {
            if (args.scenario.empty()) args.scenario = value;
        } else if (key == "replicates") {
            if (!args.replicates) args.replicates = parse_u64(key, value);
        } else if (key == "seed") {
            if (!args.seed) args.seed = parse_u64(key, value);
        } else if (key == "permutations") {
            if (!args.permutations) args.permutations = parse_u64(key, value);
        } else if (key == "pa_threshold") {
            if (args.pa_threshold.empty()) args.pa_threshold = value;
        } else if (key == "methods") {
            if (args.methods.empty()) args.methods = value;
        } else if (key == "grid") {
            if (args.grid.empty()) args.grid = value;
        } else {
            throw ParseError(li + 1, 1, "unknown key '" + key + "'");
        }
    }
}

inline ExperimentOverrides overrides_from(const SimulateArgs& args) {
    ExperimentOverrides o;
    o.replicates = args.replicates;
    o.seed = args.seed;
    o.n_permutations = args.permutations;
    if (!args.pa_threshold.empty()) o.pa_threshold = parse_pa_threshold(args.pa_threshold);
    if (!args.methods.empty()) {
        std::vector<Method> ms;
        for (const auto& name : split_list(args.methods)) ms.push_back(parse_method(name));
        o.methods = ms;
    }
    if (!args.grid.empty()) {
        std::vector<std::size_t> idx;
        for (const auto& g : split_list(args.grid)) idx.push_back(parse_u64("grid", g));
        o.grid_indices = idx;
    }
    return o;
}

inline std::string csv_path_for(const std::string& json_path) {
    const auto slash = json_path.find_last_of('/');
    const auto dot = json_path.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
        return json_path.substr(0, dot) + ".csv";
    }
    return json_path + ".csv";
}

} // namespace cli_detail

/**
 * Entry point of the command-line tool with injectable streams.
 * Exit codes: 0 success, 2 input or usage error, 3 numerical failure.
 */
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli_detail;

    CLI::App app{"Factor-count selection by parallel analysis and its deterministic variants"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // select
    auto* sel = app.add_subcommand("select", "Estimate the number of factors in a data matrix");
    std::string method_name;
    std::string input;
    double eps = 0.0;
    std::size_t permutations = 19;
    double percentile = 100.0;
    std::uint64_t seed = 0;
    std::string json_path;
    std::string plot_path;
    std::string pa_threshold_name = "sequential";
    std::string spike_power_name = "linear";
    IngestFlags sel_ingest;
    sel->add_option("--method", method_name, "pa, dpa, ddpa or ddpa+")->required();
    sel->add_option("--input", input, "Delimited data matrix, rows are samples")->required();
    sel->add_option("--eps", eps, "Relative margin above the edge (dpa, ddpa)");
    sel->add_option("--permutations", permutations, "Permutations for pa");
    sel->add_option("--percentile", percentile, "Null percentile for pa, in (0, 100]");
    sel->add_option("--seed", seed, "Seed for pa permutations");
    sel->add_option("--json", json_path, "Write the report here instead of stdout");
    sel->add_option("--plot-data", plot_path, "Write eigenvalues and all method thresholds as CSV");
    sel->add_option("--pa-threshold", pa_threshold_name, "pa reference: sequential or top");
    sel->add_option("--spike-power", spike_power_name, "ddpa+ spike term: linear or squared");
    sel_ingest.add(*sel);

    // edge
    auto* edge = app.add_subcommand("edge", "Upper edge of a Marchenko-Pastur law");
    double gamma = 0.0;
    std::string atoms_path;
    std::string edge_input;
    bool coalesce_atoms = false;
    IngestFlags edge_ingest;
    edge->add_option("--gamma", gamma, "Aspect ratio p/n")->required();
    auto* atoms_opt = edge->add_option("--atoms", atoms_path, "weight,atom file");
    auto* input_opt = edge->add_option("--input", edge_input, "Data matrix; atoms are its column second moments");
    atoms_opt->excludes(input_opt);
    edge->add_flag("--coalesce", coalesce_atoms, "Merge equal atoms before solving");
    edge_ingest.add(*edge);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Run a simulation scenario");
    SimulateArgs sargs;
    std::string out_path;
    std::string csv_path;
    std::string config_path;
    bool list = false;
    sim->add_option("--scenario", sargs.scenario, "Scenario name");
    sim->add_option("--replicates", sargs.replicates, "Replicates per grid point");
    sim->add_option("--seed", sargs.seed, "Master seed");
    sim->add_option("--permutations", sargs.permutations, "Permutations for pa");
    sim->add_option("--pa-threshold", sargs.pa_threshold, "sequential or top");
    sim->add_option("--methods", sargs.methods, "Comma-separated methods");
    sim->add_option("--grid", sargs.grid, "Comma-separated 0-based grid indices");
    sim->add_option("--out", out_path, "JSON result path (default stdout)");
    sim->add_option("--csv", csv_path, "CSV dump path (default: --out with .csv)");
    sim->add_option("--config", config_path, "key=value file; command-line flags take precedence");
    sim->add_flag("--list", list, "Print scenario names and exit");

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e, out, err);
            return code == 0 ? 0 : 2;
        }

        if (sel->parsed()) {
            const auto t_start = clock::now();
            const Method method = parse_method(method_name);
            const IngestOptions iopts = sel_ingest.options();
            PaOptions pa;
            pa.n_permutations = permutations;
            pa.percentile = percentile;
            pa.seed = seed;
            pa.threshold = parse_pa_threshold(pa_threshold_name);
            DdpaPlusOptions plus;
            plus.spike_power = parse_spike_power(spike_power_name);

            Report report;
            auto t0 = clock::now();
            const std::string bytes = detail::read_file(input);
            const Ingested in = ingest_text(bytes, iopts);
            report.timings_ms["ingest"] = ms_since(t0);
            report.n = in.data.n();
            report.p = in.data.p();
            report.provenance.input_sha256 = sha256_hex(bytes);
            report.provenance.centered = in.summary.centered;
            report.provenance.scaled = in.summary.scaled;
            report.provenance.missing_cells = in.summary.missing_cells;
            report.provenance.transposed = iopts.transpose;

            auto run = [&](Method m) {
                switch (m) {
                case Method::PA: return pa_select(in.data, pa);
                case Method::DPA: return dpa_select(in.data, eps);
                case Method::DDPA: return ddpa_select(in.data, eps);
                case Method::DDPA_PLUS: return ddpa_plus_select(in.data, plus);
                }
                throw InputError("unknown method");
            };

            t0 = clock::now();
            report.result = run(method);
            report.timings_ms["select"] = ms_since(t0);
            report.provenance.seed = report.result.seed;
            if (method == Method::PA) {
                report.n_permutations = permutations;
                report.percentile = percentile;
                report.pa_threshold = pa.threshold;
            }
            if (method == Method::DPA || method == Method::DDPA) report.eps = eps;
            if (method == Method::DDPA_PLUS) report.spike_power = plus.spike_power;

            t0 = clock::now();
            const Vector sv = singular_values(in.data) / std::sqrt(static_cast<double>(in.data.n()));
            report.singular_values.assign(sv.data(), sv.data() + sv.size());
            report.timings_ms["spectrum"] = ms_since(t0);

            if (!plot_path.empty()) {
                t0 = clock::now();
                std::vector<SelectionResult> all;
                for (Method m : {Method::PA, Method::DPA, Method::DDPA, Method::DDPA_PLUS}) {
                    all.push_back(m == method ? report.result : run(m));
                }
                std::ostringstream table;
                write_plot_data(table, report.singular_values, all);
                write_text(plot_path, table.str());
                report.timings_ms["plot_data"] = ms_since(t0);
            }
            report.timings_ms["total"] = ms_since(t_start);

            const std::string text = to_json(report).dump(2) + "\n";
            if (json_path.empty()) {
                out << text;
            } else {
                write_text(json_path, text);
                out << to_string(method) << " k=" << report.result.k << "\n";
            }
            return 0;
        }

        if (edge->parsed()) {
            if (atoms_path.empty() && edge_input.empty()) {
                throw InputError("edge needs --atoms or --input");
            }
            const VarianceDistribution h =
                !atoms_path.empty() ? read_atoms(atoms_path)
                                    : variance_distribution(ingest(edge_input, edge_ingest.options()));
            EdgeOptions eopts;
            eopts.coalesce = coalesce_atoms;
            const EdgeSolution s = upper_edge(gamma, h, eopts);
            out << json{{"edge", s.edge}, {"v_star", s.v_star}, {"iterations", s.iterations}, {"residual", s.residual}}
                       .dump(2)
                << "\n";
            return 0;
        }

        if (sim->parsed()) {
            if (list) {
                for (const auto& name : scenario_names()) out << name << "\n";
                return 0;
            }
            if (!config_path.empty()) apply_config(config_path, sargs);
            if (sargs.scenario.empty()) {
                throw InputError("simulate needs --scenario (see --list)");
            }
            const ScenarioConfig cfg = scenario_config(sargs.scenario);
            const ExperimentOverrides ov = overrides_from(sargs);
            std::ostream& table = out_path.empty() ? err : out;
            table << std::left << std::setw(22) << "grid" << std::setw(7) << "method" << std::right << std::setw(9)
                  << "mean_k" << std::setw(9) << "sd_k" << std::setw(12) << "wall_ms" << "\n";
            const ExperimentResult res = run_experiment(cfg, ov, [&](const CellResult& c) {
                table << std::left << std::setw(22) << c.grid << std::setw(7) << to_string(c.method) << std::right
                      << std::fixed << std::setprecision(3) << std::setw(9) << c.mean_k << std::setw(9) << c.sd_k
                      << std::setprecision(1) << std::setw(12) << c.wall_ms << "\n";
                table << std::defaultfloat;
            });
            const std::string text = to_json(res).dump(2) + "\n";
            if (out_path.empty()) {
                out << text;
            } else {
                write_text(out_path, text);
            }
            const std::string csv_target = !csv_path.empty() ? csv_path : out_path.empty() ? "" : csv_path_for(out_path);
            if (!csv_target.empty()) {
                std::ostringstream csv;
                write_experiment_csv(csv, res);
                write_text(csv_target, csv.str());
            }
            return 0;
        }
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

} // namespace dpa
