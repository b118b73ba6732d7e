#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "errors.hpp"
#include "matrix.hpp"
#include "numeric.hpp"

namespace dpa {

struct IngestOptions {
    char delimiter = ',';
    bool has_header = false;
    std::string missing_token = "NA";
    bool center = true;
    bool scale = false;
    bool impute_missing_as_mean = true;
    /// File rows are features and columns are samples.
    bool transpose = false;
};

struct IngestSummary {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t missing_cells = 0;
    bool centered = false;
    bool scaled = false;
};

struct Ingested {
    DataMatrix data;
    IngestSummary summary;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

/// Parses a full field as a finite double; returns false otherwise.
inline bool parse_double(std::string_view field, double& value) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return false;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(value);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

} // namespace detail

/**
 * Parse a delimited numeric table and standardize it column-wise.
 *
 * Column means and standard deviations (divisor observed - 1) ignore missing
 * cells. After centering/scaling, missing cells take the column mean, which
 * is 0 when centered. Rows and columns in error messages are 1-based file
 * positions.
 */
inline Ingested ingest_text(std::string_view text, const IngestOptions& opts = {}) {
    const auto lines = detail::lines_of(text);
    std::size_t first = 0;
    std::size_t width = 0;
    if (opts.has_header) {
        if (lines.empty()) {
            throw ParseError(1, 1, "missing header line");
        }
        width = detail::split(lines[0], opts.delimiter).size();
        first = 1;
    }

    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> missing;
    for (std::size_t li = first; li < lines.size(); ++li) {
        const auto fields = detail::split(lines[li], opts.delimiter);
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw RaggedRows(li + 1, fields.size(), width);
        }
        auto& row = values.emplace_back(width);
        auto& row_missing = missing.emplace_back(width, false);
        for (std::size_t j = 0; j < width; ++j) {
            if (fields[j] == opts.missing_token) {
                row_missing[j] = true;
                row[j] = 0.0;
            } else if (!detail::parse_double(fields[j], row[j])) {
                throw ParseError(li + 1, j + 1, "'" + std::string(fields[j]) + "' is not a finite number");
            }
        }
    }
    if (values.empty()) {
        throw InputError("no data rows");
    }

    const std::size_t file_rows = values.size();
    const std::size_t n = opts.transpose ? width : file_rows;
    const std::size_t p = opts.transpose ? file_rows : width;
    Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    std::vector<bool> miss(n * p);  // column-major
    for (std::size_t i = 0; i < file_rows; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            const std::size_t r = opts.transpose ? j : i;
            const std::size_t c = opts.transpose ? i : j;
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = values[i][j];
            miss[c * n + r] = missing[i][j];
        }
    }

    IngestSummary summary{n, p, 0, opts.center, opts.scale};
    for (std::size_t j = 0; j < p; ++j) {
        auto col = x.col(static_cast<Eigen::Index>(j));
        auto is_missing = [&](std::size_t i) { return bool(miss[j * n + i]); };
        std::size_t observed = 0;
        CompensatedSum sum;
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_missing(i)) {
                sum += col[static_cast<Eigen::Index>(i)];
                ++observed;
            }
        }
        summary.missing_cells += n - observed;
        if (observed == 0) {
            throw InputError("column " + std::to_string(j + 1) + " has no observed values");
        }
        if (observed < n && !opts.impute_missing_as_mean) {
            throw InputError("column " + std::to_string(j + 1) + " has missing values and imputation is off");
        }
        double mean = sum.value() / static_cast<double>(observed);
        // Residual mean pass, matching standardize().
        CompensatedSum resid;
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_missing(i)) resid += col[static_cast<Eigen::Index>(i)] - mean;
        }
        mean += resid.value() / static_cast<double>(observed);

        double sd = 1.0;
        if (opts.scale) {
            CompensatedSum ss;
            for (std::size_t i = 0; i < n; ++i) {
                if (!is_missing(i)) {
                    const double d = col[static_cast<Eigen::Index>(i)] - mean;
                    ss += d * d;
                }
            }
            sd = observed > 1 ? std::sqrt(ss.value() / static_cast<double>(observed - 1)) : 0.0;
            if (!(sd > 0.0)) {
                throw ZeroVarianceColumn(j);
            }
        }
        const double shift = opts.center ? mean : 0.0;
        const double fill = opts.center ? 0.0 : mean / sd;
        for (std::size_t i = 0; i < n; ++i) {
            auto& cell = col[static_cast<Eigen::Index>(i)];
            cell = is_missing(i) ? fill : (cell - shift) / sd;
        }
    }
    return Ingested{DataMatrix(std::move(x)), summary};
}

inline Ingested ingest_file(const std::string& path, const IngestOptions& opts = {}) {
    return ingest_text(detail::read_file(path), opts);
}

inline DataMatrix ingest(const std::string& path, const IngestOptions& opts = {}) {
    return ingest_file(path, opts).data;
}

/// Shortest round-trip text for a double.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/// Rows of `x` as delimited text, values in shortest round-trip form.
inline void write_delimited(std::ostream& out, const Matrix& x, char delimiter = ',') {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (j > 0) out << delimiter;
            out << format_double(x(i, j));
        }
        out << '\n';
    }
}

inline void write_delimited(const std::string& path, const Matrix& x, char delimiter = ',') {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
    write_delimited(out, x, delimiter);
}

/// Two-column "weight,atom" text; '#' starts a comment line.
inline VarianceDistribution parse_atoms(std::string_view text) {
    std::vector<double> weights;
    std::vector<double> atoms;
    const auto lines = detail::lines_of(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const auto line = detail::trim(lines[li]);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = detail::split(line, ',');
        if (fields.size() != 2) {
            throw RaggedRows(li + 1, fields.size(), 2);
        }
        double w = 0.0;
        double a = 0.0;
        if (!detail::parse_double(fields[0], w)) throw ParseError(li + 1, 1, "bad weight");
        if (!detail::parse_double(fields[1], a)) throw ParseError(li + 1, 2, "bad atom");
        weights.push_back(w);
        atoms.push_back(a);
    }
    return VarianceDistribution(std::move(weights), std::move(atoms));
}

inline VarianceDistribution read_atoms(const std::string& path) { return parse_atoms(detail::read_file(path)); }

/// Lower-case hex SHA-256 of `bytes`.
inline std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

inline std::string sha256_file(const std::string& path) { return sha256_hex(detail::read_file(path)); }

} // namespace dpa
