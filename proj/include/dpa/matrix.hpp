#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numeric.hpp"

namespace dpa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/**
 * Dense n x p data matrix, rows are samples and columns are features.
 *
 * Construction validates n >= 2, p >= 1 and that every entry is finite, so
 * downstream code never re-checks. Missing values must be resolved before
 * a DataMatrix is built (see io.hpp).
 */
class DataMatrix {
public:
    explicit DataMatrix(Matrix values) : values_(std::move(values)) {
        if (values_.rows() < 2) {
            throw DimensionMismatch("data matrix needs at least 2 rows, got " + std::to_string(values_.rows()));
        }
        if (values_.cols() < 1) {
            throw DimensionMismatch("data matrix needs at least 1 column");
        }
        if (!values_.allFinite()) {
            throw DomainError("data matrix contains non-finite entries");
        }
    }

    const Matrix& values() const noexcept { return values_; }
    std::size_t n() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    std::size_t p() const noexcept { return static_cast<std::size_t>(values_.cols()); }
    std::size_t min_dim() const noexcept { return std::min(n(), p()); }

    /// p / n
    double aspect_ratio() const noexcept { return static_cast<double>(p()) / static_cast<double>(n()); }

private:
    Matrix values_;
};

/// Divisor used for the sample standard deviation in standardize().
/// Reported in output metadata.
inline constexpr const char* kSdDivisor = "n-1";

/**
 * Center every column to mean zero and, if `scale`, divide by the sample
 * standard deviation (divisor n - 1). Throws ZeroVarianceColumn when scaling
 * a constant column.
 */
inline DataMatrix standardize(const DataMatrix& x, bool scale) {
    Matrix out = x.values();
    const auto n = out.rows();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        auto col = out.col(j);
        const double mean = col.mean();
        col.array() -= mean;
        // Second pass removes the residual mean left by rounding.
        col.array() -= col.mean();
        if (scale) {
            const double ss = col.squaredNorm();
            const double sd = std::sqrt(ss / static_cast<double>(n - 1));
            if (!(sd > 0.0)) {
                throw ZeroVarianceColumn(static_cast<std::size_t>(j));
            }
            col /= sd;
        }
    }
    return DataMatrix(std::move(out));
}

/**
 * Weighted point-mass distribution H = sum_j w_j delta_{atom_j}.
 *
 * Weights are strictly positive and sum to one (within 1e-12); atoms are
 * non-negative. Order is preserved exactly as given.
 */
class VarianceDistribution {
public:
    VarianceDistribution(std::vector<double> weights, std::vector<double> atoms)
        : weights_(std::move(weights)), atoms_(std::move(atoms)) {
        if (weights_.size() != atoms_.size()) {
            throw DimensionMismatch("weights and atoms differ in length");
        }
        if (weights_.empty()) {
            throw DomainError("variance distribution needs at least one atom");
        }
        CompensatedSum total;
        for (std::size_t j = 0; j < weights_.size(); ++j) {
            if (!(weights_[j] > 0.0) || !std::isfinite(weights_[j])) {
                throw DomainError("weight " + std::to_string(j) + " is not a positive finite number");
            }
            if (!(atoms_[j] >= 0.0) || !std::isfinite(atoms_[j])) {
                throw DomainError("atom " + std::to_string(j) + " is not a non-negative finite number");
            }
            total += weights_[j];
        }
        if (std::abs(total.value() - 1.0) > 1e-12) {
            throw DomainError("weights sum to " + std::to_string(total.value()) + ", expected 1");
        }
    }

    /// Equal weights 1/p on the given atoms.
    static VarianceDistribution uniform(std::vector<double> atoms) {
        std::vector<double> w(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
        return VarianceDistribution(std::move(w), std::move(atoms));
    }

    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> atoms() const noexcept { return atoms_; }
    std::size_t size() const noexcept { return atoms_.size(); }

    double max_atom() const noexcept {
        double m = 0.0;
        for (double a : atoms_) {
            m = std::max(m, a);
        }
        return m;
    }

private:
    std::vector<double> weights_;
    std::vector<double> atoms_;
};

/// Column second moments (1/n) sum_i X_ij^2, with raw atoms (possibly all zero).
inline std::vector<double> column_second_moments(const Matrix& x) {
    std::vector<double> atoms(static_cast<std::size_t>(x.cols()));
    const double inv_n = 1.0 / static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        atoms[static_cast<std::size_t>(j)] = x.col(j).squaredNorm() * inv_n;
    }
    return atoms;
}

/// Empirical distribution of diag(X^T X / n), weights 1/p, column order kept.
inline VarianceDistribution variance_distribution(const DataMatrix& x) {
    auto atoms = column_second_moments(x.values());
    bool any_positive = false;
    for (double a : atoms) {
        any_positive = any_positive || a > 0.0;
    }
    if (!any_positive) {
        throw AllZeroMatrix();
    }
    return VarianceDistribution::uniform(std::move(atoms));
}

} // namespace dpa
