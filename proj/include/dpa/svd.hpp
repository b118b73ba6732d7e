#pragma once

#include <algorithm>
#include <string>

#include <lapacke.h>

#include "errors.hpp"
#include "matrix.hpp"

namespace dpa {

/// Thin SVD X = U diag(s) V^T with s non-increasing.
struct SvdResult {
    Vector singular_values;  // length min(n, p)
    Matrix left_vectors;     // n x min(n, p)
    Matrix right_vectors;    // p x min(n, p)
};

namespace detail {

inline void check_gesdd(lapack_int info) {
    if (info > 0) {
        throw ConvergenceFailure("dgesdd did not converge (" + std::to_string(info) + " superdiagonals)");
    }
    if (info < 0) {
        throw ConvergenceFailure("dgesdd rejected argument " + std::to_string(-info));
    }
}

} // namespace detail

/// Singular values only, non-increasing. LAPACK dgesdd with jobz = 'N'.
inline Vector singular_values(const Matrix& x) {
    Matrix work = x;
    const auto n = static_cast<lapack_int>(x.rows());
    const auto p = static_cast<lapack_int>(x.cols());
    Vector s(std::min(n, p));
    detail::check_gesdd(
        LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', n, p, work.data(), n, s.data(), nullptr, 1, nullptr, 1));
    return s;
}

inline Vector singular_values(const DataMatrix& x) { return singular_values(x.values()); }

/// Full thin decomposition, LAPACK dgesdd with jobz = 'S'.
inline SvdResult svd(const Matrix& x) {
    Matrix work = x;
    const auto n = static_cast<lapack_int>(x.rows());
    const auto p = static_cast<lapack_int>(x.cols());
    const auto r = std::min(n, p);
    SvdResult out{Vector(r), Matrix(n, r), Matrix(r, p)};
    detail::check_gesdd(LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', n, p, work.data(), n, out.singular_values.data(),
                                       out.left_vectors.data(), n, out.right_vectors.data(), r));
    out.right_vectors.transposeInPlace();
    return out;
}

inline SvdResult svd(const DataMatrix& x) { return svd(x.values()); }

} // namespace dpa
