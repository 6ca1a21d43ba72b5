// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "kron/error.hpp"
#include "kron/matrix.hpp"

namespace kron {

/// Singular value decomposition m = u * diag(s) * v^T.
///
/// u is m x r and v is n x r with orthonormal columns; s holds the r singular
/// values in non-increasing order. r = min(m, n) for a full decomposition, or
/// the requested rank for a truncated one. Sign convention: the first nonzero
/// entry of each column of u is non-negative.
struct SvdResult {
    Matrix u;
    std::vector<double> s;
    Matrix v;

    std::size_t rank() const { return s.size(); }

    /// u * diag(s) * v^T.
    Matrix reconstruct() const;
};

/// Full SVD via one-sided Jacobi rotations. Deterministic; throws
/// numeric_error on non-finite input or if the sweep cap is exceeded.
SvdResult svd_full(const Matrix& m);

/// Top-`rank` singular triplets of m. `rank` must lie in [1, min(rows, cols)].
SvdResult svd_truncated(const Matrix& m, std::size_t rank);

}  // namespace kron
