// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "kron/matrix.hpp"
#include "kron/tensor.hpp"

namespace kron {

/// Shapes of the two Kronecker factors. Valid for a target tensor when the
/// elementwise product shape_a[n] * shape_b[n] equals the target's shape.
struct FactorShapePair {
    Shape shape_a;
    Shape shape_b;
};

/// Throws shape_error (naming the dimension) unless the pair multiplies to
/// `target` elementwise.
void validate_pair(const FactorShapePair& pair, const Shape& target);

/// Kronecker rank for this pair shape: min(prod(shape_a), prod(shape_b)).
std::size_t kronecker_rank(const FactorShapePair& pair);

/// A rank-r_hat sum-of-Kronecker-products approximation of one tensor:
/// target ~ sum_r kron(factors_a[r], factors_b[r]).
struct GkpdDecomposition {
    Shape target_shape;
    FactorShapePair pair_shapes;
    std::size_t r_hat = 0;
    std::vector<DenseTensor> factors_a;
    std::vector<DenseTensor> factors_b;
    /// Sum of the squared singular values discarded by the truncation.
    double singular_tail_sq = 0.0;
    /// Frobenius distance between the target and the reconstruction.
    double achieved_error = 0.0;
};

/// Rearranges w into a (prod(w.shape/shape_b)) x (prod(shape_b)) matrix whose
/// row i is the flattened i-th non-overlapping patch of shape shape_b.
/// Kronecker structure in w becomes rank-1 structure in the result.
Matrix rearrange_w(const DenseTensor& w, const Shape& shape_b);

/// Row-major flattening of a factor-A candidate; the row index order of
/// rearrange_w.
std::vector<double> rearrange_a(const DenseTensor& a);

/// Row-major flattening of a factor-B candidate; the column order of
/// rearrange_w.
std::vector<double> rearrange_b(const DenseTensor& b);

/// Best rank-r_hat sum-of-Kronecker-products approximation of w for the given
/// factor shapes, via truncated SVD of rearrange_w(w, shape_b). The singular
/// weight is split evenly: factor r stores u_r*sqrt(s_r) and v_r*sqrt(s_r).
/// Factors whose singular value falls below numerical rank are exact zeros.
///
/// Throws shape_error for an invalid pair, parameter_error when r_hat is
/// outside [1, kronecker_rank(pair)], numeric_error if the SVD fails.
GkpdDecomposition gkpd_solve(const DenseTensor& w, const FactorShapePair& pair,
                             std::size_t r_hat);

/// Sums kron(factors_a[r], factors_b[r]) into a tensor of target_shape.
DenseTensor reconstruct(const GkpdDecomposition& d);

/// Frobenius distance between w and reconstruct(d).
double reconstruction_error(const DenseTensor& w, const GkpdDecomposition& d);

}  // namespace kron
