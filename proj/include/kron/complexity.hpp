// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "kron/gkpd.hpp"
#include "kron/kronconv.hpp"
#include "kron/tensor.hpp"

namespace kron {

/// One factor-shape choice for a 4-D conv weight [F, C, Kh, Kw], annotated
/// with its cost model and, once solved, its relative reconstruction error.
struct ConfigCandidate {
    FactorShapePair pair;
    std::size_t r_hat = 1;
    /// Stored scalars: r_hat * (prod(shape_a) + prod(shape_b)).
    unsigned long long params = 0;
    /// Multiply-accumulates per output position of the two-stage path:
    /// r_hat * (F2 * prod(shape_a) + C1 * prod(shape_b)).
    unsigned long long macs_per_position = 0;
    double memory_reduction = 0.0;
    double flops_reduction = 0.0;
    /// Frobenius reconstruction error relative to the target's norm.
    std::optional<double> error;
};

/// Ratio of uncompressed to stored parameter count:
/// prod(shape_a) * prod(shape_b) / (r_hat * (prod(shape_a) + prod(shape_b))).
double memory_reduction(const FactorShapePair& pair, std::size_t r_hat);

/// Ratio of direct-convolution MACs to two-stage MACs per output position:
/// prod(shape_a) * prod(shape_b) /
/// (r_hat * (F2 * prod(shape_a) + C1 * prod(shape_b))).
double flops_reduction(const FactorShapePair& pair, std::size_t r_hat);

/// All factor-shape pairs built from per-dimension divisor splits of w_shape,
/// crossed with r_hat in [r_hat_lo, r_hat_hi] capped at the Kronecker rank,
/// keeping candidates with flops_reduction >= min_flops_reduction. Ordered by
/// (params, shape_a, r_hat). May be empty.
std::vector<ConfigCandidate> enumerate_candidates(const Shape& w_shape,
                                                  double min_flops_reduction,
                                                  std::size_t r_hat_lo,
                                                  std::size_t r_hat_hi);

struct SelectionResult {
    /// All candidates with errors filled in, sorted by
    /// (error, params, shape_a, r_hat).
    std::vector<ConfigCandidate> candidates;
    /// Index of the winning candidate (always 0 after sorting).
    std::size_t winner = 0;
    /// Solved decomposition of the winner.
    GkpdDecomposition decomposition;
};

/// Solves every candidate against w and picks the one with the smallest
/// reconstruction error; ties break by (params, shape_a, r_hat).
SelectionResult select_configuration(const DenseTensor& w,
                                     std::vector<ConfigCandidate> candidates);

/// Spatial extent of the convolution input plus its geometry; enough to turn
/// per-position MAC figures into totals.
struct InputGeometry {
    std::size_t in_h = 0;
    std::size_t in_w = 0;
    ConvGeometry geom;
};

/// Total multiply-accumulates of conv2d_direct for this weight shape.
unsigned long long count_macs_direct(const Shape& w_shape, const InputGeometry& in);

/// Total multiply-accumulates of the two-stage factored path at rank r_hat.
unsigned long long count_macs_kron(const FactorShapePair& pair, std::size_t r_hat,
                                   const InputGeometry& in);

}  // namespace kron
