// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "kron/gkpd.hpp"
#include "kron/matrix.hpp"
#include "kron/tensor.hpp"

namespace kron {

/// Stride and symmetric zero-padding of a 2D convolution.
/// Output spatial extent is floor((in + 2*pad - kernel) / stride) + 1.
struct ConvGeometry {
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::size_t pad_h = 0;
    std::size_t pad_w = 0;
};

/// Kronecker factors of a conv weight, both laid out [F, C, Kh, Kw].
/// The represented weight has the elementwise-product shape.
struct ConvFactorPair {
    DenseTensor a;
    DenseTensor b;
};

/// Accumulates multiply-accumulate counts across forward calls.
struct MacCounter {
    unsigned long long macs = 0;
};

/// Plain 2D convolution (cross-correlation, no kernel flip).
/// w: [F, C, Kh, Kw], x: [C, H, W] -> [F, H', W'].
DenseTensor conv2d_direct(const DenseTensor& w, const DenseTensor& x,
                          const ConvGeometry& g, MacCounter* counter = nullptr);

/// Convolution with the weight kron(pair.a, pair.b), computed on the factors
/// without forming the product. Stage 1 slides pair.b over the padded input at
/// channel stride C2 and spatial stride 1; stage 2 convolves each of the F2
/// intermediate maps with pair.a at spatial dilation (Kh2, Kw2) and the
/// original stride. Output channel f = f1 * F2 + f2.
DenseTensor kron_conv_forward(const ConvFactorPair& pair, const DenseTensor& x,
                              const ConvGeometry& g, MacCounter* counter = nullptr);

/// Sum of kron_conv_forward over the pairs; all pairs must share shapes.
DenseTensor kron_conv_sum_forward(const std::vector<ConvFactorPair>& pairs,
                                  const DenseTensor& x, const ConvGeometry& g,
                                  MacCounter* counter = nullptr);

DenseTensor kron_conv_sum_forward(const GkpdDecomposition& d, const DenseTensor& x,
                                  const ConvGeometry& g, MacCounter* counter = nullptr);

/// Views a decomposition of a 4-D weight as convolution factor pairs.
std::vector<ConvFactorPair> as_conv_factor_pairs(const GkpdDecomposition& d);

/// (kron(a, b)) * x without forming the product matrix: x is reshaped
/// column-stacked into X (cols-of-b by cols-of-a), Y = b * X * a^T, and Y is
/// flattened column-stacked again.
std::vector<double> kron_matvec(const Matrix& a, const Matrix& b,
                                const std::vector<double>& x);

/// Recombines split_index output: quotient * divisor + remainder.
std::size_t merge_index(std::size_t quotient, std::size_t remainder, std::size_t divisor);

using IndexMerge = std::size_t (*)(std::size_t quotient, std::size_t remainder,
                                   std::size_t divisor);

/// Checks, for every index i into kron(pair.a, pair.b) =: W, the exact scalar
/// identity W[i] * x[i + offsets] == A[j] * B[k] * x[m + offsets], where j/k
/// are the per-dimension quotient/remainder of i and m recombines them via
/// `merge`. With merge_index this is the index identity that makes the
/// factored convolution exact; a corrupted merge makes it fail. A merged
/// position falling outside x counts as failure. Throws shape_error when the
/// offsets do not keep i + offsets inside x.
bool lemma1_check(const ConvFactorPair& pair, const DenseTensor& x,
                  const MultiIndex& offsets, IndexMerge merge = merge_index);

}  // namespace kron
